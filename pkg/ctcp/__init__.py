from ._version import __author__, __version__
from .endpoint import ReceiverEndpoint, SenderEndpoint
from .models.parameters import CtcpParameters
from .netsim import run_scenario, run_transfer
from .receiver import ReceiverState
from .sender import SenderState
from .udp_transport import CtcpConnection, open_connection
