""" Adapters between the protocol cores and a datapath.

DESCRIPTION
    The simulator and the UDP transport feed the cores through the same
    two adapters: every inbound message and every clock tick goes through
    SenderEndpoint / ReceiverEndpoint, which return the messages to put
    on the wire. With recording switched on, an endpoint keeps the exact
    call sequence it has seen, so that a run can be replayed against a
    fresh core.

    The handshake helpers at the bottom implement the parameter
    negotiation of SYN / SYNACK.
"""
import logging
from typing import List, Optional, Tuple

from ctcp.exceptions import ContractViolationException
from ctcp.models.message import AckPacket, DataPacket, Handshake, Message, MessageType
from ctcp.models.parameters import CtcpParameters
from ctcp.receiver import ReceiverState
from ctcp.sender import SenderState

logger = logging.getLogger("ctcp.endpoint")

# (kind, time, path_id, message)
Call = Tuple[str, float, Optional[int], Optional[Message]]

# (path_id, message)
Outbound = Tuple[int, Message]


class SenderEndpoint:
    """Drives a SenderState.

    Args:
    ----
    - state (SenderState): the sender core
    - record (bool): keep the inbound call sequence in `calls`
    """

    def __init__(self, state: SenderState, record: bool = False):
        self.state = state
        self.calls: Optional[List[Call]] = [] if record else None

    def on_message(self, path_id: int, msg: Message, now: float) -> List[Outbound]:
        """Process one inbound message and transmit what it allows"""
        if self.calls is not None:
            self.calls.append(("message", now, path_id, msg))
        if not isinstance(msg, AckPacket):
            logger.debug("Sender ignores %s on path %d", type(msg).__name__, path_id)
            return []
        self.state.on_ack(path_id, msg, now)
        return self._transmit(now, first=path_id)

    def poll(self, now: float) -> List[Outbound]:
        """Transmit on every path without any inbound event"""
        if self.calls is not None:
            self.calls.append(("poll", now, None, None))
        return self._transmit(now)

    def on_tick(self, now: float) -> List[Outbound]:
        """Run the timeout check of every path and transmit"""
        if self.calls is not None:
            self.calls.append(("tick", now, None, None))
        for path in self.state.paths:
            self.state.on_tick(path.path_id, now)
        return self._transmit(now)

    def _transmit(self, now: float, first: int = 0) -> List[Outbound]:
        # the path that got the ACK goes first; a block window slide may
        # also unblock the others
        count = len(self.state.paths)
        outbound: List[Outbound] = []
        for offset in range(count):
            path_id = (first + offset) % count
            outbound.extend(
                (path_id, packet) for packet in self.state.transmit_all(path_id, now)
            )
        return outbound

    @property
    def is_complete(self) -> bool:
        return self.state.is_complete


class ReceiverEndpoint:
    """Drives a ReceiverState.

    Args:
    ----
    - state (ReceiverState): the receiver core
    - record (bool): keep the inbound call sequence in `calls`
    """

    def __init__(self, state: ReceiverState, record: bool = False):
        self.state = state
        self.calls: Optional[List[Call]] = [] if record else None

    def on_message(self, path_id: int, msg: Message, now: float) -> List[Outbound]:
        if self.calls is not None:
            self.calls.append(("message", now, path_id, msg))
        if not isinstance(msg, DataPacket):
            logger.debug("Receiver ignores %s on path %d", type(msg).__name__, path_id)
            return []
        # ACKs travel back on the path the data came in on
        return [(path_id, self.state.on_data(msg, now))]

    def on_tick(self, now: float) -> List[Outbound]:
        if self.calls is not None:
            self.calls.append(("tick", now, None, None))
        return []

    def read_delivered(self) -> bytes:
        return self.state.read_delivered()

    @property
    def is_complete(self) -> bool:
        return self.state.is_complete


def replay(endpoint, calls: List[Call]) -> List[Outbound]:
    """
    Feed a recorded call sequence into a fresh endpoint.

    Returns:
    -------
    - List[Outbound]: every message the endpoint produced, in order
    """
    outbound: List[Outbound] = []
    for kind, now, path_id, msg in calls:
        if kind == "tick":
            outbound.extend(endpoint.on_tick(now))
        elif kind == "poll":
            outbound.extend(endpoint.poll(now))
        else:
            outbound.extend(endpoint.on_message(path_id, msg, now))
    return outbound


# ----------------------------------------------------------------------
# handshake


def make_syn(params: CtcpParameters, path_id: int = 0) -> Handshake:
    """SYN carrying the receiver's proposal"""
    return Handshake(
        msg_type=MessageType.SYN,
        path_id=path_id,
        blksize=params.blksize,
        numblks=params.numblks,
        payload_size=params.payload_size,
    )


def answer_syn(
    syn: Handshake, params: CtcpParameters, stream_length: int
) -> Tuple[CtcpParameters, Handshake]:
    """
    Negotiate the connection parameters on the sender.

    numblks is the smaller of both proposals; blksize and payload_size
    are the sender's.

    Returns:
    -------
    - Tuple[CtcpParameters, Handshake]: the negotiated parameters and
        the SYNACK to send back
    """
    if syn.msg_type != MessageType.SYN:
        raise ContractViolationException(f"expected SYN, got {syn.msg_type.name}")
    negotiated = params.model_copy(update={"numblks": min(params.numblks, syn.numblks)})
    synack = Handshake(
        msg_type=MessageType.SYNACK,
        path_id=syn.path_id,
        blksize=negotiated.blksize,
        numblks=negotiated.numblks,
        payload_size=negotiated.payload_size,
        stream_length=stream_length,
    )
    return negotiated, synack


def accept_synack(synack: Handshake, params: CtcpParameters) -> CtcpParameters:
    """Adopt the parameters the sender announced in its SYNACK"""
    if synack.msg_type != MessageType.SYNACK:
        raise ContractViolationException(
            f"expected SYNACK, got {synack.msg_type.name}"
        )
    return params.model_copy(
        update={
            "blksize": synack.blksize,
            "numblks": synack.numblks,
            "payload_size": synack.payload_size,
        }
    )
