""" Module for all exceptions
"""
from typing import List, Optional


class CtcpException(Exception):
    """Base Exception for all Exceptions raised by
    the CTCP engine

    """

    cli_message_header: str = "CTCP Error"
    cli_message_body: str = "An error occurred while running the transfer"


class WireException(CtcpException):
    """Base class of everything that can go wrong while turning
    messages into datagrams and back.
    """

    cli_message_header: str = "Wire Error"
    cli_message_body: str = "A datagram could not be encoded or decoded."


class TruncatedMessageException(WireException):
    """Raised when the buffer ends before the message does"""


class UnknownMessageTypeException(WireException):
    """Raised when the type byte does not name a CTCP message"""


class InvalidFieldException(WireException):
    """Raised when a field holds a value that the protocol forbids,
    e.g., a systematic index that lies beyond the block size.
    """


class EncodeException(WireException):
    """Raised when a field does not fit into its slot on the wire"""


class CodecException(CtcpException):
    """Base class for coding and decoding problems"""


class NotDecodableException(CodecException):
    """Raised when a block is decoded before enough degrees of
    freedom have arrived.
    """


class EmptyBlockException(CodecException):
    """Raised when somebody asks to encode a block without packets"""


class ContractViolationException(CtcpException):
    """Raised when an operation is called outside of its contract
    (e.g., pushing data after the stream has been closed).
    """


class InvalidParametersException(CtcpException):
    """Raised when the protocol parameters contradict each other"""

    cli_message_header: str = "Invalid Parameters"
    cli_message_body: str = """The protocol parameters are inconsistent.

Please check the values passed on the command line and the CTCP_* environment
variables (or the .ctcp / ctcp.env file in the current directory).
"""


class StallException(CtcpException):
    """Raised by the simulator when the transfer stops making progress.

    Attributes:
    ----------
    - trace_tail (List[str]): the last trace records before the stall
        as json lines. Empty if tracing was switched off.
    """

    cli_message_header: str = "Transfer Stalled"
    cli_message_body: str = """The simulated transfer made no progress within the
stall timeout.

This is expected when the loss rate is 1.0. For other scenarios, inspect the
trace tail attached to the log output.
"""

    def __init__(self, message: str, trace_tail: Optional[List[str]] = None):
        super().__init__(message)
        self.trace_tail = trace_tail or []


class HandshakeTimeoutException(CtcpException):
    """Raised when the peer does not answer the handshake within
    the retry budget
    """

    cli_message_header: str = "Handshake Timeout"
    cli_message_body: str = """The peer did not answer the handshake.

Please check that the peer is running, that the addresses passed with --path
are reachable, and that no firewall drops UDP traffic on these ports.
"""


class ConnectionClosedException(CtcpException):
    """Raised when the connection is used after it has been closed"""

    cli_message_header: str = "Connection Closed"
    cli_message_body: str = "The connection was closed before the transfer completed."


class ScenarioParseException(CtcpException):
    """Raised when a scenario file cannot be interpreted"""

    cli_message_header: str = "Scenario Error"
    cli_message_body: str = """The scenario file could not be parsed.

Please check docs/results.md for the scenario file format.
"""
