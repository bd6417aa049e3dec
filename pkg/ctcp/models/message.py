""" Messages exchanged between CTCP sender and receiver.

The byte layout of each message is defined in ctcp.wire and
documented in docs/wire.md.
"""
from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, field_validator

UINT8_MAX = 0xFF
UINT16_MAX = 0xFFFF
UINT32_MAX = 0xFFFFFFFF
UINT64_MAX = 0xFFFFFFFFFFFFFFFF


class MessageType(int, Enum):
    """Value of the first byte of every datagram.

    FINACK is only used by the close exchange of the UDP transport.
    """

    DATA = 1
    ACK = 2
    SYN = 3
    SYNACK = 4
    FIN = 5
    FINACK = 6


HANDSHAKE_TYPES = (
    MessageType.SYN,
    MessageType.SYNACK,
    MessageType.FIN,
    MessageType.FINACK,
)


class SystematicCoding(BaseModel):
    """The payload is source packet `index` of the block, uncoded."""

    kind: Literal["SYSTEMATIC"] = "SYSTEMATIC"
    index: int = Field(ge=0, le=UINT16_MAX)


class DenseCoding(BaseModel):
    """The payload is a random linear combination of the block.

    Attributes:
    ----------
    - coeffs (bytes): one GF(2^8) coefficient per packet slot of the
        block, exactly blksize bytes long.
    """

    kind: Literal["DENSE"] = "DENSE"
    coeffs: bytes


CoeffEncoding = Annotated[
    Union[SystematicCoding, DenseCoding], Field(discriminator="kind")
]


class DataPacket(BaseModel):
    """Data packet sent from the sender to the receiver.

    Attributes:
    ----------
    - path_id (int): path the packet travels on
    - seqno (int): per-path transmission counter
    - blockno (int): block the payload was generated from
    - coding (CoeffEncoding): systematic index or dense coefficients
    - payload (bytes): coded or uncoded payload of payload_size bytes
    """

    msg_type: Literal[MessageType.DATA] = MessageType.DATA
    path_id: int = Field(ge=0, le=UINT8_MAX)
    seqno: int = Field(ge=0, le=UINT32_MAX)
    blockno: int = Field(ge=0, le=UINT32_MAX)
    coding: CoeffEncoding
    payload: bytes

    @property
    def is_systematic(self) -> bool:
        return self.coding.kind == "SYSTEMATIC"


class AckPacket(BaseModel):
    """Acknowledgment of one data packet.

    Attributes:
    ----------
    - path_id (int): path of the acknowledged packet
    - ack_seqno (int): seqno of the acknowledged packet
    - ack_currblk (int): smallest block the receiver has not decoded yet
    - ack_currdof (int): degrees of freedom held for ack_currblk
    """

    msg_type: Literal[MessageType.ACK] = MessageType.ACK
    path_id: int = Field(ge=0, le=UINT8_MAX)
    ack_seqno: int = Field(ge=0, le=UINT32_MAX)
    ack_currblk: int = Field(ge=0, le=UINT32_MAX)
    ack_currdof: int = Field(ge=0, le=UINT16_MAX)


class Handshake(BaseModel):
    """Connection setup and teardown.

    The receiver proposes its parameters in the SYN, the sender answers
    with the negotiated values and the stream length in the SYNACK.
    """

    msg_type: MessageType
    path_id: int = Field(0, ge=0, le=UINT8_MAX)
    blksize: int = Field(ge=1, le=UINT16_MAX)
    numblks: int = Field(ge=1, le=UINT16_MAX)
    payload_size: int = Field(ge=1, le=UINT16_MAX)
    stream_length: int = Field(0, ge=0, le=UINT64_MAX)

    @field_validator("msg_type")
    @classmethod
    def _check_msg_type(cls, value: MessageType) -> MessageType:
        if value not in HANDSHAKE_TYPES:
            raise ValueError(f"{value.name} is not a handshake message")
        return value


Message = Union[DataPacket, AckPacket, Handshake]
