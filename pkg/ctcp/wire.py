""" Bit-exact serialization of CTCP messages.

Every datagram starts with a 1-byte message type and a 1-byte path id.
All multi-byte integers are big-endian. See docs/wire.md for the
offset tables.
"""
import struct
from typing import Optional

from pydantic import ValidationError

from ctcp.exceptions import (
    EncodeException,
    InvalidFieldException,
    TruncatedMessageException,
    UnknownMessageTypeException,
)
from ctcp.models.message import (
    HANDSHAKE_TYPES,
    AckPacket,
    DataPacket,
    DenseCoding,
    Handshake,
    Message,
    MessageType,
    SystematicCoding,
)

PREFIX = struct.Struct("!BB")
DATA_HEADER = struct.Struct("!BBIIB")
SYSTEMATIC_INDEX = struct.Struct("!H")
ACK = struct.Struct("!BBIIH")
HANDSHAKE = struct.Struct("!BBHHHQ")

CODING_SYSTEMATIC = 0
CODING_DENSE = 1


def data_wire_size(systematic: bool, blksize: int, payload_size: int) -> int:
    """Size of a DATA image; a pure function of its layout parameters"""
    if systematic:
        return DATA_HEADER.size + SYSTEMATIC_INDEX.size + payload_size
    return DATA_HEADER.size + blksize + payload_size


def serialize(msg: Message) -> bytes:
    """
    Turn a message into its wire image.

    Raises:
    ------
    - EncodeException: if a field does not fit into its slot
    """
    try:
        if isinstance(msg, DataPacket):
            return _serialize_data(msg)
        if isinstance(msg, AckPacket):
            return ACK.pack(
                MessageType.ACK,
                msg.path_id,
                msg.ack_seqno,
                msg.ack_currblk,
                msg.ack_currdof,
            )
        if isinstance(msg, Handshake):
            return HANDSHAKE.pack(
                msg.msg_type,
                msg.path_id,
                msg.blksize,
                msg.numblks,
                msg.payload_size,
                msg.stream_length,
            )
    except struct.error as exception:
        raise EncodeException(str(exception)) from exception
    raise EncodeException(f"cannot serialize {type(msg).__name__}")


def _serialize_data(msg: DataPacket) -> bytes:
    if msg.coding.kind == "SYSTEMATIC":
        header = DATA_HEADER.pack(
            MessageType.DATA, msg.path_id, msg.seqno, msg.blockno, CODING_SYSTEMATIC
        )
        return header + SYSTEMATIC_INDEX.pack(msg.coding.index) + msg.payload

    header = DATA_HEADER.pack(
        MessageType.DATA, msg.path_id, msg.seqno, msg.blockno, CODING_DENSE
    )
    return header + msg.coding.coeffs + msg.payload


def deserialize(buffer: bytes, blksize: Optional[int] = None) -> Message:
    """
    Parse a wire image.

    Args:
    ----
    - buffer (bytes): one datagram
    - blksize (Optional[int]): block size of the connection. Required to
        parse DATA messages (dense coefficient count and the bound of
        the systematic index).

    Raises:
    ------
    - TruncatedMessageException: if the buffer ends early
    - UnknownMessageTypeException: if the type byte is not known
    - InvalidFieldException: if a field violates the protocol

    Returns:
    -------
    - Message: DataPacket, AckPacket or Handshake
    """
    if len(buffer) < PREFIX.size:
        raise TruncatedMessageException(f"{len(buffer)} bytes are no message")

    raw_type, _ = PREFIX.unpack_from(buffer)
    try:
        msg_type = MessageType(raw_type)
    except ValueError as exception:
        raise UnknownMessageTypeException(
            f"unknown message type {raw_type}"
        ) from exception

    if msg_type == MessageType.DATA:
        return _deserialize_data(buffer, blksize)
    if msg_type == MessageType.ACK:
        _require(buffer, ACK.size)
        _, path_id, seqno, currblk, currdof = ACK.unpack_from(buffer)
        if blksize is not None and currdof > blksize:
            raise InvalidFieldException(f"ack_currdof {currdof} > blksize {blksize}")
        return AckPacket.model_construct(
            msg_type=MessageType.ACK,
            path_id=path_id,
            ack_seqno=seqno,
            ack_currblk=currblk,
            ack_currdof=currdof,
        )
    if msg_type in HANDSHAKE_TYPES:
        _require(buffer, HANDSHAKE.size)
        _, path_id, h_blksize, numblks, payload_size, length = HANDSHAKE.unpack_from(
            buffer
        )
        try:
            return Handshake(
                msg_type=msg_type,
                path_id=path_id,
                blksize=h_blksize,
                numblks=numblks,
                payload_size=payload_size,
                stream_length=length,
            )
        except ValidationError as exception:
            raise InvalidFieldException(str(exception)) from exception

    raise UnknownMessageTypeException(f"unhandled message type {msg_type}")


def _deserialize_data(buffer: bytes, blksize: Optional[int]) -> DataPacket:
    if blksize is None:
        raise InvalidFieldException("parsing DATA requires the block size")

    _require(buffer, DATA_HEADER.size)
    _, path_id, seqno, blockno, flag = DATA_HEADER.unpack_from(buffer)
    offset = DATA_HEADER.size

    if flag == CODING_SYSTEMATIC:
        _require(buffer, offset + SYSTEMATIC_INDEX.size)
        (index,) = SYSTEMATIC_INDEX.unpack_from(buffer, offset)
        if index >= blksize:
            raise InvalidFieldException(
                f"systematic index {index} >= blksize {blksize}"
            )
        coding = SystematicCoding.model_construct(kind="SYSTEMATIC", index=index)
        offset += SYSTEMATIC_INDEX.size
    elif flag == CODING_DENSE:
        _require(buffer, offset + blksize)
        coding = DenseCoding.model_construct(
            kind="DENSE", coeffs=bytes(buffer[offset : offset + blksize])
        )
        offset += blksize
    else:
        raise InvalidFieldException(f"unknown coefficient flag {flag}")

    payload = bytes(buffer[offset:])
    if not payload:
        raise TruncatedMessageException("DATA message without payload")

    return DataPacket.model_construct(
        msg_type=MessageType.DATA,
        path_id=path_id,
        seqno=seqno,
        blockno=blockno,
        coding=coding,
        payload=payload,
    )


def _require(buffer: bytes, size: int) -> None:
    if len(buffer) < size:
        raise TruncatedMessageException(
            f"need {size} bytes, datagram holds {len(buffer)}"
        )
