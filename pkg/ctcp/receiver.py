""" CTCP receiver state machine.

DESCRIPTION
    The receiver buffers one BlockDecoder per block of the window
    [ack_currblk, ack_currblk + numblks - 1], answers every data packet
    with exactly one ACK and hands decoded bytes to the application in
    stream order.
"""
import logging
import math
from typing import Dict, List, Optional

from ctcp.field_codec import BlockDecoder, CodedPayload
from ctcp.models.message import AckPacket, DataPacket
from ctcp.models.parameters import CtcpParameters
from ctcp.trace import TraceRecorder

logger = logging.getLogger("ctcp.receiver")


class ReceiverState:
    """
    Connection-wide receiver state.

    Args:
    ----
    - params (CtcpParameters): negotiated parameters
    - stream_length (int): number of stream bytes announced by the sender
    - trace (Optional[TraceRecorder]): event trace

    Attributes:
    ----------
    - ack_currblk (int): smallest block not decoded yet
    - ack_currdof (int): dofs held for ack_currblk
    - decoders (Dict[int, BlockDecoder]): decoders of the window
    - delivered (int): stream bytes handed to the application
    """

    def __init__(
        self,
        params: CtcpParameters,
        stream_length: int,
        trace: Optional[TraceRecorder] = None,
    ):
        self.blksize = params.blksize
        self.numblks = params.numblks
        self.payload_size = params.payload_size
        self.stream_length = stream_length
        self.total_packets = math.ceil(stream_length / params.payload_size)
        self.total_blocks = math.ceil(self.total_packets / params.blksize)
        self.trace = trace

        self.ack_currblk = 0
        self.ack_currdof = 0
        self.decoders: Dict[int, BlockDecoder] = {}
        self.delivered = 0
        self._decoded: List[bytes] = []

        self.packets_received = 0
        self.packets_dependent = 0
        self.packets_dropped = 0

    def fill_count(self, blkno: int) -> int:
        """Number of source packets of block `blkno`"""
        if blkno < self.total_blocks - 1:
            return self.blksize
        return self.total_packets - blkno * self.blksize

    @property
    def is_complete(self) -> bool:
        return self.ack_currblk >= self.total_blocks

    def _decoder(self, blkno: int) -> BlockDecoder:
        decoder = self.decoders.get(blkno)
        if decoder is None:
            decoder = BlockDecoder(
                blkno, self.blksize, self.payload_size, target=self.fill_count(blkno)
            )
            self.decoders[blkno] = decoder
        return decoder

    def on_data(self, pkt: DataPacket, now: float = 0.0) -> AckPacket:
        """
        Insert a data packet and build its ACK.

        Stale packets (below ack_currblk), packets beyond the window,
        packets with a payload of the wrong size, packets that refer to
        source packets past the end of a short final block and dependent
        packets
        leave the state unchanged; they are still acknowledged with the
        current state.
        """
        self.packets_received += 1
        blkno = pkt.blockno
        in_window = self.ack_currblk <= blkno < min(
            self.ack_currblk + self.numblks, self.total_blocks
        )

        if (
            not in_window
            or len(pkt.payload) != self.payload_size
            or not self._fits_block(pkt, blkno)
        ):
            self.packets_dropped += 1
            if self.trace is not None:
                self.trace.emit(
                    now,
                    "receiver",
                    "packet_dropped",
                    pkt.path_id,
                    seqno=pkt.seqno,
                    blkno=blkno,
                )
        elif self._decoder(blkno).insert(self._coded_payload(pkt)):
            if self.trace is not None:
                self.trace.emit(
                    now,
                    "receiver",
                    "packet_received",
                    pkt.path_id,
                    seqno=pkt.seqno,
                    blkno=blkno,
                )
            if blkno == self.ack_currblk:
                self.ack_currdof += 1
                self._advance(now)
        else:
            self.packets_dependent += 1
            if self.trace is not None:
                self.trace.emit(
                    now,
                    "receiver",
                    "packet_dependent",
                    pkt.path_id,
                    seqno=pkt.seqno,
                    blkno=blkno,
                )

        return AckPacket.model_construct(
            path_id=pkt.path_id,
            ack_seqno=pkt.seqno,
            ack_currblk=self.ack_currblk,
            ack_currdof=self.ack_currdof,
        )

    def _fits_block(self, pkt: DataPacket, blkno: int) -> bool:
        fill = self.fill_count(blkno)
        if fill == self.blksize:
            return True
        if pkt.coding.kind == "SYSTEMATIC":
            return pkt.coding.index < fill
        return not any(pkt.coding.coeffs[fill:])

    def _coded_payload(self, pkt: DataPacket) -> CodedPayload:
        if pkt.coding.kind == "SYSTEMATIC":
            return CodedPayload.systematic(pkt.coding.index, self.blksize, pkt.payload)
        return CodedPayload.dense(pkt.coding.coeffs, pkt.payload)

    def _advance(self, now: float) -> None:
        """Decode ack_currblk and every complete block behind it"""
        while not self.is_complete:
            decoder = self.decoders.get(self.ack_currblk)
            if decoder is None or not decoder.is_complete:
                self.ack_currdof = 0 if decoder is None else decoder.rank
                return

            for packet in decoder.decode():
                self._decoded.append(packet)
            del self.decoders[self.ack_currblk]
            logger.debug("Block %d decoded", self.ack_currblk)
            if self.trace is not None:
                self.trace.emit(
                    now, "receiver", "block_decoded", blkno=self.ack_currblk
                )
            self.ack_currblk += 1

        self.ack_currdof = 0

    def read_delivered(self) -> bytes:
        """Return the newly decoded stream bytes, padding removed"""
        if not self._decoded:
            return b""
        chunk = b"".join(self._decoded)
        self._decoded.clear()
        remaining = self.stream_length - self.delivered
        chunk = chunk[:remaining]
        self.delivered += len(chunk)
        return chunk
