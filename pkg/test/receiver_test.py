import unittest
from test.utils import small_params

import numpy as np

from ctcp.field_codec import Block, encode
from ctcp.models.message import DataPacket, DenseCoding, SystematicCoding
from ctcp.receiver import ReceiverState

# small_params: blksize 8, numblks 4, payload_size 64
BLOCK_BYTES = 8 * 64


def _stream(length: int, seed: int = 0) -> bytes:
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()


def _block(stream: bytes, blkno: int) -> Block:
    chunk = stream[blkno * BLOCK_BYTES : (blkno + 1) * BLOCK_BYTES]
    return Block.from_bytes(blkno, 8, 64, chunk)


def _packet(block: Block, index: int, seqno: int, rng=None) -> DataPacket:
    coded = encode(block, index, rng or np.random.default_rng(seqno))
    if coded.is_systematic:
        coding = SystematicCoding(index=coded.systematic_index)
    else:
        coding = DenseCoding(coeffs=coded.coeffs.tobytes())
    return DataPacket(
        path_id=0,
        seqno=seqno,
        blockno=block.blkno,
        coding=coding,
        payload=coded.data.tobytes(),
    )


class TestReceiver(unittest.TestCase):
    """Test case for the receiver state machine"""

    def test_first_packet(self) -> None:
        stream = _stream(3 * BLOCK_BYTES)
        receiver = ReceiverState(small_params(), len(stream))
        ack = receiver.on_data(_packet(_block(stream, 0), 0, seqno=0))
        self.assertEqual(
            (ack.ack_seqno, ack.ack_currblk, ack.ack_currdof), (0, 0, 1)
        )
        self.assertEqual(receiver.read_delivered(), b"")

    def test_duplicate(self) -> None:
        """Test whether a dependent packet leaves the dof count alone"""
        stream = _stream(3 * BLOCK_BYTES)
        receiver = ReceiverState(small_params(), len(stream))
        packet = _packet(_block(stream, 0), 0, seqno=0)
        receiver.on_data(packet)
        ack = receiver.on_data(packet.model_copy(update={"seqno": 1}))
        self.assertEqual((ack.ack_seqno, ack.ack_currdof), (1, 1))
        self.assertEqual(receiver.packets_dependent, 1)

    def test_cascade(self) -> None:
        """Test whether completing block 0 also delivers a complete block 1

        User Story: As an application I want every decodable block
        delivered at once, so that a late packet does not hold back the
        blocks received in full behind it.
        """
        stream = _stream(3 * BLOCK_BYTES + 100)
        receiver = ReceiverState(small_params(), len(stream))
        seqno = 0
        for index in range(8):
            receiver.on_data(_packet(_block(stream, 1), index, seqno))
            seqno += 1
        for index in range(2):
            receiver.on_data(_packet(_block(stream, 2), index + 8, seqno))
            seqno += 1
        for index in range(7):
            ack = receiver.on_data(_packet(_block(stream, 0), index, seqno))
            seqno += 1
        self.assertEqual((ack.ack_currblk, ack.ack_currdof), (0, 7))

        ack = receiver.on_data(_packet(_block(stream, 0), 7, seqno))
        self.assertEqual((ack.ack_currblk, ack.ack_currdof), (2, 2))
        self.assertEqual(receiver.read_delivered(), stream[: 2 * BLOCK_BYTES])
        self.assertEqual(receiver.read_delivered(), b"")

    def test_out_of_window(self) -> None:
        """Test whether blocks beyond the window are dropped but acknowledged"""
        stream = _stream(6 * BLOCK_BYTES)
        receiver = ReceiverState(small_params(), len(stream))
        ack = receiver.on_data(_packet(_block(stream, 4), 0, seqno=5))
        self.assertEqual(receiver.packets_dropped, 1)
        self.assertEqual((ack.ack_seqno, ack.ack_currblk, ack.ack_currdof), (5, 0, 0))
        self.assertNotIn(4, receiver.decoders)

    def test_wrong_payload_size(self) -> None:
        stream = _stream(BLOCK_BYTES)
        receiver = ReceiverState(small_params(), len(stream))
        packet = _packet(_block(stream, 0), 0, seqno=0)
        receiver.on_data(packet.model_copy(update={"payload": packet.payload[:10]}))
        self.assertEqual(receiver.packets_dropped, 1)
        self.assertEqual(receiver.ack_currdof, 0)

    def test_stale_block(self) -> None:
        stream = _stream(2 * BLOCK_BYTES)
        receiver = ReceiverState(small_params(), len(stream))
        block = _block(stream, 0)
        for index in range(8):
            receiver.on_data(_packet(block, index, index))
        ack = receiver.on_data(_packet(block, 9, 9))
        self.assertEqual(receiver.packets_dropped, 1)
        self.assertEqual(ack.ack_currblk, 1)

    def test_short_final_block(self) -> None:
        """Test whether the padding of the last block is removed"""
        stream = _stream(BLOCK_BYTES + 70)
        receiver = ReceiverState(small_params(), len(stream))
        self.assertEqual(receiver.fill_count(1), 2)
        rng = np.random.default_rng(3)
        seqno = 0
        for blkno in range(2):
            block = _block(stream, blkno)
            index = block.fill_count
            while receiver.ack_currblk == blkno:
                receiver.on_data(_packet(block, index, seqno, rng))
                index += 1
                seqno += 1

        self.assertTrue(receiver.is_complete)
        self.assertEqual(receiver.read_delivered(), stream)
        self.assertEqual(receiver.delivered, len(stream))

    def test_packets_past_short_block(self) -> None:
        """Test whether a short final block ignores rows past its end

        User Story: As a receiver I want malformed packets for the last
        block to be rejected, so that they cannot count as received dofs.
        """
        stream = _stream(BLOCK_BYTES + 70)
        receiver = ReceiverState(small_params(), len(stream))
        for index in range(8):
            receiver.on_data(_packet(_block(stream, 0), index, index))
        self.assertEqual(receiver.ack_currblk, 1)

        beyond = DataPacket(
            path_id=0,
            seqno=8,
            blockno=1,
            coding=SystematicCoding(index=5),
            payload=bytes(64),
        )
        trailing = DataPacket(
            path_id=0,
            seqno=9,
            blockno=1,
            coding=DenseCoding(coeffs=bytes([1, 2, 0, 0, 0, 7, 0, 0])),
            payload=bytes(64),
        )
        for packet in (beyond, trailing):
            ack = receiver.on_data(packet)
            self.assertEqual(ack.ack_currdof, 0)
        self.assertEqual(receiver.packets_dropped, 2)
        self.assertNotIn(1, receiver.decoders)

        ack = receiver.on_data(_packet(_block(stream, 1), 0, seqno=10))
        self.assertEqual(ack.ack_currdof, 1)

    def test_coded_only_delivery(self) -> None:
        stream = _stream(2 * BLOCK_BYTES, seed=5)
        receiver = ReceiverState(small_params(), len(stream))
        rng = np.random.default_rng(9)
        seqno = 0
        for blkno in range(2):
            block = _block(stream, blkno)
            index = 8
            while receiver.ack_currblk == blkno:
                ack = receiver.on_data(_packet(block, index, seqno, rng))
                self.assertEqual(ack.ack_seqno, seqno)
                index += 1
                seqno += 1
        self.assertEqual(receiver.read_delivered(), stream)
