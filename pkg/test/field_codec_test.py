import unittest

import numpy as np

from ctcp.exceptions import (
    ContractViolationException,
    EmptyBlockException,
    NotDecodableException,
)
from ctcp.field_codec import (
    EXP_TABLE,
    Block,
    BlockDecoder,
    CodedPayload,
    combine,
    encode,
    field_div,
    field_inv,
    field_mul,
    scale,
)


def _oracle_rank(rows):
    """Rank by plain Gauss-Jordan elimination over GF(2^8)"""
    rows = [list(row) for row in rows]
    if not rows:
        return 0
    rank = 0
    for col in range(len(rows[0])):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inverse = field_inv(rows[rank][col])
        rows[rank] = [field_mul(inverse, value) for value in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [
                    value ^ field_mul(factor, lead)
                    for value, lead in zip(rows[r], rows[rank])
                ]
        rank += 1
    return rank


def _random_block(rng, blkno=0, blksize=8, payload_size=32, fill=None):
    fill = blksize if fill is None else fill
    data = rng.integers(0, 256, size=fill * payload_size, dtype=np.uint8).tobytes()
    return Block.from_bytes(blkno, blksize, payload_size, data)


class TestFieldArithmetic(unittest.TestCase):
    """Test case for the GF(2^8) tables"""

    def test_every_inverse(self) -> None:
        """Test whether a * inv(a) = 1 for every nonzero element"""
        for a in range(1, 256):
            self.assertEqual(field_mul(a, field_inv(a)), 1)

    def test_zero_has_no_inverse(self) -> None:
        with self.assertRaises(ZeroDivisionError):
            field_inv(0)

    def test_known_products(self) -> None:
        """Test against the products of the AES field"""
        self.assertEqual(field_mul(0x57, 0x83), 0xC1)
        self.assertEqual(field_mul(0x57, 0x13), 0xFE)
        self.assertEqual(field_mul(0x53, 0xCA), 0x01)
        self.assertEqual(field_div(0xC1, 0x83), 0x57)

    def test_generator_spans_the_group(self) -> None:
        """Test whether 0x03 generates all 255 nonzero elements"""
        self.assertEqual(len(set(int(v) for v in EXP_TABLE[:255])), 255)

    def test_distributive(self) -> None:
        rng = np.random.default_rng(4)
        for a, b, c in rng.integers(0, 256, size=(500, 3)):
            a, b, c = int(a), int(b), int(c)
            self.assertEqual(
                field_mul(a, b ^ c), field_mul(a, b) ^ field_mul(a, c)
            )

    def test_scale_and_combine(self) -> None:
        """Test whether the vectorised helpers agree with the scalar ones"""
        rng = np.random.default_rng(5)
        rows = rng.integers(0, 256, size=(3, 16), dtype=np.uint8)
        coeffs = np.array([7, 0, 200], dtype=np.uint8)

        expected = [
            field_mul(7, int(rows[0, j])) ^ field_mul(200, int(rows[2, j]))
            for j in range(16)
        ]
        self.assertEqual(combine(coeffs, rows).tolist(), expected)
        self.assertEqual(
            scale(7, rows[0]).tolist(), [field_mul(7, int(v)) for v in rows[0]]
        )


class TestEncoder(unittest.TestCase):
    """Test case for the systematic block encoder"""

    def test_source_packets_first(self) -> None:
        """Test whether the first fill_count indices are uncoded

        User Story: As a sender I want the first transmission of every
        packet to be uncoded, so that the loss-free case carries no
        coding overhead.
        """
        rng = np.random.default_rng(1)
        block = _random_block(rng, fill=5)
        for index in range(5):
            coded = encode(block, index, rng)
            self.assertTrue(coded.is_systematic)
            self.assertEqual(coded.systematic_index, index)
            self.assertEqual(coded.data.tobytes(), block.packet_bytes(index))

    def test_coded_after_source(self) -> None:
        """Test whether later indices combine only the filled packets"""
        rng = np.random.default_rng(2)
        block = _random_block(rng, fill=5)
        for index in range(5, 40):
            coded = encode(block, index, rng)
            self.assertFalse(coded.is_systematic)
            self.assertTrue(coded.coeffs[:5].any())
            self.assertFalse(coded.coeffs[5:].any())
            self.assertEqual(
                coded.data.tolist(),
                combine(coded.coeffs[:5], block.packets[:5]).tolist(),
            )

    def test_empty_block(self) -> None:
        block = Block(0, 4, 16)
        with self.assertRaises(EmptyBlockException):
            encode(block, 0, np.random.default_rng(0))

    def test_negative_index(self) -> None:
        block = _random_block(np.random.default_rng(0), blksize=4, payload_size=16)
        with self.assertRaises(ContractViolationException):
            encode(block, -1, np.random.default_rng(0))

    def test_block_overflow(self) -> None:
        """Test whether a block rejects more data than it can hold"""
        with self.assertRaises(ContractViolationException):
            Block.from_bytes(0, 2, 4, b"x" * 9)
        block = Block(0, 1, 4)
        block.append(b"abcd")
        with self.assertRaises(ContractViolationException):
            block.append(b"efgh")

    def test_last_packet_padded(self) -> None:
        block = Block.from_bytes(0, 4, 4, b"abcdef")
        self.assertEqual(block.fill_count, 2)
        self.assertEqual(block.packet_bytes(1), b"ef\x00\x00")


class TestDecoder(unittest.TestCase):
    """Test case for the incremental block decoder"""

    def test_round_trip_with_losses(self) -> None:
        """Test whether any innovative subset decodes the block

        User Story: As a receiver I want to decode a block from whichever
        packets survive, so that losses never need a specific
        retransmission.
        """
        for blksize in (1, 2, 8, 32):
            for seed in range(250):
                rng = np.random.default_rng(seed)
                block = _random_block(rng, blksize=blksize, payload_size=16)
                decoder = BlockDecoder(0, blksize, 16, target=blksize)
                index = 0
                while not decoder.is_complete:
                    coded = encode(block, index, rng)
                    index += 1
                    if rng.random() < 0.3:
                        continue
                    decoder.insert(coded)

                packets = decoder.decode()
                self.assertEqual(
                    packets,
                    [block.packet_bytes(i) for i in range(blksize)],
                    (blksize, seed),
                )

    def test_dense_packet_completes_block(self) -> None:
        """Test how often one dense packet supplies the last missing dof"""
        rng = np.random.default_rng(31)
        trials = 10_000
        accepted = 0
        for _ in range(trials):
            block = _random_block(rng, blksize=8, payload_size=4)
            decoder = BlockDecoder(0, 8, 4)
            missing = int(rng.integers(0, 8))
            for index in range(8):
                if index != missing:
                    decoder.insert(encode(block, index, rng))
            accepted += decoder.insert(encode(block, 8, rng))
        self.assertGreaterEqual(accepted / trials, 1 - 2 / 256)

    def test_short_block(self) -> None:
        """Test whether a partially filled block decodes with fill_count dofs"""
        rng = np.random.default_rng(11)
        block = _random_block(rng, blksize=8, payload_size=16, fill=3)
        decoder = BlockDecoder(0, 8, 16, target=3)
        for index in range(3, 6):
            self.assertTrue(decoder.insert(encode(block, index, rng)))
        self.assertTrue(decoder.is_complete)
        self.assertEqual(decoder.decode(), [block.packet_bytes(i) for i in range(3)])

    def test_dependent_packets(self) -> None:
        """Test whether duplicates and zero vectors are not innovative"""
        rng = np.random.default_rng(3)
        block = _random_block(rng, blksize=4, payload_size=8)
        decoder = BlockDecoder(0, 4, 8)
        coded = encode(block, 6, rng)
        self.assertTrue(decoder.insert(coded))
        self.assertFalse(decoder.insert(coded))

        zero = CodedPayload.dense(np.zeros(4, dtype=np.uint8), np.zeros(8, np.uint8))
        self.assertFalse(decoder.insert(zero))
        self.assertEqual(decoder.rank, 1)

    def test_upper_triangular_invariant(self) -> None:
        """Test whether the stored rows keep a unit diagonal"""
        rng = np.random.default_rng(8)
        block = _random_block(rng, blksize=6, payload_size=8)
        decoder = BlockDecoder(0, 6, 8)
        for index in range(6, 20):
            decoder.insert(encode(block, index, rng))
            for row in np.flatnonzero(decoder.row_filled):
                self.assertEqual(decoder.C[row, row], 1)
                self.assertFalse(decoder.C[row, :row].any())

    def test_not_decodable(self) -> None:
        decoder = BlockDecoder(0, 4, 8)
        with self.assertRaises(NotDecodableException):
            decoder.decode()

    def test_wrong_coefficient_count(self) -> None:
        decoder = BlockDecoder(0, 4, 8)
        payload = CodedPayload.dense(bytes(3), bytes(8))
        with self.assertRaises(ContractViolationException):
            decoder.insert(payload)

    def test_insert_matches_oracle(self) -> None:
        """Test every accept or reject decision against a rank oracle

        Half of the trials draw coefficients from a small alphabet so
        that dependent rows are frequent.
        """
        rng = np.random.default_rng(2024)
        small = np.array([0, 1, 2, 3], dtype=np.uint8)
        for trial in range(10_000):
            blksize = int(rng.integers(1, 9))
            count = int(rng.integers(1, blksize + 3))
            if trial % 2:
                rows = rng.choice(small, size=(count, blksize))
            else:
                rows = rng.integers(0, 256, size=(count, blksize), dtype=np.uint8)
            decoder = BlockDecoder(0, blksize, 1)
            rank = 0
            for stored, row in enumerate(rows, start=1):
                payload = CodedPayload.dense(row, np.zeros(1, dtype=np.uint8))
                expected = _oracle_rank(rows[:stored].tolist())
                self.assertEqual(decoder.insert(payload), expected > rank, trial)
                rank = expected
            self.assertEqual(decoder.rank, rank)
