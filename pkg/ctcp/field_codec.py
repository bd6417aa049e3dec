""" GF(2^8) arithmetic and the block codec of CTCP.

DESCRIPTION
    Payload bytes are field elements of GF(2^8) reduced by
    x^8 + x^4 + x^3 + x + 1 (0x11B). Addition is XOR; multiplication
    goes through a full 256 x 256 product table built once at import,
    so that whole payload rows can be scaled with a single numpy
    fancy-index.

    The encoder is systematic: the first fill_count transmissions of
    a block are the source packets, every later one is a dense random
    combination of all packets of the block.

    The decoder keeps the coefficient matrix C upper-triangular with a
    unit diagonal after every insertion (forward elimination only) and
    runs the Gauss-Jordan back substitution once the block is complete.

EXAMPLE
    rng = numpy.random.default_rng(7)
    block = Block(blkno=0, blksize=4, payload_size=16)
    block.append(b"..." * 16)
    decoder = BlockDecoder(blkno=0, blksize=4, payload_size=16, target=1)
    decoder.insert(encode(block, 3, rng))
    packets = decoder.decode()
"""
from typing import List, Optional, Union

import numpy as np

from ctcp.exceptions import (
    ContractViolationException,
    EmptyBlockException,
    NotDecodableException,
)

REDUCTION_POLYNOMIAL = 0x11B
GENERATOR = 0x03
FIELD_SIZE = 256


def _build_tables() -> tuple:
    """Build the exp/log tables and derive the product and inverse tables."""
    exp = np.zeros(2 * FIELD_SIZE, dtype=np.int64)
    log = np.zeros(FIELD_SIZE, dtype=np.int64)
    x = 1
    for i in range(FIELD_SIZE - 1):
        exp[i] = x
        log[x] = i
        # multiply by the generator 0x03 = x + 1
        x ^= (x << 1) ^ (REDUCTION_POLYNOMIAL if x & 0x80 else 0)
        x &= 0xFF
    exp[FIELD_SIZE - 1 : 2 * (FIELD_SIZE - 1)] = exp[: FIELD_SIZE - 1]

    nonzero = np.arange(1, FIELD_SIZE)
    mul = np.zeros((FIELD_SIZE, FIELD_SIZE), dtype=np.uint8)
    mul[1:, 1:] = exp[log[nonzero][:, None] + log[nonzero][None, :]]

    inv = np.zeros(FIELD_SIZE, dtype=np.uint8)
    inv[1:] = exp[(FIELD_SIZE - 1 - log[nonzero]) % (FIELD_SIZE - 1)]
    return exp.astype(np.uint8), log, mul, inv


EXP_TABLE, LOG_TABLE, MUL_TABLE, INV_TABLE = _build_tables()


def field_mul(a: int, b: int) -> int:
    """Product of two field elements"""
    return int(MUL_TABLE[a, b])


def field_inv(a: int) -> int:
    """Multiplicative inverse of a nonzero field element

    Raises:
    ------
    - ZeroDivisionError: zero has no inverse
    """
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(2^8)")
    return int(INV_TABLE[a])


def field_div(a: int, b: int) -> int:
    return field_mul(a, field_inv(b))


def scale(factor: int, row: np.ndarray) -> np.ndarray:
    """Multiply every element of `row` by the scalar `factor`"""
    return MUL_TABLE[factor][row]


def combine(coeffs: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Linear combination sum_j coeffs[j] * rows[j] over GF(2^8)"""
    products = MUL_TABLE[coeffs[:, None], rows]
    return np.bitwise_xor.reduce(products, axis=0)


class Block:
    """Group of up to blksize equal-length packets; the unit of coding
    and of reliability.

    Attributes:
    ----------
    - blkno (int): block number within the stream
    - packets (np.ndarray): blksize x payload_size matrix, rows beyond
        fill_count are zero
    - fill_count (int): number of packets in the block
    - next_index (int): encode index of the next transmission from this
        block, shared by all paths
    """

    def __init__(self, blkno: int, blksize: int, payload_size: int):
        self.blkno = blkno
        self.blksize = blksize
        self.payload_size = payload_size
        self.packets = np.zeros((blksize, payload_size), dtype=np.uint8)
        self.fill_count = 0
        self.next_index = 0

    @classmethod
    def from_bytes(
        cls, blkno: int, blksize: int, payload_size: int, data: bytes
    ) -> "Block":
        """Cut `data` into packets, zero-padding the last one.

        Raises:
        ------
        - ContractViolationException: if data does not fit into one block
        """
        if len(data) > blksize * payload_size:
            raise ContractViolationException(
                f"{len(data)} bytes do not fit into a block of "
                f"{blksize} x {payload_size} bytes"
            )
        block = cls(blkno, blksize, payload_size)
        for start in range(0, len(data), payload_size):
            block.append(data[start : start + payload_size])
        return block

    def append(self, packet: bytes) -> None:
        """Add the next packet, zero-padded to payload_size"""
        if self.is_full:
            raise ContractViolationException(f"block {self.blkno} is full")
        if len(packet) > self.payload_size:
            raise ContractViolationException(
                f"packet of {len(packet)} bytes exceeds payload size "
                f"{self.payload_size}"
            )
        row = np.frombuffer(packet, dtype=np.uint8)
        self.packets[self.fill_count, : len(row)] = row
        self.fill_count += 1

    @property
    def is_full(self) -> bool:
        return self.fill_count == self.blksize

    def packet_bytes(self, index: int) -> bytes:
        return self.packets[index].tobytes()


class CodedPayload:
    """Coefficient vector and payload of one transmission.

    Attributes:
    ----------
    - coeffs (np.ndarray): blksize coefficients, zero beyond fill_count
    - data (np.ndarray): payload_size payload bytes
    - systematic_index (Optional[int]): index of the source packet if
        the payload is uncoded, None for dense payloads
    """

    __slots__ = ("coeffs", "data", "systematic_index")

    def __init__(
        self,
        coeffs: np.ndarray,
        data: np.ndarray,
        systematic_index: Optional[int] = None,
    ):
        self.coeffs = coeffs
        self.data = data
        self.systematic_index = systematic_index

    @classmethod
    def systematic(
        cls, index: int, blksize: int, data: Union[bytes, np.ndarray]
    ) -> "CodedPayload":
        coeffs = np.zeros(blksize, dtype=np.uint8)
        coeffs[index] = 1
        return cls(coeffs, _as_row(data), index)

    @classmethod
    def dense(
        cls, coeffs: Union[bytes, np.ndarray], data: Union[bytes, np.ndarray]
    ) -> "CodedPayload":
        return cls(_as_row(coeffs), _as_row(data))

    @property
    def is_systematic(self) -> bool:
        return self.systematic_index is not None


def _as_row(value: Union[bytes, np.ndarray]) -> np.ndarray:
    if isinstance(value, np.ndarray):
        return value.astype(np.uint8, copy=False)
    return np.frombuffer(value, dtype=np.uint8)


def encode(block: Block, index: int, rng: np.random.Generator) -> CodedPayload:
    """
    Produce transmission number `index` of a block.

    Args:
    ----
    - block (Block): block with at least one packet
    - index (int): encode index; indices below fill_count yield the
        uncoded source packets
    - rng (np.random.Generator): seeded generator for the coefficients

    Raises:
    ------
    - EmptyBlockException: if the block holds no packet
    - ContractViolationException: if index is negative

    Returns:
    -------
    - CodedPayload: systematic or dense payload
    """
    if block.fill_count == 0:
        raise EmptyBlockException(f"block {block.blkno} is empty")
    if index < 0:
        raise ContractViolationException(f"negative encode index {index}")

    if index < block.fill_count:
        return CodedPayload.systematic(index, block.blksize, block.packets[index])

    fill = block.fill_count
    drawn = rng.integers(0, FIELD_SIZE, size=fill, dtype=np.uint8)
    while not drawn.any():
        drawn = rng.integers(0, FIELD_SIZE, size=fill, dtype=np.uint8)

    coeffs = np.zeros(block.blksize, dtype=np.uint8)
    coeffs[:fill] = drawn
    return CodedPayload(coeffs, combine(drawn, block.packets[:fill]))


class BlockDecoder:
    """Incremental decoder of one block.

    Attributes:
    ----------
    - blkno (int): block number
    - C (np.ndarray): blksize x blksize coefficient matrix; upper-triangular
        with a unit diagonal on every filled row
    - P (np.ndarray): blksize x payload_size payload matrix
    - row_filled (np.ndarray): boolean flag per row
    - rank (int): number of filled rows
    - target (int): dofs needed to decode, the block's fill count
    """

    def __init__(
        self,
        blkno: int,
        blksize: int,
        payload_size: int,
        target: Optional[int] = None,
    ):
        self.blkno = blkno
        self.blksize = blksize
        self.payload_size = payload_size
        self.target = blksize if target is None else target
        self.C = np.zeros((blksize, blksize), dtype=np.uint8)
        self.P = np.zeros((blksize, payload_size), dtype=np.uint8)
        self.row_filled = np.zeros(blksize, dtype=bool)
        self.rank = 0

    @property
    def is_complete(self) -> bool:
        return bool(self.row_filled[: self.target].all())

    def insert(self, pkt: CodedPayload) -> bool:
        """
        Forward-eliminate the packet against the stored rows.

        Returns:
        -------
        - bool: True if the packet was innovative and has been stored,
            False if it is linearly dependent on the stored rows (or
            carries an all-zero coefficient vector)

        Raises:
        ------
        - ContractViolationException: if the coefficient vector does not
            have blksize entries
        """
        if pkt.coeffs.shape[0] != self.blksize:
            raise ContractViolationException(
                f"expected {self.blksize} coefficients, got {pkt.coeffs.shape[0]}"
            )

        c = pkt.coeffs.copy()
        p = pkt.data.copy()
        while True:
            nonzero = np.flatnonzero(c)
            if nonzero.size == 0:
                return False

            index = int(nonzero[0])
            lead = int(c[index])
            if not self.row_filled[index]:
                if lead != 1:
                    inverse = INV_TABLE[lead]
                    c = MUL_TABLE[inverse][c]
                    p = MUL_TABLE[inverse][p]
                self.C[index] = c
                self.P[index] = p
                self.row_filled[index] = True
                self.rank += 1
                return True

            c ^= MUL_TABLE[lead][self.C[index]]
            p ^= MUL_TABLE[lead][self.P[index]]

    def decode(self) -> List[bytes]:
        """
        Gauss-Jordan back substitution on the upper-triangular matrix.

        Raises:
        ------
        - NotDecodableException: if fewer than `target` dofs are held

        Returns:
        -------
        - List[bytes]: the `target` source packets in order
        """
        if not self.row_filled[: self.target].all():
            raise NotDecodableException(
                f"block {self.blkno} holds {self.rank} of {self.target} dofs"
            )

        for r in range(self.target - 1, 0, -1):
            factors = self.C[:r, r].copy()
            above = np.flatnonzero(factors)
            if above.size == 0:
                continue
            self.C[above] ^= MUL_TABLE[factors[above, None], self.C[r]]
            self.P[above] ^= MUL_TABLE[factors[above, None], self.P[r]]

        return [self.P[r].tobytes() for r in range(self.target)]
