""" CTCP sender state machine.

DESCRIPTION
    The sender is transport-agnostic and clock-driven: every operation
    takes the current protocol time as an argument. The simulator and the
    UDP transport drive it through ctcp.endpoint.SenderEndpoint.

    Per path the sender estimates RTT and loss rates from the ACKs,
    manages its tokens (one token per transmission) and detects
    timeouts. Connection-wide it holds the numblks active blocks, slides
    the block window when the receiver reports a decoded block, and
    decides on every transmit opportunity which block to code from.
"""
import logging
import math
from collections import deque
from enum import Enum
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np

from ctcp.exceptions import ContractViolationException
from ctcp.field_codec import Block, encode
from ctcp.models.message import AckPacket, DataPacket, DenseCoding, SystematicCoding
from ctcp.models.parameters import CtcpParameters
from ctcp.trace import TraceRecorder

logger = logging.getLogger("ctcp.sender")

# Lower bound of an RTT sample; keeps the RTT average strictly positive
# on zero-delay links.
MIN_RTT_SAMPLE = 1e-6

# Send records further than this many packets below seqno_una are dropped.
SENT_LOG_RETENTION = 4096


class PathMode(str, Enum):
    SLOW_START = "SLOW_START"
    CONGESTION_AVOIDANCE = "CONGESTION_AVOIDANCE"


def update_loss_average(value: float, weight: float, losses: int) -> float:
    """
    Batched update of a 0/1 exponential average for one acknowledged
    packet preceded by `losses` lost ones.

    Equivalent to one success update (value * (1 - weight)) followed by
    `losses` loss updates (value * (1 - weight) + weight).
    """
    keep = 1.0 - weight
    if losses == 0:
        return value * keep
    if keep == 0.0:
        return 1.0
    # weight * (1 + keep + ... + keep**(losses - 1))
    gain = -math.expm1(losses * math.log(keep)) / (1.0 - keep)
    return value * keep ** (losses + 1) + weight * gain


class PathState:
    """Estimator and token state of one path.

    Attributes:
    ----------
    - p, p_long, p_stdlong (float): short-term loss rate, long-term loss
        rate and long-term deviation of the loss rate
    - rtt, rto (float): smoothed round-trip time and timeout in seconds
    - seqno_nxt (int): sequence number of the next transmission
    - seqno_una (int): oldest unacknowledged sequence number
    - ss_threshold (float): credit that ends slow start; in congestion
        avoidance also the most credit a path keeps in reserve
    - time_lastack (float): time of the latest accepted ACK (or of the
        SYN, or of the latest timeout)
    - tokens (float): transmission credit
    - mode (PathMode): slow start or congestion avoidance
    - sent_log (Dict[int, Tuple[int, float]]): seqno -> (block number,
        send time)
    - token_log (Optional[List[Tuple[str, float, float]]]): audit log of
        every token mutation (reason, before, after) if enabled
    """

    def __init__(
        self,
        path_id: int,
        params: CtcpParameters,
        now: float = 0.0,
        audit_tokens: bool = False,
    ):
        self.path_id = path_id
        self.p = params.initial_p
        self.p_long = params.initial_p_long
        self.p_stdlong = params.initial_p_stdlong
        self.rtt = params.initial_rtt
        self.rto = params.gamma * params.initial_rtt
        self.seqno_nxt = 0
        self.seqno_una = 0
        self.ss_threshold = params.initial_ss_threshold
        self.time_lastack = now
        self.tokens = params.initial_tokens
        self.mode = PathMode.SLOW_START
        self.sent_log: Dict[int, Tuple[int, float]] = {}
        self.token_log: Optional[List[Tuple[str, float, float]]] = (
            [] if audit_tokens else None
        )

        # (seqno, blkno, send time) of the packets at or above seqno_una,
        # in transmission order
        self._flight: Deque[Tuple[int, int, float]] = deque()

        self.packets_sent = 0
        self.packets_coded = 0
        self.acks_processed = 0
        self.acks_ignored = 0
        self.timeouts = 0

    @property
    def outstanding(self) -> int:
        return self.seqno_nxt - self.seqno_una

    @property
    def window(self) -> float:
        """Credit plus packets in flight; the path's congestion window"""
        return self.tokens + self.outstanding

    def set_tokens(self, value: float, reason: str) -> None:
        if self.token_log is not None:
            self.token_log.append((reason, self.tokens, value))
        self.tokens = value

    def log_send(self, seqno: int, blkno: int, now: float) -> None:
        self.sent_log[seqno] = (blkno, now)
        self._flight.append((seqno, blkno, now))

    def forget_below(self, seqno: int) -> None:
        """Invalidate every send record below `seqno`"""
        for old in [s for s in self.sent_log if s < seqno]:
            del self.sent_log[old]
        self._flight.clear()

    def prune_sent_log(self) -> None:
        horizon = self.seqno_una - SENT_LOG_RETENTION
        while self.sent_log:
            oldest = next(iter(self.sent_log))
            if oldest >= horizon:
                break
            del self.sent_log[oldest]

    def onfly(self, now: float, factor: float) -> Dict[int, int]:
        """
        Count the in-flight packets per block: unacknowledged packets
        (seqno in [seqno_una, seqno_nxt - 1]) younger than factor * rtt.
        """
        flight = self._flight
        while flight and flight[0][0] < self.seqno_una:
            flight.popleft()

        horizon = now - factor * self.rtt
        counts: Dict[int, int] = {}
        sent_log = self.sent_log
        for seqno, blkno, sent_at in reversed(flight):
            if sent_at <= horizon:
                break
            if seqno not in sent_log:
                continue
            counts[blkno] = counts.get(blkno, 0) + 1
        return counts


class SenderState:
    """
    Connection-wide sender state.

    Args:
    ----
    - params (CtcpParameters): negotiated parameters
    - stream_length (int): number of stream bytes announced in the
        handshake
    - num_paths (int): number of paths of the connection
    - now (float): time the SYN arrived; initialises time_lastack
    - trace (Optional[TraceRecorder]): event trace
    - audit_tokens (bool): keep a log of every token mutation
    """

    def __init__(
        self,
        params: CtcpParameters,
        stream_length: int,
        num_paths: int = 1,
        now: float = 0.0,
        trace: Optional[TraceRecorder] = None,
        audit_tokens: bool = False,
    ):
        if num_paths < 1:
            raise ContractViolationException("a connection needs at least one path")

        self.params = params
        self.blksize = params.blksize
        self.numblks = params.numblks
        self.payload_size = params.payload_size
        self.stream_length = stream_length
        self.total_packets = math.ceil(stream_length / params.payload_size)
        self.total_blocks = math.ceil(self.total_packets / params.blksize)

        self.currblk = 0
        self.currdof = 0
        self.blocks: Dict[int, Block] = {}
        self.paths = [
            PathState(i, params, now, audit_tokens=audit_tokens)
            for i in range(num_paths)
        ]
        self.rng = np.random.default_rng(params.seed)
        self.trace = trace

        self._pending = bytearray()
        self._pushed = 0
        self._ready: Deque[Tuple[int, bytes]] = deque()
        self._next_blkno = 0
        self._closed = False

    # ------------------------------------------------------------------
    # application side

    def push_stream(self, data: bytes) -> None:
        """
        Append application bytes to the stream.

        Complete blocks are cut right away; the final, possibly short
        block is cut when the pushed total reaches the stream length.

        Raises:
        ------
        - ContractViolationException: when pushing after close() or
            beyond the announced stream length
        """
        if self._closed:
            raise ContractViolationException("push_stream() after FIN")
        if self._pushed + len(data) > self.stream_length:
            raise ContractViolationException(
                f"stream length {self.stream_length} exceeded"
            )

        self._pending.extend(data)
        self._pushed += len(data)
        self._cut_blocks()
        self._admit_blocks()

    def close(self) -> None:
        """Mark the end of the stream (FIN).

        Raises:
        ------
        - ContractViolationException: if fewer bytes than announced
            have been pushed
        """
        if self._pushed != self.stream_length:
            raise ContractViolationException(
                f"closing after {self._pushed} of {self.stream_length} bytes"
            )
        self._closed = True

    def _cut_blocks(self) -> None:
        block_bytes = self.params.block_bytes
        while len(self._pending) >= block_bytes or (
            self._pending and self._pushed == self.stream_length
        ):
            chunk = bytes(self._pending[:block_bytes])
            del self._pending[:block_bytes]
            self._ready.append((self._next_blkno, chunk))
            self._next_blkno += 1

    def _admit_blocks(self) -> None:
        """Move cut blocks into memory while the window has room"""
        limit = self.currblk + self.numblks
        while self._ready and self._ready[0][0] < limit:
            blkno, chunk = self._ready.popleft()
            if blkno < self.currblk:
                continue
            self.blocks[blkno] = Block.from_bytes(
                blkno, self.blksize, self.payload_size, chunk
            )

    @property
    def block_count(self) -> int:
        """Number of blocks the pushed stream has been cut into"""
        return self._next_blkno

    @property
    def is_complete(self) -> bool:
        """True once the receiver has acknowledged every block"""
        return self.currblk >= self.total_blocks

    # ------------------------------------------------------------------
    # ACK processing

    def on_ack(self, path_id: int, ack: AckPacket, now: float) -> None:
        """
        Update the network estimates from an ACK, slide the block window
        and apply the congestion control reaction.

        ACKs whose packet has no send record (duplicates, ACKs for packets
        sent before a timeout) are ignored.
        """
        path = self.paths[path_id]
        entry = path.sent_log.pop(ack.ack_seqno, None)
        if entry is None:
            path.acks_ignored += 1
            if self.trace is not None:
                self.trace.emit(
                    now, "sender", "ack_ignored", path_id, ack_seqno=ack.ack_seqno
                )
            return

        params = self.params
        path.acks_processed += 1
        path.time_lastack = now
        sample = max(now - entry[1], MIN_RTT_SAMPLE)
        path.rtt = path.rtt * (1.0 - params.alpha_rtt) + sample * params.alpha_rtt

        if ack.ack_currblk > self.currblk:
            for blkno in range(self.currblk, ack.ack_currblk):
                self.blocks.pop(blkno, None)
            self.currdof = ack.ack_currdof
            self.currblk = ack.ack_currblk
            self._admit_blocks()
            logger.debug("Path %d: currblk advanced to %d", path_id, self.currblk)

        if ack.ack_seqno >= path.seqno_una:
            losses = ack.ack_seqno - path.seqno_una
            path.p = update_loss_average(path.p, params.mu, losses)
            path.p_long = update_loss_average(path.p_long, params.nu, losses)
            path.p_stdlong = path.p_stdlong * (1.0 - params.nu) + params.nu * abs(
                path.p - path.p_long
            )
            path.seqno_una = ack.ack_seqno + 1
            # the acknowledged packet and the packets it reveals as lost
            # hand their tokens back
            path.set_tokens(path.tokens + 1 + losses, "regenerate")
            path.prune_sent_log()

        # an ACK reporting an older block carries that block's dofs
        if ack.ack_currblk == self.currblk:
            self.currdof = max(ack.ack_currdof, self.currdof)

        self.on_ack_cc(path_id, sample)

        if self.trace is not None:
            self.trace.emit(
                now,
                "sender",
                "tokens",
                path_id,
                tokens=path.tokens,
                window=path.window,
                mode=path.mode.value,
            )
            self.trace.emit(
                now,
                "sender",
                "ack_processed",
                path_id,
                ack_seqno=ack.ack_seqno,
                currblk=self.currblk,
                currdof=self.currdof,
                rtt=path.rtt,
                p=path.p,
                tokens=path.tokens,
            )

    def on_ack_cc(self, path_id: int, rtt_sample: float) -> None:
        """
        Congestion control reaction to one accepted ACK.

        The avoidance steps are scaled by the window (credit plus packets
        in flight). In avoidance the credit a path keeps unspent is capped
        at ss_threshold; credit beyond it would only be released as a
        burst once the scheduler finds a block again.
        """
        params = self.params
        path = self.paths[path_id]
        path.rto = params.gamma * path.rtt
        avoiding = path.mode == PathMode.CONGESTION_AVOIDANCE

        if not avoiding:
            path.set_tokens(path.tokens + 1, "slow_start")
            if path.tokens > path.ss_threshold:
                path.mode = PathMode.CONGESTION_AVOIDANCE
                logger.debug("Path %d: congestion avoidance", path_id)
        else:
            delta = 1.0 - path.rtt / rtt_sample
            divisor = max(path.window, params.token_floor)
            if delta > params.beta_vegas:
                path.set_tokens(path.tokens - 1.0 / divisor, "delay_decrease")
            elif delta < params.alpha_vegas:
                path.set_tokens(path.tokens + 1.0 / divisor, "delay_increase")

        if path.p > path.p_long + path.p_stdlong:
            path.set_tokens(path.tokens - (path.p - path.p_long) / 2.0, "loss_spike")

        if path.tokens < params.token_floor:
            path.set_tokens(params.token_floor, "floor")

        reserve = max(path.ss_threshold, params.token_floor)
        if avoiding and path.tokens > reserve:
            path.set_tokens(reserve, "cap")

    # ------------------------------------------------------------------
    # timeouts

    def on_tick(self, path_id: int, now: float) -> bool:
        """
        Check the path for a timeout.

        Returns:
        -------
        - bool: True if the path timed out
        """
        params = self.params
        path = self.paths[path_id]
        if now <= path.time_lastack + path.rto:
            return False

        path.timeouts += 1
        path.rto = 2.0 * path.rto
        path.ss_threshold = max(path.window / 2.0, params.initial_tokens)
        path.set_tokens(params.initial_tokens, "timeout")
        path.seqno_una = path.seqno_nxt
        path.mode = PathMode.SLOW_START
        path.forget_below(path.seqno_una)
        path.time_lastack = now
        if params.reset_estimates_on_timeout:
            path.p = params.initial_p
            path.p_long = params.initial_p_long
            path.p_stdlong = params.initial_p_stdlong

        logger.debug("Path %d: timeout, rto now %.3fs", path_id, path.rto)
        if self.trace is not None:
            self.trace.emit(
                now, "sender", "timeout", path_id, rto=path.rto, tokens=path.tokens
            )
        return True

    # ------------------------------------------------------------------
    # scheduling

    def _active_blocks(self):
        for blkno in range(self.currblk, self.currblk + self.numblks):
            block = self.blocks.get(blkno)
            if block is None:
                return
            yield block

    def schedule_single(self, path_id: int, now: float) -> Optional[int]:
        """
        Pick the block for the next transmission on a single path.

        A block qualifies while the packets in flight are not expected
        to deliver the dofs it still needs: blksize (its fill count) for
        later blocks, the acknowledged deficit for currblk.
        """
        path = self.paths[path_id]
        onfly = path.onfly(now, self.params.onfly_factor)
        success = 1.0 - path.p

        for block in self._active_blocks():
            expected = success * onfly.get(block.blkno, 0)
            if block.blkno == self.currblk:
                if expected < block.fill_count - self.currdof:
                    return block.blkno
            elif expected < block.fill_count:
                return block.blkno
        return None

    def schedule_multi(self, path_id: int, now: float) -> Optional[int]:
        """
        Pick the block for the next transmission on path `path_id`,
        taking the packets in flight on every path into account.

        currblk is taken first if the in-flight packets, corrected by what
        the other paths deliver within this path's RTT, fall short of
        currdof; otherwise every block, currblk included, qualifies while
        its expected in-flight packets stay below its fill count. A slow
        path thereby leaves a covered currblk to faster ones.
        """
        factor = self.params.onfly_factor
        thru = 0.0
        sent = 0.0
        cof: Dict[int, float] = {}
        for other in self.paths:
            success = 1.0 - other.p
            outstanding = other.outstanding
            thru += success * outstanding / other.rtt
            sent += success * outstanding
            for blkno, count in other.onfly(now, factor).items():
                cof[blkno] = cof.get(blkno, 0.0) + success * count

        path = self.paths[path_id]
        for block in self._active_blocks():
            covered = cof.get(block.blkno, 0.0)
            if block.blkno == self.currblk:
                if thru * path.rtt - sent + covered < self.currdof:
                    return block.blkno
            if covered < block.fill_count:
                return block.blkno
        return None

    def schedule(self, path_id: int, now: float) -> Optional[int]:
        if self.params.multipath:
            return self.schedule_multi(path_id, now)
        return self.schedule_single(path_id, now)

    # ------------------------------------------------------------------
    # transmission

    def try_transmit(self, path_id: int, now: float) -> Optional[DataPacket]:
        """
        Spend one token on path `path_id` if the scheduler finds a block.

        Returns:
        -------
        - Optional[DataPacket]: the packet to put on the wire, None if no
            token is available, the path window is full or no block
            needs more packets (the token is then kept)
        """
        path = self.paths[path_id]
        if path.tokens < 1.0:
            return None
        max_window = self.params.max_window
        if max_window is not None and path.outstanding >= max_window:
            return None

        blkno = self.schedule(path_id, now)
        if blkno is None:
            return None

        block = self.blocks[blkno]
        coded = encode(block, block.next_index, self.rng)
        block.next_index += 1

        seqno = path.seqno_nxt
        path.log_send(seqno, blkno, now)
        path.seqno_nxt += 1
        path.packets_sent += 1
        path.set_tokens(path.tokens - 1.0, "transmit")

        if coded.is_systematic:
            coding = SystematicCoding.model_construct(
                kind="SYSTEMATIC", index=coded.systematic_index
            )
        else:
            path.packets_coded += 1
            coding = DenseCoding.model_construct(
                kind="DENSE", coeffs=coded.coeffs.tobytes()
            )

        if self.trace is not None:
            self.trace.emit(
                now,
                "sender",
                "packet_sent",
                path_id,
                seqno=seqno,
                blkno=blkno,
                coded=not coded.is_systematic,
                tokens=path.tokens,
            )

        return DataPacket.model_construct(
            path_id=path_id,
            seqno=seqno,
            blockno=blkno,
            coding=coding,
            payload=coded.data.tobytes(),
        )

    def transmit_all(self, path_id: int, now: float) -> List[DataPacket]:
        """Transmit on the path until tokens or scheduler run out"""
        packets = []
        while True:
            packet = self.try_transmit(path_id, now)
            if packet is None:
                return packets
            packets.append(packet)
