""" Deterministic discrete-event simulation of a CTCP transfer.

DESCRIPTION
    Every path is a pair of bottleneck links (data and ACK direction)
    with a propagation delay, a serialization rate and a FIFO queue of
    finite capacity. Data packets are dropped i.i.d. with the path's
    loss rate; the draw happens when the packet is sent, and a dropped
    packet still occupies the bottleneck. Optional exponential jitter on
    the delay reorders packets.

    The simulator hands message objects directly to the endpoints; the
    wire format only enters through the packet sizes.

    Events are ordered by time, ties by insertion order, and all random
    numbers come from generators seeded per path, so identical inputs
    give identical event sequences and reports.
"""
import csv
import heapq
import logging
from collections import deque
from enum import IntEnum
from pathlib import Path
from typing import Deque, Dict, List, Optional, Tuple, Union

import numpy as np

from ctcp.endpoint import (
    ReceiverEndpoint,
    SenderEndpoint,
    accept_synack,
    answer_syn,
    make_syn,
)
from ctcp.exceptions import ContractViolationException, StallException
from ctcp.models.message import (
    AckPacket,
    DataPacket,
    Handshake,
    Message,
    MessageType,
)
from ctcp.models.parameters import CtcpParameters
from ctcp.models.report import (
    EstimateSample,
    PathReport,
    ThroughputSample,
    TransferReport,
)
from ctcp.models.scenario import PathConfig, Scenario, SimulationLimits
from ctcp.receiver import ReceiverState
from ctcp.sender import SenderState
from ctcp.trace import TraceRecorder
from ctcp.wire import ACK, HANDSHAKE, data_wire_size

logger = logging.getLogger("ctcp.netsim")

# IPv4 + UDP header bytes added to every datagram on a link
DATAGRAM_OVERHEAD = 28


class EventKind(IntEnum):
    """DELIVER_DATA hands a message to the receiver, DELIVER_ACK to the
    sender, whatever its type."""

    DELIVER_DATA = 0
    DELIVER_ACK = 1
    CLOCK_TICK = 2
    TRANSMIT_OPPORTUNITY = 3


def loss_draw(path: PathConfig, rng: np.random.Generator) -> bool:
    """True if the packet is dropped"""
    return bool(rng.random() < path.loss_rate)


def make_stream(length: int, seed: int) -> bytes:
    """Random stream content of `length` bytes"""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()


def message_size(msg: Message, params: CtcpParameters) -> int:
    """Bytes the message occupies on a link"""
    if isinstance(msg, DataPacket):
        size = data_wire_size(msg.is_systematic, params.blksize, params.payload_size)
    elif isinstance(msg, AckPacket):
        size = ACK.size
    else:
        size = HANDSHAKE.size
    return size + DATAGRAM_OVERHEAD


class Link:
    """One direction of a path: a FIFO bottleneck with finite queue.

    Attributes:
    ----------
    - busy_until (float): time the last queued packet leaves the
        bottleneck
    """

    def __init__(
        self,
        delay: float,
        bandwidth: float,
        capacity: int,
        jitter: float = 0.0,
        jitter_rng: Optional[np.random.Generator] = None,
    ):
        self.delay = delay
        self.bandwidth = bandwidth
        self.capacity = capacity
        self.jitter = jitter
        self.jitter_rng = jitter_rng
        self.busy_until = 0.0
        self._departures: Deque[float] = deque()

    def occupancy(self, now: float) -> int:
        """Packets queued or in serialization at `now`"""
        departures = self._departures
        while departures and departures[0] <= now:
            departures.popleft()
        return len(departures)

    def enqueue(self, now: float, size: int, jitter: bool = True) -> Optional[float]:
        """
        Put a packet of `size` bytes on the link.

        Returns:
        -------
        - Optional[float]: arrival time at the far end, None if the queue
            is full and the packet is dropped
        """
        if self.occupancy(now) >= self.capacity:
            return None
        start = max(now, self.busy_until)
        finish = start + size * 8 / self.bandwidth
        self.busy_until = finish
        self._departures.append(finish)

        arrival = finish + self.delay
        if jitter and self.jitter > 0 and self.jitter_rng is not None:
            arrival += self.jitter_rng.exponential(self.jitter)
        return arrival


class _PathRuntime:
    """Links, generators and counters of one simulated path"""

    def __init__(self, path_id: int, config: PathConfig):
        self.path_id = path_id
        self.config = config
        loss_seq, jitter_seq, ack_seq = np.random.SeedSequence(config.seed).spawn(3)
        self.loss_rng = np.random.default_rng(loss_seq)
        self.ack_loss_rng = np.random.default_rng(ack_seq)
        jitter_rng = np.random.default_rng(jitter_seq)
        self.forward = Link(
            config.one_way_delay,
            config.bandwidth,
            config.queue_capacity,
            config.jitter,
            jitter_rng,
        )
        self.backward = Link(
            config.one_way_delay,
            config.bandwidth,
            config.queue_capacity,
            config.jitter,
            jitter_rng,
        )
        self.report = PathReport(path_id=path_id)
        self.innovative = 0


class Simulation:
    """
    One simulated connection.

    Args:
    ----
    - paths (List[PathConfig]): the simulated paths, path 0 carries the
        handshake
    - stream (bytes): application data pushed by the sender
    - params (CtcpParameters): sender parameters; the receiver proposes
        the same values in its SYN
    - limits (SimulationLimits): clock and watchdog
    - trace (Optional[TraceRecorder]): records sender and receiver
        events. If None, a bounded recorder keeps the tail for stall
        diagnostics.
    - record_calls (bool): keep the endpoint call sequences
    """

    def __init__(
        self,
        paths: List[PathConfig],
        stream: bytes,
        params: Optional[CtcpParameters] = None,
        limits: Optional[SimulationLimits] = None,
        trace: Optional[TraceRecorder] = None,
        record_calls: bool = False,
    ):
        if not paths:
            raise ContractViolationException("the simulation needs at least one path")
        if not stream:
            raise ContractViolationException("the simulation needs a nonempty stream")

        self.params = params or CtcpParameters()
        self.limits = limits or SimulationLimits()
        self.stream = stream
        self.record_calls = record_calls
        if trace is None and self.limits.trace_tail > 0:
            trace = TraceRecorder(maxlen=self.limits.trace_tail)
        self.trace = trace

        self.paths = [_PathRuntime(i, config) for i, config in enumerate(paths)]
        self.sender: Optional[SenderEndpoint] = None
        self.receiver: Optional[ReceiverEndpoint] = None

        self.now = 0.0
        self._events: List[Tuple[float, int, int, int, Optional[Message]]] = []
        self._counter = 0
        self._received = bytearray()
        self.completion_time: Optional[float] = None
        self._closed = False
        self._fin_sent = False
        self._last_progress = 0.0

        self.estimates: List[EstimateSample] = []
        self._throughput: Dict[Tuple[int, int], int] = {}

    # ------------------------------------------------------------------
    # event plumbing

    def _schedule(
        self,
        time: float,
        kind: EventKind,
        path_id: int = 0,
        msg: Optional[Message] = None,
    ) -> None:
        heapq.heappush(self._events, (time, self._counter, kind, path_id, msg))
        self._counter += 1

    def _send_forward(self, path_id: int, msg: Message) -> None:
        """Sender -> receiver"""
        path = self.paths[path_id]
        is_data = isinstance(msg, DataPacket)
        arrival = path.forward.enqueue(
            self.now, message_size(msg, self.params), jitter=is_data
        )
        if not is_data:
            # the handshake and the close exchange are not subject to loss
            if arrival is None:
                arrival = path.forward.busy_until + path.config.one_way_delay
            self._schedule(arrival, EventKind.DELIVER_DATA, path_id, msg)
            return

        path.report.packets_sent += 1
        if arrival is None:
            path.report.queue_drops += 1
        elif loss_draw(path.config, path.loss_rng):
            path.report.random_losses += 1
        else:
            self._schedule(arrival, EventKind.DELIVER_DATA, path_id, msg)

    def _send_backward(self, path_id: int, msg: Message) -> None:
        """Receiver -> sender"""
        path = self.paths[path_id]
        is_ack = isinstance(msg, AckPacket)
        arrival = path.backward.enqueue(
            self.now, message_size(msg, self.params), jitter=is_ack
        )
        if not is_ack:
            if arrival is None:
                arrival = path.backward.busy_until + path.config.one_way_delay
            self._schedule(arrival, EventKind.DELIVER_ACK, path_id, msg)
            return

        if arrival is None or (
            path.config.ack_loss_rate > 0
            and path.ack_loss_rng.random() < path.config.ack_loss_rate
        ):
            path.report.acks_lost += 1
            return
        self._schedule(arrival, EventKind.DELIVER_ACK, path_id, msg)

    # ------------------------------------------------------------------
    # endpoints

    def _at_sender(self, path_id: int, msg: Message) -> None:
        if isinstance(msg, Handshake):
            if msg.msg_type == MessageType.SYN:
                self._open_sender(msg)
            elif msg.msg_type == MessageType.FINACK:
                self._send_forward(
                    path_id,
                    Handshake(
                        msg_type=MessageType.FINACK,
                        path_id=path_id,
                        blksize=self.params.blksize,
                        numblks=self.params.numblks,
                        payload_size=self.params.payload_size,
                    ),
                )
            return

        if self.sender is None:
            return
        for out_path, packet in self.sender.on_message(path_id, msg, self.now):
            self._send_forward(out_path, packet)
        self._maybe_send_fin()

    def _open_sender(self, syn: Handshake) -> None:
        if self.sender is not None:
            return
        params, synack = answer_syn(syn, self.params, len(self.stream))
        self.params = params
        state = SenderState(
            params,
            len(self.stream),
            num_paths=len(self.paths),
            now=self.now,
            trace=self.trace,
        )
        state.push_stream(self.stream)
        state.close()
        self.sender = SenderEndpoint(state, record=self.record_calls)
        logger.debug("Sender opened at %.3fs", self.now)
        self._send_forward(0, synack)
        self._schedule(self.now, EventKind.TRANSMIT_OPPORTUNITY)
        self._schedule(self.now + self.limits.tick_interval, EventKind.CLOCK_TICK)

    def _maybe_send_fin(self) -> None:
        if self._fin_sent or self.sender is None or not self.sender.is_complete:
            return
        self._fin_sent = True
        self._send_forward(
            0,
            Handshake(
                msg_type=MessageType.FIN,
                blksize=self.params.blksize,
                numblks=self.params.numblks,
                payload_size=self.params.payload_size,
                stream_length=len(self.stream),
            ),
        )

    def _at_receiver(self, path_id: int, msg: Message) -> None:
        if isinstance(msg, Handshake):
            if msg.msg_type == MessageType.SYNACK and self.receiver is None:
                params = accept_synack(msg, self.params)
                state = ReceiverState(params, msg.stream_length, trace=self.trace)
                self.receiver = ReceiverEndpoint(state, record=self.record_calls)
            elif msg.msg_type == MessageType.FIN:
                self._send_backward(
                    path_id, msg.model_copy(update={"msg_type": MessageType.FINACK})
                )
            elif msg.msg_type == MessageType.FINACK:
                self._closed = True
            return

        path = self.paths[path_id]
        path.report.delivered += 1
        if self.receiver is None:
            return
        state = self.receiver.state
        dependent, dropped = state.packets_dependent, state.packets_dropped
        for out_path, ack in self.receiver.on_message(path_id, msg, self.now):
            self._send_backward(out_path, ack)

        if state.packets_dependent != dependent:
            path.report.dependent += 1
        elif state.packets_dropped == dropped:
            path.innovative += 1
            self._last_progress = self.now
            key = (int(self.now / self.limits.throughput_interval), path_id)
            self._throughput[key] = self._throughput.get(key, 0) + 1

        delivered = self.receiver.read_delivered()
        if delivered:
            self._received.extend(delivered)
        if state.is_complete and self.completion_time is None:
            self.completion_time = self.now
            logger.debug("Stream delivered at %.3fs", self.now)

    def _on_tick(self) -> None:
        if self.sender is not None:
            for out_path, packet in self.sender.on_tick(self.now):
                self._send_forward(out_path, packet)
            for path in self.sender.state.paths:
                self.estimates.append(
                    EstimateSample.model_construct(
                        time=self.now,
                        path_id=path.path_id,
                        tokens=path.tokens,
                        rtt=path.rtt,
                        p=path.p,
                        p_long=path.p_long,
                    )
                )
        if self.receiver is not None:
            self.receiver.on_tick(self.now)

        if self.completion_time is not None:
            if self.now - self.completion_time > self.limits.stall_timeout:
                # delivery is complete, the close exchange may give up
                logger.warning("Close exchange incomplete, closing anyway")
                self._closed = True
                return
        elif self.now - self._last_progress > self.limits.stall_timeout:
            tail = self.trace.tail(self.limits.trace_tail) if self.trace else []
            raise StallException(
                f"no progress for {self.limits.stall_timeout:.1f}s "
                f"(simulated time {self.now:.3f}s)",
                trace_tail=tail,
            )
        self._schedule(self.now + self.limits.tick_interval, EventKind.CLOCK_TICK)

    # ------------------------------------------------------------------

    def run(self, name: str = "scenario") -> TransferReport:
        """
        Run the connection from the receiver's SYN to the end of the
        close exchange.

        Raises:
        ------
        - StallException: if no innovative packet reaches the receiver
            within the stall timeout

        Returns:
        -------
        - TransferReport: duration, goodput and per-path counters
        """
        self._send_backward(0, make_syn(self.params))

        while self._events and not self._closed:
            time, _, kind, path_id, msg = heapq.heappop(self._events)
            self.now = time
            if kind == EventKind.DELIVER_DATA:
                self._at_receiver(path_id, msg)
            elif kind == EventKind.DELIVER_ACK:
                self._at_sender(path_id, msg)
            elif kind == EventKind.CLOCK_TICK:
                self._on_tick()
            elif self.sender is not None:
                for out_path, packet in self.sender.poll(self.now):
                    self._send_forward(out_path, packet)

        return self._report(name)

    def _report(self, name: str) -> TransferReport:
        for _, _, kind, path_id, msg in self._events:
            if kind == EventKind.DELIVER_DATA and isinstance(msg, DataPacket):
                self.paths[path_id].report.in_flight += 1

        duration = self.completion_time or self.now
        goodput = len(self.stream) * 8 / duration / 1e6 if duration > 0 else 0.0
        innovative = sum(path.innovative for path in self.paths) or 1
        reports = []
        for path in self.paths:
            if self.sender is not None:
                state = self.sender.state.paths[path.path_id]
                path.report.packets_coded = state.packets_coded
                path.report.timeouts = state.timeouts
            path.report.goodput_mbps = goodput * path.innovative / innovative
            reports.append(path.report)

        interval = self.limits.throughput_interval
        bins = max((key[0] for key in self._throughput), default=-1) + 1
        throughput = [
            ThroughputSample(
                time_s=round(index * interval, 9),
                path_id=path.path_id,
                mbps=self._throughput.get((index, path.path_id), 0)
                * self.params.payload_size
                * 8
                / interval
                / 1e6,
            )
            for index in range(bins)
            for path in self.paths
        ]

        loss_rates = {path.config.loss_rate for path in self.paths}
        return TransferReport(
            scenario=name,
            loss_rate=loss_rates.pop() if len(loss_rates) == 1 else None,
            seed=self.params.seed,
            stream_length=len(self.stream),
            duration=duration,
            goodput_mbps=goodput,
            verified=bytes(self._received) == self.stream,
            paths=reports,
            estimates=self.estimates,
            throughput=throughput,
        )


def run_transfer(
    paths: List[PathConfig],
    stream: bytes,
    limits: Optional[SimulationLimits] = None,
    params: Optional[CtcpParameters] = None,
    trace: Optional[TraceRecorder] = None,
    name: str = "scenario",
) -> TransferReport:
    """
    Simulate the transfer of `stream` over `paths`.

    Raises:
    ------
    - StallException: if the transfer stops making progress
    """
    simulation = Simulation(paths, stream, params=params, limits=limits, trace=trace)
    report = simulation.run(name)
    logger.info(
        "%s: %d bytes in %.3fs (%.2f Mbit/s)",
        name,
        report.stream_length,
        report.duration,
        report.goodput_mbps,
    )
    return report


def run_scenario(
    scenario: Scenario,
    loss_rate: Optional[float] = None,
    seed: Optional[int] = None,
    trace: Optional[TraceRecorder] = None,
) -> TransferReport:
    """Simulate one run of a scenario, optionally at a given loss rate
    and with all generators derived from `seed`"""
    if loss_rate is not None:
        scenario = scenario.with_loss_rate(loss_rate)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    if trace is None and scenario.limits.record_trace:
        trace = TraceRecorder()

    stream = make_stream(scenario.stream_length, scenario.stream_seed)
    return run_transfer(
        scenario.paths,
        stream,
        limits=scenario.limits,
        params=scenario.params,
        trace=trace,
        name=scenario.name,
    )


def write_throughput_csv(report: TransferReport, path: Union[str, Path]) -> None:
    """Write the per-bin goodput as CSV (time_s, path_id, mbps)"""
    with open(path, "w", newline="", encoding="utf-8") as file_handle:
        writer = csv.writer(file_handle)
        writer.writerow(["time_s", "path_id", "mbps"])
        for sample in report.throughput:
            writer.writerow(
                [f"{sample.time_s:.3f}", sample.path_id, f"{sample.mbps:.4f}"]
            )
