""" Results of simulated transfers and experiments.

See docs/results.md for the CSV layout of ExperimentRow.
"""
from typing import List, Optional

from pydantic import BaseModel


class PathReport(BaseModel):
    """Per-path counters of one transfer.

    The conservation law
    packets_sent = delivered + random_losses + queue_drops + in_flight
    holds for every report of the simulator.
    """

    path_id: int
    packets_sent: int = 0
    packets_coded: int = 0
    delivered: int = 0
    random_losses: int = 0
    queue_drops: int = 0
    in_flight: int = 0
    dependent: int = 0
    acks_lost: int = 0
    timeouts: int = 0
    goodput_mbps: float = 0.0


class EstimateSample(BaseModel):
    """Sender estimates of one path at one clock tick"""

    time: float
    path_id: int
    tokens: float
    rtt: float
    p: float
    p_long: float


class ThroughputSample(BaseModel):
    """Goodput of one path within one bin; time_s is the bin start"""

    time_s: float
    path_id: int
    mbps: float


class TransferReport(BaseModel):
    """Outcome of one simulated transfer.

    Attributes:
    ----------
    - scenario (str): scenario name
    - loss_rate (Optional[float]): loss rate if all paths share one
    - seed (int): seed of the coefficient generator
    - stream_length (int): bytes transferred
    - duration (float): seconds from the SYN to complete delivery
    - goodput_mbps (float): stream_length * 8 / duration in Mbit/s
    - verified (bool): delivered bytes equal the pushed stream
    - paths (List[PathReport]): per-path counters; goodput is
        attributed by the innovative packets each path delivered
    - estimates (List[EstimateSample]): sender estimates per tick
    - throughput (List[ThroughputSample]): per-bin delivered goodput
    """

    scenario: str
    loss_rate: Optional[float] = None
    seed: int = 0
    stream_length: int
    duration: float
    goodput_mbps: float
    verified: bool
    paths: List[PathReport]
    estimates: List[EstimateSample] = []
    throughput: List[ThroughputSample] = []


class ExperimentRow(BaseModel):
    """Means over the repetitions at one loss rate.

    path_mbps lists the multipath per-path goodputs,
    single_path_mbps the goodput of each path run alone (empty if the
    baseline was not requested).
    """

    loss_rate: float
    repetitions: int
    completed: int
    mean_duration: float
    mean_mbps: float
    path_mbps: List[float]
    single_path_mbps: List[float] = []


class ConnectionReport(BaseModel):
    """Outcome of a transfer over UDP.

    Attributes:
    ----------
    - role (str): "sender" or "receiver"
    - stream_length (int): bytes of the stream
    - duration (float): seconds from the handshake to complete delivery
        (receiver) or to the acknowledgment of the last block (sender)
    - goodput_mbps (float): stream_length * 8 / duration in Mbit/s
    - packets_per_path (List[int]): data packets sent (sender) or
        received (receiver) per path
    - parse_errors (int): datagrams dropped because they did not parse
    """

    role: str
    stream_length: int
    duration: float
    goodput_mbps: float
    packets_per_path: List[int]
    parse_errors: int = 0
