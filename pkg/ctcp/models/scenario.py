""" Simulation scenarios and experiment descriptions.
"""
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from ctcp.models.parameters import CtcpParameters

DEFAULT_QUEUE_CAPACITY = 100

# Timeout checks run every 10 ms of simulated time.
DEFAULT_TICK_INTERVAL = 0.010

DEFAULT_STALL_TIMEOUT = 30.0

# Width of the throughput bins, matching 100 ms plot resolution.
DEFAULT_THROUGHPUT_INTERVAL = 0.100

# Byte count of the reference file transfer.
REFERENCE_STREAM_LENGTH = 11_492_499


class PathConfig(BaseModel):
    """One simulated path.

    Attributes:
    ----------
    - one_way_delay (float): propagation delay per direction in seconds
    - bandwidth (float): bottleneck rate in bit/s, same in both directions
    - loss_rate (float): i.i.d. drop probability of a data packet
    - queue_capacity (int): packets the bottleneck queue holds,
        including the one being serialized
    - seed (int): seed of the path's loss generator
    - jitter (float): mean of the exponential extra delay per packet in
        seconds. 0 disables reordering.
    - ack_loss_rate (float): drop probability of an ACK
    """

    one_way_delay: float = Field(ge=0)
    bandwidth: float = Field(gt=0)
    loss_rate: float = Field(0.0, ge=0, le=1)
    queue_capacity: int = Field(DEFAULT_QUEUE_CAPACITY, ge=1)
    seed: int = 0
    jitter: float = Field(0.0, ge=0)
    ack_loss_rate: float = Field(0.0, ge=0, le=1)


class SimulationLimits(BaseModel):
    """Clock and watchdog settings of a simulation run.

    Attributes:
    ----------
    - tick_interval (float): period of the timeout checks in seconds
    - stall_timeout (float): simulated seconds without delivery progress
        after which the run is aborted
    - throughput_interval (float): width of the throughput bins
    - trace_tail (int): trace records attached to a stall diagnostic
    - record_trace (bool): keep the full event trace of the run
    """

    tick_interval: float = Field(DEFAULT_TICK_INTERVAL, gt=0)
    stall_timeout: float = Field(DEFAULT_STALL_TIMEOUT, gt=0)
    throughput_interval: float = Field(DEFAULT_THROUGHPUT_INTERVAL, gt=0)
    trace_tail: int = Field(200, ge=0)
    record_trace: bool = False


class Scenario(BaseModel):
    """Everything a simulation needs except the loss rate sweep.

    Attributes:
    ----------
    - name (str): scenario name, by default the file stem
    - paths (List[PathConfig]): the simulated paths
    - params (CtcpParameters): protocol parameters
    - stream_length (int): bytes to transfer
    - stream_seed (int): seed of the random stream content
    - limits (SimulationLimits): clock and watchdog
    """

    name: str = "scenario"
    paths: List[PathConfig] = Field(min_length=1)
    params: CtcpParameters = CtcpParameters()
    stream_length: int = Field(REFERENCE_STREAM_LENGTH, ge=1)
    stream_seed: int = 0
    limits: SimulationLimits = SimulationLimits()

    def with_loss_rate(self, loss_rate: float) -> "Scenario":
        """Copy of the scenario with every path set to `loss_rate`"""
        paths = [
            path.model_copy(update={"loss_rate": loss_rate}) for path in self.paths
        ]
        return self.model_copy(update={"paths": paths})

    def with_seed(self, seed: int) -> "Scenario":
        """
        Copy of the scenario in which every generator is derived from
        `seed`: the path loss generators (offset from their own seeds),
        the stream content and the coefficient generator.
        """
        paths = [
            path.model_copy(update={"seed": path.seed + 1000 * seed + index})
            for index, path in enumerate(self.paths)
        ]
        params = self.params.model_copy(update={"seed": seed})
        return self.model_copy(
            update={"paths": paths, "params": params, "stream_seed": seed}
        )

    def single_path(self, index: int) -> "Scenario":
        """Copy of the scenario that keeps only path `index`"""
        params = self.params.model_copy(update={"multipath": False})
        return self.model_copy(
            update={
                "name": f"{self.name}-path{index}",
                "paths": [self.paths[index]],
                "params": params,
            }
        )


class ExperimentSpec(BaseModel):
    """A matrix of simulation runs.

    Attributes:
    ----------
    - scenario (Scenario): base scenario
    - scenario_path (Optional[Path]): file the scenario was read from
    - loss_rates (List[float]): loss rates to sweep
    - repetitions (int): runs per loss rate
    - base_seed (int): seed of repetition 0, later repetitions count up
    - seeds (Optional[List[int]]): explicit seeds, one per repetition
    - output_dir (Path): directory for the CSV files
    - single_path_baseline (bool): also run every path alone
    - workers (int): parallel worker processes, 1 runs inline
    """

    scenario: Scenario
    scenario_path: Optional[Path] = None
    loss_rates: List[float] = Field([0.0], min_length=1)
    repetitions: int = Field(1, ge=1)
    base_seed: int = 0
    seeds: Optional[List[int]] = None
    output_dir: Path = Path("results")
    single_path_baseline: bool = False
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_seeds(self) -> "ExperimentSpec":
        if self.seeds is not None and len(self.seeds) != self.repetitions:
            raise ValueError(
                f"{len(self.seeds)} seeds given for {self.repetitions} repetitions"
            )
        if any(not 0.0 <= rate <= 1.0 for rate in self.loss_rates):
            raise ValueError("loss rates must lie in [0, 1]")
        return self

    def run_seeds(self) -> List[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [self.base_seed + rep for rep in range(self.repetitions)]
