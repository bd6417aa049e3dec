""" Utilities to simplify the tests
"""
import os
import unittest
from pathlib import Path
from typing import List

from ctcp.models.parameters import CtcpParameters
from ctcp.models.scenario import PathConfig, SimulationLimits

AsyncTestCase = unittest.IsolatedAsyncioTestCase

CWD = Path(os.path.dirname(__file__))


def get_wire_vectors() -> List[str]:
    """Return the non-comment lines of the golden wire vector file

    Returns:
    -------
    - List[str]: lines of the form "<name> <hex image>"
    """
    path = CWD / "assets" / "wire_vectors.hex"
    with open(path, "r", encoding="utf-8") as file_handle:
        return [
            line.strip()
            for line in file_handle
            if line.strip() and not line.startswith("#")
        ]


def small_params(**overrides) -> CtcpParameters:
    """Parameters with small blocks so that tests stay fast"""
    values = {"blksize": 8, "numblks": 4, "payload_size": 64}
    values.update(overrides)
    return CtcpParameters(**values)


def fast_path(
    loss_rate: float = 0.0,
    seed: int = 1,
    delay: float = 0.01,
    bandwidth: float = 10e6,
    **overrides,
) -> PathConfig:
    """A short, fast simulated path"""
    return PathConfig(
        one_way_delay=delay,
        bandwidth=bandwidth,
        loss_rate=loss_rate,
        seed=seed,
        **overrides,
    )


def quick_limits(stall_timeout: float = 5.0, **overrides) -> SimulationLimits:
    return SimulationLimits(stall_timeout=stall_timeout, **overrides)


def acceptance_enabled() -> bool:
    """The full-size transfers only run with CTCP_ACCEPTANCE=1"""
    return os.environ.get("CTCP_ACCEPTANCE", "") not in ("", "0")
