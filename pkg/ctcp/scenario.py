""" Reader for scenario files.

A scenario file is an INI file with one [path.N] section per simulated
path and optional [connection], [limits] and [experiment] sections.
Physical values carry their units and are converted with pint:

    [connection]
    stream_length = 11492499
    max_window = 100

    [experiment]
    loss_rates = 0, 0.01, 0.02
    repetitions = 5

    [path.0]
    delay = 50 ms
    bandwidth = 20 Mbit/s
    queue = 100

Bare numbers are read in SI base units (seconds, bit/s).
"""
import configparser
import logging
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

from pint import UndefinedUnitError, UnitRegistry
from pint.errors import DimensionalityError
from pydantic import ValidationError

from ctcp.exceptions import InvalidParametersException, ScenarioParseException
from ctcp.models.parameters import CtcpParameters
from ctcp.models.scenario import ExperimentSpec, PathConfig, Scenario, SimulationLimits

logger = logging.getLogger("ctcp.scenario")

ureg = UnitRegistry()

PATH_SECTION_PREFIX = "path."

# scenario key -> PathConfig field
PATH_KEYS = {
    "delay": "one_way_delay",
    "bandwidth": "bandwidth",
    "loss": "loss_rate",
    "queue": "queue_capacity",
    "seed": "seed",
    "jitter": "jitter",
    "ack_loss": "ack_loss_rate",
}

SHIPPED_SCENARIOS = ("testbed_single", "testbed_multi")


def parse_quantity(text: str, unit: str) -> float:
    """Convert `text` into a float in `unit`.

    Raises:
    ------
    - ScenarioParseException: if the text is no quantity or has the
        wrong dimension
    """
    try:
        value = ureg(text.strip())
    except (
        UndefinedUnitError,
        SyntaxError,
        AttributeError,
        TypeError,
        ValueError,
    ) as exception:
        raise ScenarioParseException(f"'{text}' is no quantity") from exception

    if not hasattr(value, "units"):
        return float(value)
    if value.dimensionless:
        return float(value.magnitude)
    try:
        return float(value.to(unit).magnitude)
    except DimensionalityError as exception:
        raise ScenarioParseException(
            f"'{text}' cannot be expressed in {unit}"
        ) from exception


def _convert(section: str, key: str, text: str, convert: Callable[[str], Any]) -> Any:
    try:
        return convert(text)
    except ScenarioParseException:
        raise
    except ValueError as exception:
        raise ScenarioParseException(
            f"[{section}] {key} = {text}: {exception}"
        ) from exception


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "yes", "true", "on"):
        return True
    if lowered in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"'{text}' is no boolean")


def _parse_path(name: str, section: configparser.SectionProxy) -> PathConfig:
    values: Dict[str, Any] = {}
    for key, text in section.items():
        field = PATH_KEYS.get(key)
        if field is None:
            raise ScenarioParseException(f"[{name}]: unknown key '{key}'")
        if field in ("one_way_delay", "jitter"):
            values[field] = parse_quantity(text, "s")
        elif field == "bandwidth":
            values[field] = parse_quantity(text, "bit/s")
        elif field in ("queue_capacity", "seed"):
            values[field] = _convert(name, key, text, int)
        else:
            values[field] = _convert(name, key, text, float)

    try:
        return PathConfig(**values)
    except ValidationError as exception:
        raise ScenarioParseException(f"[{name}]: {exception}") from exception


def _parse_connection(section: Optional[configparser.SectionProxy]) -> Dict[str, Any]:
    if section is None:
        return {}
    values: Dict[str, Any] = {}
    for key, text in section.items():
        if key in ("stream_length", "stream_seed"):
            values[key] = _convert("connection", key, text, int)
        elif key in CtcpParameters.model_fields:
            values[key] = text.strip()
        else:
            raise ScenarioParseException(f"[connection]: unknown key '{key}'")
    return values


def _parse_limits(section: Optional[configparser.SectionProxy]) -> SimulationLimits:
    if section is None:
        return SimulationLimits()
    values: Dict[str, Any] = {}
    for key, text in section.items():
        if key in ("tick_interval", "stall_timeout", "throughput_interval"):
            values[key] = parse_quantity(text, "s")
        elif key == "trace_tail":
            values[key] = _convert("limits", key, text, int)
        elif key == "record_trace":
            values[key] = _convert("limits", key, text, _parse_bool)
        else:
            raise ScenarioParseException(f"[limits]: unknown key '{key}'")
    try:
        return SimulationLimits(**values)
    except ValidationError as exception:
        raise ScenarioParseException(f"[limits]: {exception}") from exception


def _parse_experiment(section: Optional[configparser.SectionProxy]) -> Dict[str, Any]:
    if section is None:
        return {}
    values: Dict[str, Any] = {}
    for key, text in section.items():
        if key == "loss_rates":
            values[key] = [
                _convert("experiment", key, item, float)
                for item in text.split(",")
                if item.strip()
            ]
        elif key == "seeds":
            values[key] = [
                _convert("experiment", key, item, int)
                for item in text.split(",")
                if item.strip()
            ]
        elif key in ("repetitions", "base_seed", "workers"):
            values[key] = _convert("experiment", key, text, int)
        elif key == "single_path_baseline":
            values[key] = _convert("experiment", key, text, _parse_bool)
        else:
            raise ScenarioParseException(f"[experiment]: unknown key '{key}'")
    return values


def parse_scenario(text: str, name: str = "scenario") -> ExperimentSpec:
    """
    Parse the text of a scenario file.

    Raises:
    ------
    - ScenarioParseException: on syntax errors, unknown keys, values out
        of range or a scenario without paths
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exception:
        raise ScenarioParseException(str(exception)) from exception

    path_sections = sorted(
        (s for s in parser.sections() if s.startswith(PATH_SECTION_PREFIX)),
        key=lambda s: _convert(s, "section", s[len(PATH_SECTION_PREFIX) :], int),
    )
    if not path_sections:
        raise ScenarioParseException("the scenario defines no [path.N] section")

    known = {"connection", "limits", "experiment"}
    for section in parser.sections():
        if section not in known and not section.startswith(PATH_SECTION_PREFIX):
            raise ScenarioParseException(f"unknown section [{section}]")

    paths = [_parse_path(s, parser[s]) for s in path_sections]
    connection = _parse_connection(
        parser["connection"] if "connection" in parser else None
    )
    limits = _parse_limits(parser["limits"] if "limits" in parser else None)
    experiment = _parse_experiment(
        parser["experiment"] if "experiment" in parser else None
    )

    stream_values = {
        key: connection.pop(key)
        for key in ("stream_length", "stream_seed")
        if key in connection
    }
    try:
        params = CtcpParameters.build(**connection)
        scenario = Scenario(
            name=name, paths=paths, params=params, limits=limits, **stream_values
        )
        return ExperimentSpec(scenario=scenario, **experiment)
    except InvalidParametersException as exception:
        raise ScenarioParseException(f"[connection]: {exception}") from exception
    except ValidationError as exception:
        raise ScenarioParseException(str(exception)) from exception


def load_scenario(path: Union[str, Path]) -> ExperimentSpec:
    """
    Read a scenario file. Names of the shipped scenarios (e.g.
    "testbed_single") are resolved against the package data.
    """
    path = Path(path)
    if not path.exists() and str(path) in SHIPPED_SCENARIOS:
        text = resources.files("ctcp.scenarios").joinpath(f"{path}.scn").read_text()
        return parse_scenario(text, name=str(path))

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exception:
        raise ScenarioParseException(f"cannot read {path}: {exception}") from exception

    logger.info("Loaded scenario %s", path)
    spec = parse_scenario(text, name=path.stem)
    return spec.model_copy(update={"scenario_path": path})


def shipped_scenarios() -> List[str]:
    return list(SHIPPED_SCENARIOS)
