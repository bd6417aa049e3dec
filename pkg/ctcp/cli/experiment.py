""" ctcpcli experiment: run a scenario matrix and write CSV results
"""
import argparse
import logging
import math
from pathlib import Path
from typing import Any, Dict

from pydantic import ValidationError

from ctcp.exceptions import InvalidParametersException
from ctcp.experiment import RESULTS_FILE, run_experiment
from ctcp.scenario import load_scenario

logger = logging.getLogger("ctcp.cli")


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "scenario", help="scenario file, or testbed_single / testbed_multi"
    )
    parser.add_argument(
        "--output-dir", default="results", dest="output_dir", help="CSV directory"
    )
    parser.add_argument("--repetitions", type=int, default=None)
    parser.add_argument(
        "--seed", type=int, default=None, dest="base_seed", help="seed of run 0"
    )
    parser.add_argument(
        "--loss-rates",
        default=None,
        dest="loss_rates",
        help="comma separated loss rates, e.g. 0,0.01,0.05",
    )
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument(
        "--single-path-baseline",
        action="store_true",
        dest="single_path_baseline",
        help="also run every path alone",
    )


async def main(args: argparse.Namespace) -> None:
    """
    Run the experiment described by the scenario file.

    Raises:
    ------
    - ScenarioParseException: if the scenario file cannot be read
    - InvalidParametersException: if a flag value is out of range
    """
    spec = load_scenario(args.scenario)

    updates: Dict[str, Any] = {"output_dir": Path(args.output_dir)}
    if args.repetitions is not None:
        updates["repetitions"] = args.repetitions
        updates["seeds"] = None
    if args.base_seed is not None:
        updates["base_seed"] = args.base_seed
    if args.loss_rates is not None:
        try:
            updates["loss_rates"] = [
                float(r) for r in args.loss_rates.split(",") if r.strip()
            ]
        except ValueError as exception:
            raise InvalidParametersException(
                f"invalid --loss-rates: {exception}"
            ) from exception
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.single_path_baseline:
        updates["single_path_baseline"] = True
    try:
        spec = spec.model_validate({**spec.model_dump(), **updates})
    except ValidationError as exception:
        raise InvalidParametersException(str(exception)) from exception

    rows = run_experiment(spec)

    print(f"{'loss':>6} {'runs':>5} {'duration [s]':>13} {'goodput [Mbit/s]':>17}")
    for row in rows:
        duration = "-" if math.isnan(row.mean_duration) else f"{row.mean_duration:.3f}"
        goodput = "-" if math.isnan(row.mean_mbps) else f"{row.mean_mbps:.2f}"
        runs = f"{row.completed}/{row.repetitions}"
        print(f"{row.loss_rate:>6g} {runs:>5} {duration:>13} {goodput:>17}")
    print(f"Results written to {Path(args.output_dir) / RESULTS_FILE}")
