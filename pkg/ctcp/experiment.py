""" Batches of simulated transfers.

An experiment runs a scenario for every loss rate and every seed,
optionally also with each path alone, and condenses the runs into one
ExperimentRow per loss rate. The results table and the per-run
throughput series are written as CSV (see docs/results.md).
"""
import concurrent.futures
import csv
import logging
from pathlib import Path
from statistics import fmean
from typing import Dict, List, Optional, Tuple, Union

from ctcp.exceptions import StallException
from ctcp.models.report import ExperimentRow, TransferReport
from ctcp.models.scenario import ExperimentSpec, Scenario
from ctcp.netsim import run_scenario, write_throughput_csv

logger = logging.getLogger("ctcp.experiment")

RESULTS_FILE = "results.csv"

# (loss_rate, seed, single path index or None)
_Job = Tuple[float, int, Optional[int]]


def _run_job(scenario: Scenario, job: _Job) -> Optional[TransferReport]:
    loss_rate, seed, single = job
    if single is not None:
        scenario = scenario.single_path(single)
    try:
        return run_scenario(scenario, loss_rate=loss_rate, seed=seed)
    except StallException as exception:
        logger.warning(
            "Run at loss rate %.3f, seed %d stalled: %s", loss_rate, seed, exception
        )
        return None


def _jobs(spec: ExperimentSpec) -> List[_Job]:
    seeds = spec.run_seeds()
    jobs: List[_Job] = [
        (loss_rate, seed, None) for loss_rate in spec.loss_rates for seed in seeds
    ]
    if spec.single_path_baseline and len(spec.scenario.paths) > 1:
        jobs.extend(
            (loss_rate, seed, index)
            for loss_rate in spec.loss_rates
            for seed in seeds
            for index in range(len(spec.scenario.paths))
        )
    return jobs


def run_runs(spec: ExperimentSpec) -> Dict[_Job, Optional[TransferReport]]:
    """
    Execute every run of the experiment.

    Runs are independent simulations; with workers > 1 they are spread
    over worker processes. The outcome does not depend on the number of
    workers.

    Returns:
    -------
    - Dict[_Job, Optional[TransferReport]]: report per (loss rate, seed,
        single path index), None for stalled runs
    """
    jobs = _jobs(spec)
    logger.info("Running %d simulations of %s", len(jobs), spec.scenario.name)

    if spec.workers == 1:
        return {job: _run_job(spec.scenario, job) for job in jobs}

    with concurrent.futures.ProcessPoolExecutor(max_workers=spec.workers) as pool:
        futures = {job: pool.submit(_run_job, spec.scenario, job) for job in jobs}
        return {job: future.result() for job, future in futures.items()}


def summarize(
    spec: ExperimentSpec, runs: Dict[_Job, Optional[TransferReport]]
) -> List[ExperimentRow]:
    """Condense the runs into one row per loss rate"""
    num_paths = len(spec.scenario.paths)
    seeds = spec.run_seeds()
    rows = []
    for loss_rate in spec.loss_rates:
        reports = [runs[(loss_rate, seed, None)] for seed in seeds]
        completed = [r for r in reports if r is not None]
        if completed:
            mean_duration = fmean(r.duration for r in completed)
            mean_mbps = fmean(r.goodput_mbps for r in completed)
            path_mbps = [
                fmean(r.paths[i].goodput_mbps for r in completed)
                for i in range(num_paths)
            ]
        else:
            mean_duration = mean_mbps = float("nan")
            path_mbps = [float("nan")] * num_paths

        single_path_mbps: List[float] = []
        if spec.single_path_baseline and num_paths > 1:
            for index in range(num_paths):
                singles = [
                    runs[(loss_rate, seed, index)]
                    for seed in seeds
                    if runs[(loss_rate, seed, index)] is not None
                ]
                single_path_mbps.append(
                    fmean(r.goodput_mbps for r in singles) if singles else float("nan")
                )

        rows.append(
            ExperimentRow(
                loss_rate=loss_rate,
                repetitions=len(seeds),
                completed=len(completed),
                mean_duration=mean_duration,
                mean_mbps=mean_mbps,
                path_mbps=path_mbps,
                single_path_mbps=single_path_mbps,
            )
        )
    return rows


def results_header(num_paths: int, baseline: bool) -> List[str]:
    header = ["loss_rate", "repetitions", "completed", "mean_duration_s"]
    header.extend(f"path{i}_mbps" for i in range(num_paths))
    header.append("combined_mbps")
    if baseline:
        header.extend(f"single_path{i}_mbps" for i in range(num_paths))
    return header


def write_results_csv(
    rows: List[ExperimentRow], path: Union[str, Path], num_paths: int
) -> None:
    """Write the results table; one row per loss rate"""
    baseline = any(row.single_path_mbps for row in rows)
    with open(path, "w", newline="", encoding="utf-8") as file_handle:
        writer = csv.writer(file_handle)
        writer.writerow(results_header(num_paths, baseline))
        for row in rows:
            line = [
                f"{row.loss_rate:g}",
                row.repetitions,
                row.completed,
                f"{row.mean_duration:.4f}",
            ]
            line.extend(f"{mbps:.4f}" for mbps in row.path_mbps)
            line.append(f"{row.mean_mbps:.4f}")
            if baseline:
                line.extend(f"{mbps:.4f}" for mbps in row.single_path_mbps)
            writer.writerow(line)


def throughput_file_name(loss_rate: float, seed: int) -> str:
    return f"throughput_p{loss_rate:g}_seed{seed}.csv"


def run_experiment(spec: ExperimentSpec, write: bool = True) -> List[ExperimentRow]:
    """
    Run the experiment and, if `write` is set, store results.csv and
    one throughput CSV per multipath run in spec.output_dir.
    """
    runs = run_runs(spec)
    rows = summarize(spec, runs)

    if write:
        output_dir = Path(spec.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        write_results_csv(rows, output_dir / RESULTS_FILE, len(spec.scenario.paths))
        for (loss_rate, seed, single), report in runs.items():
            if single is None and report is not None:
                write_throughput_csv(
                    report, output_dir / throughput_file_name(loss_rate, seed)
                )
        logger.info("Results written to %s", output_dir)
    return rows
