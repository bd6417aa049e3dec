""" ctcpcli simulate: one simulated transfer
"""
import argparse
import logging

from ctcp.exceptions import InvalidParametersException
from ctcp.netsim import run_scenario, write_throughput_csv
from ctcp.scenario import load_scenario
from ctcp.trace import TraceRecorder

logger = logging.getLogger("ctcp.cli")


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "scenario", help="scenario file, or testbed_single / testbed_multi"
    )
    parser.add_argument(
        "--loss-rate",
        type=float,
        default=None,
        dest="loss_rate",
        help="loss rate of every path (default: as in the scenario file)",
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--stream-length",
        type=int,
        default=None,
        dest="stream_length",
        help="bytes to transfer (default: as in the scenario file)",
    )
    parser.add_argument(
        "--trace-out", default=None, dest="trace_out", help="write the event trace"
    )
    parser.add_argument(
        "--throughput-out",
        default=None,
        dest="throughput_out",
        help="write the per-100 ms goodput as CSV",
    )
    parser.add_argument(
        "--report-out",
        default=None,
        dest="report_out",
        help="write the full report as JSON",
    )


async def main(args: argparse.Namespace) -> None:
    """
    Simulate one transfer and print its summary.

    Raises:
    ------
    - ScenarioParseException: if the scenario file cannot be read
    - InvalidParametersException: if the loss rate lies outside [0, 1]
    - StallException: if the transfer stalls
    """
    if args.loss_rate is not None and not 0.0 <= args.loss_rate <= 1.0:
        raise InvalidParametersException(
            f"--loss-rate {args.loss_rate} lies outside [0, 1]"
        )
    scenario = load_scenario(args.scenario).scenario
    if args.stream_length is not None:
        scenario = scenario.model_copy(update={"stream_length": args.stream_length})
    trace = TraceRecorder() if args.trace_out else None

    report = run_scenario(
        scenario, loss_rate=args.loss_rate, seed=args.seed, trace=trace
    )

    print(
        f"{report.scenario}: {report.stream_length} bytes in "
        f"{report.duration:.3f}s ({report.goodput_mbps:.2f} Mbit/s), "
        f"verified={report.verified}"
    )
    for path in report.paths:
        print(
            f"  path {path.path_id}: sent {path.packets_sent}, "
            f"lost {path.random_losses}, queue drops {path.queue_drops}, "
            f"dependent {path.dependent}, timeouts {path.timeouts}, "
            f"{path.goodput_mbps:.2f} Mbit/s"
        )

    if trace is not None:
        trace.write(args.trace_out)
    if args.throughput_out:
        write_throughput_csv(report, args.throughput_out)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as file_handle:
            file_handle.write(report.model_dump_json(indent=2))
