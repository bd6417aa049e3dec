""" ctcpcli send / recv: file transfer over UDP
"""
import argparse
import logging
from pathlib import Path

from ctcp.cli import utils
from ctcp.exceptions import InvalidParametersException
from ctcp.models.report import ConnectionReport
from ctcp.trace import TraceRecorder
from ctcp.udp_transport import open_connection

logger = logging.getLogger("ctcp.cli")


def add_arguments(parser: argparse.ArgumentParser, role: str) -> None:
    if role == "sender":
        path_help = "local address LOCAL of one path, e.g. 0.0.0.0:9599 (repeatable)"
        file_help = "file to send"
    else:
        path_help = (
            "LOCAL=REMOTE addresses of one path, e.g. 0.0.0.0:0=10.0.0.1:9599 "
            "(repeatable)"
        )
        file_help = "file to write the received stream to"

    parser.add_argument(
        "--path", action="append", required=True, dest="paths", help=path_help
    )
    parser.add_argument("--file", required=True, help=file_help)
    parser.add_argument(
        "--trace-out", default=None, dest="trace_out", help="write the event trace"
    )
    parser.add_argument(
        "--timeout",
        type=float,
        default=60.0,
        help="seconds to wait for the peer before giving up",
    )
    utils.add_parameter_arguments(parser)


def _print_report(report: ConnectionReport) -> None:
    print(
        f"{report.role}: {report.stream_length} bytes in {report.duration:.3f}s "
        f"({report.goodput_mbps:.2f} Mbit/s)"
    )
    for path_id, count in enumerate(report.packets_per_path):
        print(f"  path {path_id}: {count} data packets")


async def main_send(args: argparse.Namespace) -> None:
    """
    Send a file.

    Raises:
    ------
    - CtcpException: if the transfer fails
    """
    bindings = utils.make_bindings(args.paths)
    params = utils.make_params(args, multipath=len(bindings) > 1 or None)
    data = Path(args.file).read_bytes()
    trace = TraceRecorder() if args.trace_out else None

    logger.info("Waiting for the receiver on %d path(s)", len(bindings))
    connection = await open_connection(
        "sender",
        bindings,
        params,
        stream_length=len(data),
        trace=trace,
        accept_timeout=args.timeout,
        idle_timeout=args.timeout,
    )
    async with connection:
        report = await connection.send_stream(data)

    _print_report(report)
    if trace is not None:
        trace.write(args.trace_out)


async def main_recv(args: argparse.Namespace) -> None:
    """
    Receive a file.

    Raises:
    ------
    - CtcpException: if the transfer fails
    """
    bindings = utils.make_bindings(args.paths)
    if any(binding.remote_address is None for binding in bindings):
        raise InvalidParametersException("recv needs LOCAL=REMOTE for every --path")
    params = utils.make_params(args)
    trace = TraceRecorder() if args.trace_out else None

    connection = await open_connection(
        "receiver", bindings, params, trace=trace, idle_timeout=args.timeout
    )
    async with connection:
        data, report = await connection.receive_stream()

    Path(args.file).write_bytes(data)
    _print_report(report)
    if trace is not None:
        trace.write(args.trace_out)
