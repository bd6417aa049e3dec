""" Command Line Interface for CTCP
"""

import argparse
import asyncio
import logging
import sys
from typing import List, Optional

import ctcp.cli.experiment
import ctcp.cli.simulate
import ctcp.cli.transfer
from ctcp.cli import utils
from ctcp.exceptions import (
    CtcpException,
    InvalidParametersException,
    ScenarioParseException,
)

logger = logging.getLogger("ctcp.cli")


def main(argv: Optional[List[str]] = None) -> None:
    parser = make_parser()
    args = parser.parse_args(argv)
    utils.configure_logging()
    sys.exit(run(args))


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctcpcli")
    subparsers = parser.add_subparsers(
        dest="command",
        help="Command. Currently supported: send, recv, experiment, simulate",
    )
    subparsers.required = True

    send_parser = subparsers.add_parser("send", help="Send a file over UDP")
    ctcp.cli.transfer.add_arguments(send_parser, "sender")

    recv_parser = subparsers.add_parser("recv", help="Receive a file over UDP")
    ctcp.cli.transfer.add_arguments(recv_parser, "receiver")

    experiment_parser = subparsers.add_parser(
        "experiment", help="Run a simulated experiment and write CSV results"
    )
    ctcp.cli.experiment.add_arguments(experiment_parser)

    simulate_parser = subparsers.add_parser(
        "simulate", help="Simulate a single transfer"
    )
    ctcp.cli.simulate.add_arguments(simulate_parser)

    return parser


def run(args: argparse.Namespace) -> int:
    """
    Dispatch the parsed arguments to their sub-command.

    Returns:
    -------
    - int: process exit code
    """
    commands = {
        "send": ctcp.cli.transfer.main_send,
        "recv": ctcp.cli.transfer.main_recv,
        "experiment": ctcp.cli.experiment.main,
        "simulate": ctcp.cli.simulate.main,
    }
    try:
        asyncio.run(commands[args.command](args))

    except (ScenarioParseException, InvalidParametersException) as exception:
        utils.print_error(exception, "Usage Error")
        return utils.EXIT_USAGE

    except CtcpException as exception:
        utils.print_error(exception)
        return utils.EXIT_FAILURE

    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return utils.EXIT_FAILURE

    except Exception as exception:
        utils.catch_crash(exception)
        return utils.EXIT_FAILURE

    return utils.EXIT_OK


if __name__ == "__main__":
    main()
