""" Shared helpers of the ctcpcli sub-commands
"""
import argparse
import logging
import os
import traceback
from datetime import datetime
from typing import List

from colorama import just_fix_windows_console
from termcolor import colored

from ctcp.exceptions import CtcpException, InvalidParametersException
from ctcp.models.parameters import CtcpParameters
from ctcp.udp_transport import PathBinding, parse_path_spec

# fix the windows console color issue
just_fix_windows_console()

LINE_LENGTH = 80

LOG_FORMAT = (
    "%(asctime)s.%(msecs)03d %(levelname)s %(module)s - %(funcName)s: %(message)s"
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def configure_logging() -> None:
    """Log to stderr at the level given by CTCP_LOG_LEVEL (default INFO)"""
    level_name = os.environ.get("CTCP_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    logging.getLogger("ctcp").setLevel(level)


def add_parameter_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags that override the protocol parameters"""
    parser.add_argument("--blksize", type=int, default=None, help="packets per block")
    parser.add_argument(
        "--numblks", type=int, default=None, help="blocks held in memory"
    )
    parser.add_argument(
        "--payload-size",
        type=int,
        default=None,
        dest="payload_size",
        help="payload bytes per packet",
    )
    parser.add_argument(
        "--env-file",
        default=None,
        dest="env_file",
        help="file with CTCP_* parameters (default: .ctcp or ctcp.env)",
    )


def make_params(args: argparse.Namespace, **overrides) -> CtcpParameters:
    """
    Build the parameters from the flags, the environment and the
    defaults (in that priority).

    Raises:
    ------
    - InvalidParametersException: if the values are inconsistent
    """
    return CtcpParameters.make_from_env(
        env_path=args.env_file,
        blksize=args.blksize,
        numblks=args.numblks,
        payload_size=args.payload_size,
        **overrides,
    )


def make_bindings(path_specs: List[str]) -> List[PathBinding]:
    """One binding per --path flag, numbered in the given order

    Raises:
    ------
    - InvalidParametersException: if a path spec does not parse
    """
    try:
        return [parse_path_spec(spec, index) for index, spec in enumerate(path_specs)]
    except ValueError as exception:
        raise InvalidParametersException(f"invalid --path: {exception}") from exception


def print_error(exception: CtcpException, title: str = "CTCP Error") -> None:
    """Print the colored error box of a known exception"""
    print()
    print(colored("=" * 3 + f"[{title}]" + "=" * (LINE_LENGTH - 5 - len(title)), "red"))
    print(colored(exception.cli_message_header, "red"))
    print("-" * LINE_LENGTH)
    print(str(exception))
    print(colored(exception.cli_message_body, "yellow"))
    print(colored("=" * LINE_LENGTH, "red"))


def catch_crash(exception: BaseException) -> None:
    """
    Log an unexpected exception to a crash file and tell the user
    where to find it.
    """
    filename = write_crash_log()
    print_crash_message(filename, exception)


def write_crash_log() -> str:
    """
    Write the call stack of the current exception into a file.

    Returns:
    -------
    - str: name of the crash log file
    """
    timestamp = str(datetime.now().isoformat()).replace(":", "-")
    filename = f"ctcp-crash-{timestamp}.log"
    content = f"=== [Internal Error] ===\n\nCALLSTACK:\n{traceback.format_exc()}"

    with open(filename, "w", encoding="utf-8") as crash_log:
        crash_log.write(content)

    return filename


def print_crash_message(filename: str, exception: BaseException) -> None:
    separator_line = "=" * LINE_LENGTH
    crash_message = [
        separator_line,
        "",
        "=== [Internal Error] ===",
        f"An internal error occurred: {type(exception).__name__}",
        "The call stack has been written to:",
        "",
        f"  --> {filename} <-- ",
        "",
        separator_line,
    ]
    print("\n".join(colored(line, "red") for line in crash_message))
