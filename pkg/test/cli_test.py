import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path

from ctcp.cli import utils
from ctcp.cli.ctcpcli import make_parser, run

SCENARIO = """
[connection]
stream_length = 20000
blksize = 8
numblks = 4
payload_size = 64

[limits]
stall_timeout = 2 s

[experiment]
loss_rates = 0, 0.05

[path.0]
delay = 10 ms
bandwidth = 10 Mbit/s
seed = 1
"""


def _run_quietly(argv) -> int:
    args = make_parser().parse_args(argv)
    with contextlib.redirect_stdout(io.StringIO()):
        return run(args)


class TestParser(unittest.TestCase):
    """Test case for the command line parser"""

    def test_send(self) -> None:
        args = make_parser().parse_args(
            ["send", "--path", ":9599", "--path", "10.0.0.2:9599", "--file", "x"]
        )
        self.assertEqual(args.command, "send")
        self.assertEqual(args.paths, [":9599", "10.0.0.2:9599"])
        self.assertIsNone(args.blksize)

    def test_recv_bindings(self) -> None:
        args = make_parser().parse_args(
            ["recv", "--path", "0.0.0.0:0=10.0.0.1:9599", "--file", "out"]
        )
        bindings = utils.make_bindings(args.paths)
        self.assertEqual(bindings[0].remote_address, ("10.0.0.1", 9599))

    def test_missing_arguments(self) -> None:
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as context:
                make_parser().parse_args(["send", "--path", ":9599"])
            self.assertEqual(context.exception.code, 2)
            with self.assertRaises(SystemExit):
                make_parser().parse_args([])


class TestCommands(unittest.TestCase):
    """Test case for the simulation sub-commands

    User Story: As a researcher I want to run simulations from the
    shell, so that I can script parameter studies.
    """

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.scenario = self.root / "lab.scn"
        self.scenario.write_text(SCENARIO, encoding="utf-8")

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_simulate(self) -> None:
        report_file = self.root / "report.json"
        throughput_file = self.root / "throughput.csv"
        exit_code = _run_quietly(
            [
                "simulate",
                str(self.scenario),
                "--loss-rate",
                "0.02",
                "--seed",
                "3",
                "--report-out",
                str(report_file),
                "--throughput-out",
                str(throughput_file),
            ]
        )
        self.assertEqual(exit_code, utils.EXIT_OK)
        report = json.loads(report_file.read_text(encoding="utf-8"))
        self.assertTrue(report["verified"])
        self.assertEqual(report["seed"], 3)
        self.assertEqual(report["scenario"], "lab")
        self.assertTrue(throughput_file.exists())

    def test_experiment(self) -> None:
        output_dir = self.root / "results"
        exit_code = _run_quietly(
            [
                "experiment",
                str(self.scenario),
                "--output-dir",
                str(output_dir),
                "--repetitions",
                "2",
            ]
        )
        self.assertEqual(exit_code, utils.EXIT_OK)
        lines = (output_dir / "results.csv").read_text().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith("0,2,2,"))

    def test_usage_errors(self) -> None:
        broken = self.root / "broken.scn"
        broken.write_text("[path.0]\ndelay = xyzzy\nbandwidth = 1\n", encoding="utf-8")
        self.assertEqual(_run_quietly(["simulate", str(broken)]), utils.EXIT_USAGE)
        self.assertEqual(
            _run_quietly(["simulate", str(self.root / "missing.scn")]),
            utils.EXIT_USAGE,
        )
        self.assertEqual(
            _run_quietly(["simulate", str(self.scenario), "--loss-rate", "2"]),
            utils.EXIT_USAGE,
        )
        self.assertEqual(
            _run_quietly(
                ["experiment", str(self.scenario), "--loss-rates", "0,lots"]
            ),
            utils.EXIT_USAGE,
        )

    def test_stall_is_a_failure(self) -> None:
        exit_code = _run_quietly(
            ["simulate", str(self.scenario), "--loss-rate", "1"]
        )
        self.assertEqual(exit_code, utils.EXIT_FAILURE)
