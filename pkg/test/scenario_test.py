import tempfile
import unittest
from pathlib import Path

from ctcp.exceptions import ScenarioParseException
from ctcp.scenario import (
    load_scenario,
    parse_quantity,
    parse_scenario,
    shipped_scenarios,
)

SCENARIO = """
[connection]
stream_length = 40000
blksize = 16
multipath = yes
max_window = 50

[limits]
tick_interval = 5 ms
stall_timeout = 10 s

[experiment]
loss_rates = 0, 0.01, 0.05
repetitions = 2
base_seed = 10
single_path_baseline = yes

[path.1]
delay = 0.03
bandwidth = 4000000

[path.0]
delay = 50 ms
bandwidth = 20 Mbit/s
loss = 0.02
queue = 80
seed = 3
jitter = 1 ms
ack_loss = 0.01
"""


class TestQuantities(unittest.TestCase):
    """Test case for unit conversion"""

    def test_units(self) -> None:
        self.assertAlmostEqual(parse_quantity("50 ms", "s"), 0.05)
        self.assertAlmostEqual(parse_quantity("20 Mbit/s", "bit/s"), 20e6)
        self.assertAlmostEqual(parse_quantity("500 kbit/s", "bit/s"), 500e3)

    def test_bare_numbers_are_si(self) -> None:
        self.assertEqual(parse_quantity("0.05", "s"), 0.05)
        self.assertEqual(parse_quantity("8000000", "bit/s"), 8e6)

    def test_wrong_dimension(self) -> None:
        with self.assertRaises(ScenarioParseException):
            parse_quantity("20 Mbit/s", "s")

    def test_no_quantity(self) -> None:
        with self.assertRaises(ScenarioParseException):
            parse_quantity("xyzzy", "s")


class TestScenarioFile(unittest.TestCase):
    """Test case for reading scenario files

    User Story: As a researcher I want to describe a testbed in a small
    text file, so that I can share and rerun experiments.
    """

    def test_full_scenario(self) -> None:
        spec = parse_scenario(SCENARIO, name="full")
        scenario = spec.scenario
        self.assertEqual(scenario.name, "full")
        self.assertEqual(scenario.stream_length, 40000)
        self.assertEqual(scenario.params.blksize, 16)
        self.assertTrue(scenario.params.multipath)
        self.assertEqual(scenario.params.max_window, 50)
        self.assertAlmostEqual(scenario.limits.tick_interval, 0.005)
        self.assertEqual(scenario.limits.stall_timeout, 10.0)

        first, second = scenario.paths
        self.assertAlmostEqual(first.one_way_delay, 0.05)
        self.assertAlmostEqual(first.bandwidth, 20e6)
        self.assertEqual(first.loss_rate, 0.02)
        self.assertEqual(first.queue_capacity, 80)
        self.assertEqual(first.seed, 3)
        self.assertAlmostEqual(first.jitter, 0.001)
        self.assertEqual(first.ack_loss_rate, 0.01)
        self.assertEqual(second.one_way_delay, 0.03)
        self.assertEqual(second.bandwidth, 4e6)

        self.assertEqual(spec.loss_rates, [0.0, 0.01, 0.05])
        self.assertEqual(spec.repetitions, 2)
        self.assertEqual(spec.run_seeds(), [10, 11])
        self.assertTrue(spec.single_path_baseline)

    def test_minimal_scenario(self) -> None:
        spec = parse_scenario("[path.0]\ndelay = 10 ms\nbandwidth = 1 Mbit/s\n")
        self.assertEqual(len(spec.scenario.paths), 1)
        self.assertEqual(spec.loss_rates, [0.0])
        self.assertEqual(spec.scenario.paths[0].queue_capacity, 100)

    def test_errors(self) -> None:
        path = "[path.0]\ndelay = 10 ms\nbandwidth = 1 Mbit/s\n"
        broken = {
            "no path": "[connection]\nstream_length = 10\n",
            "unknown section": path + "[other]\nx = 1\n",
            "unknown path key": path + "colour = blue\n",
            "unknown connection key": path + "[connection]\nspeed = 1\n",
            "bad loss": path + "loss = 2\n",
            "bad delay unit": "[path.0]\ndelay = 1 Mbit/s\nbandwidth = 1\n",
            "bad parameter": path + "[connection]\nblksize = 0\n",
            "bad path index": "[path.x]\ndelay = 1\nbandwidth = 1\n",
            "seed count": path + "[experiment]\nrepetitions = 3\nseeds = 1, 2\n",
            "syntax": "delay = 1\n",
        }
        for name, text in broken.items():
            with self.assertRaises(ScenarioParseException, msg=name):
                parse_scenario(text)

    def test_load_from_file(self) -> None:
        with tempfile.TemporaryDirectory() as directory:
            target = Path(directory) / "lab.scn"
            target.write_text(SCENARIO, encoding="utf-8")
            spec = load_scenario(target)
        self.assertEqual(spec.scenario.name, "lab")
        self.assertEqual(spec.scenario_path, target)

    def test_missing_file(self) -> None:
        with self.assertRaises(ScenarioParseException):
            load_scenario("does-not-exist.scn")

    def test_shipped_scenarios(self) -> None:
        self.assertEqual(shipped_scenarios(), ["testbed_single", "testbed_multi"])

        single = load_scenario("testbed_single")
        self.assertEqual(len(single.scenario.paths), 1)
        self.assertAlmostEqual(single.scenario.paths[0].one_way_delay, 0.05)
        self.assertAlmostEqual(single.scenario.paths[0].bandwidth, 20e6)
        self.assertEqual(single.scenario.stream_length, 11_492_499)
        self.assertEqual(single.loss_rates, [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
        self.assertEqual(single.repetitions, 5)

        multi = load_scenario("testbed_multi")
        self.assertEqual(len(multi.scenario.paths), 2)
        self.assertTrue(multi.scenario.params.multipath)
        self.assertEqual(multi.scenario.params.max_window, 100)
        for path in multi.scenario.paths:
            self.assertAlmostEqual(path.bandwidth, 8e6)
            self.assertEqual(path.queue_capacity, 100)
        self.assertTrue(multi.single_path_baseline)


class TestScenarioVariants(unittest.TestCase):
    """Test case for deriving runs from a scenario"""

    def test_with_seed(self) -> None:
        scenario = parse_scenario(SCENARIO).scenario
        seeded = scenario.with_seed(4)
        self.assertEqual([p.seed for p in seeded.paths], [4003, 4001])
        self.assertEqual(seeded.params.seed, 4)
        self.assertEqual(seeded.stream_seed, 4)
        self.assertEqual([p.seed for p in scenario.paths], [3, 0])

    def test_with_loss_rate(self) -> None:
        scenario = parse_scenario(SCENARIO).scenario.with_loss_rate(0.3)
        self.assertEqual({p.loss_rate for p in scenario.paths}, {0.3})

    def test_single_path(self) -> None:
        scenario = parse_scenario(SCENARIO, name="full").scenario
        single = scenario.single_path(1)
        self.assertEqual(single.name, "full-path1")
        self.assertEqual(len(single.paths), 1)
        self.assertEqual(single.paths[0].one_way_delay, 0.03)
        self.assertFalse(single.params.multipath)
