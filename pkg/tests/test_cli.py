import csv
import subprocess
import sys
from pathlib import Path

import pytest

from lrqsim.scenario import ScenarioError, parse_scenario_text

ROOT = Path(__file__).resolve().parents[1]
APP1_TREE = ROOT / "scenarios" / "app1_tree.toml"
BOUNDS_EXAMPLE = ROOT / "scenarios" / "bounds_example.toml"


def cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "lrqsim.cli", *args],
        capture_output=True,
        text=True,
        cwd=ROOT,
        env=env,
    )


MINIMAL = """
[scenario]
id = "mini"
approach = 1

[[nodes]]
id = "n"
capacity = "10"

[[flows]]
id = "f"
path = ["n"]
constraint = "lrq"
rate = "2"
l_min = "1"
l_max = "2"
count = 5
"""


class TestScenarioParsing:
    def test_minimal_scenario(self):
        sid, approach, topo, horizon = parse_scenario_text(MINIMAL)
        assert sid == "mini" and approach == 1 and horizon is None
        assert list(topo.flows) == ["f"] and list(topo.nodes) == ["n"]

    def test_missing_section_reports_location(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("[scenario]\nid = 'x'\napproach = 1\n")

    def test_bad_toml_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("[scenario\n")

    def test_seed_offset_shifts_every_flow(self):
        _, _, a, _ = parse_scenario_text(MINIMAL, seed_offset=0)
        _, _, b, _ = parse_scenario_text(MINIMAL, seed_offset=5)
        assert b.flows["f"].seed == a.flows["f"].seed + 5


class TestRunCommand:
    def test_bundled_scenario_all_pass(self, tmp_path):
        res = cli("run", "--scenario", str(APP1_TREE), "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        verdict = (tmp_path / "verdict.txt").read_text()
        assert "fail" not in verdict and "pass" in verdict
        for name in ("event.log", "measurements.txt", "sources.txt"):
            assert (tmp_path / name).exists()

    def test_output_is_byte_stable(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli("run", "--scenario", str(APP1_TREE), "--out", str(a))
        cli("run", "--scenario", str(APP1_TREE), "--out", str(b))
        for name in ("event.log", "verdict.txt", "measurements.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_infeasible_bound_is_not_a_failure(self, tmp_path):
        text = MINIMAL.replace('capacity = "10"', 'capacity = "3/2"')
        scen = tmp_path / "over.toml"
        scen.write_text(text)
        res = cli("run", "--scenario", str(scen), "--out", str(tmp_path / "o"))
        assert res.returncode == 0
        assert "not_applicable" in (tmp_path / "o" / "verdict.txt").read_text()

    def test_corrupted_config_is_a_usage_error(self, tmp_path):
        scen = tmp_path / "bad.toml"
        scen.write_text("[scenario\n")
        res = cli("run", "--scenario", str(scen), "--out", str(tmp_path / "o"))
        assert res.returncode == 1 and res.stderr


class TestBoundsCommand:
    def test_strict_priority_row(self):
        res = cli("bounds", "--params", str(BOUNDS_EXAMPLE))
        assert res.returncode == 0
        assert "1.6" in res.stdout and "1.725" in res.stdout and "1.75" in res.stdout

    def test_empty_request_list_prints_header_only(self, tmp_path):
        params = tmp_path / "empty.toml"
        params.write_text("")
        res = cli("bounds", "--params", str(params))
        assert res.returncode == 0
        assert res.stdout.strip() == "formula\tkind\tvalue\tcondition"

    def test_unknown_formula_is_a_usage_error(self, tmp_path):
        params = tmp_path / "bad.toml"
        params.write_text('[[bounds]]\nformula = "nope"\n')
        res = cli("bounds", "--params", str(params))
        assert res.returncode == 1

    def test_comparison_table_rows(self, tmp_path):
        params = tmp_path / "cmp.toml"
        params.write_text(
            """
[[bounds]]
formula = "compare"
sigma = "2"
ingress_agg_count = 1
ingress_flow_count = 1
ingress_rate = "2"
nodes = [
  { rate = "10", flows = 4, aggs = 2, links = 2 },
  { rate = "10", flows = 4, aggs = 2, links = 2 },
]
"""
        )
        res = cli("bounds", "--params", str(params))
        assert res.returncode == 0
        for app in ("app1", "app2", "app3"):
            assert f"compare:{app}:total" in res.stdout


class TestSweepCommand:
    def test_single_seed_matches_run(self, tmp_path):
        cli("run", "--scenario", str(APP1_TREE), "--out", str(tmp_path / "r"))
        res = cli(
            "sweep", "--scenario", str(APP1_TREE), "--seeds", "0",
            "--out", str(tmp_path / "s"),
        )
        assert res.returncode == 0
        # seed offset 0 reproduces the plain run's verdict values
        with open(tmp_path / "s" / "sweep.csv") as fh:
            rows = list(csv.DictReader(fh))
        verdict = (tmp_path / "r" / "verdict.txt").read_text()
        for row in rows:
            assert row["status"] == "pass"
            assert row["bound"] in verdict

    def test_rows_ordered_by_draw(self, tmp_path):
        res = cli(
            "sweep", "--scenario", str(APP1_TREE), "--seeds", "3",
            "--out", str(tmp_path),
        )
        assert res.returncode == 0
        with open(tmp_path / "sweep.csv") as fh:
            seeds = [int(r["seed"]) for r in csv.DictReader(fh)]
        assert seeds == sorted(seeds)
        assert "violations: none" in (tmp_path / "summary.txt").read_text()

    def test_worker_count_does_not_change_output(self, tmp_path):
        import os

        env = dict(os.environ, LRQSIM_WORKERS="4")
        a = tmp_path / "a"
        b = tmp_path / "b"
        cli("sweep", "--scenario", str(APP1_TREE), "--seeds", "4", "--out", str(a))
        cli(
            "sweep", "--scenario", str(APP1_TREE), "--seeds", "4",
            "--out", str(b), env=env,
        )
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
