"""Command line behavior: exit codes, files written, output determinism."""

from __future__ import annotations

import csv
import json
import pathlib
import subprocess
import sys

import pytest

from taxgrid.cli import main

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"
TWO_UNIT = str(DATA / "two_unit.json")


def read_summary(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["metric", "value"]
    return {metric: float(value) for metric, value in rows[1:]}


class TestSolveCommand:
    def test_writes_outputs_and_manifest(self, tmp_path):
        rc = main(["solve", TWO_UNIT, "--tax", "30", "--gap", "0",
                   "--out", str(tmp_path)])
        assert rc == 0
        for name in ("summary.csv", "dispatch.csv", "prices.csv",
                     "manifest.json"):
            assert (tmp_path / name).exists(), name
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "solve"
        assert manifest["inputs"] == [TWO_UNIT]
        assert manifest["config"]["tax"] == 30.0
        assert manifest["outputs"] == ["dispatch.csv", "prices.csv",
                                       "summary.csv"]
        assert manifest["wall_time_s"] >= 0.0
        assert manifest["tool_version"]

    def test_summary_values(self, tmp_path):
        main(["solve", TWO_UNIT, "--tax", "30", "--gap", "0",
              "--out", str(tmp_path)])
        summary = read_summary(tmp_path / "summary.csv")
        assert summary["tax"] == 30.0
        assert summary["expected_cost"] == pytest.approx(7560.0)
        assert summary["expected_emissions"] == pytest.approx(91.0)

    def test_prints_summary_table(self, tmp_path, capsys):
        main(["solve", TWO_UNIT, "--tax", "30", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert "tax=30" in out
        assert "expected_emissions" in out

    def test_runs_are_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            main(["solve", TWO_UNIT, "--tax", "12.5", "--gap", "0",
                  "--out", str(tmp_path / sub)])
        for name in ("summary.csv", "dispatch.csv", "prices.csv"):
            first = (tmp_path / "a" / name).read_bytes()
            second = (tmp_path / "b" / name).read_bytes()
            assert first == second, name
            assert b"\r" not in first

    def test_scenario_flag(self, tmp_path):
        scn = tmp_path / "scn.json"
        scn.write_text(json.dumps(
            {"transforms": [{"kind": "load_scale", "factor": 0.5}]}))
        rc = main(["solve", TWO_UNIT, "--scenario", str(scn),
                   "--out", str(tmp_path)])
        assert rc == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert str(scn) in manifest["inputs"]
        assert manifest["scenario"]["transforms"][0]["factor"] == 0.5
        base = read_summary(tmp_path / "summary.csv")
        assert base["expected_emissions"] < 300.0


class TestFindTaxCommand:
    def test_converged_run(self, tmp_path, capsys):
        rc = main(["find-tax", TWO_UNIT, "--target-tons", "150",
                   "--gap", "0", "--out", str(tmp_path)])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "optimal tax: 18.95"
        with open(tmp_path / "search.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 16
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["notes"]["bisection_count"] == 14
        assert manifest["notes"]["converged"] is True
        summary = read_summary(tmp_path / "summary.csv")
        assert summary["expected_emissions"] <= 150.0 + 1e-9

    def test_target_already_met_at_zero(self, tmp_path, capsys):
        rc = main(["find-tax", TWO_UNIT, "--target-tons", "350",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "optimal tax: 0.00"

    def test_reduction_target(self, tmp_path):
        rc = main(["find-tax", TWO_UNIT, "--target-reduction", "50",
                   "--gap", "0", "--out", str(tmp_path)])
        assert rc == 0
        notes = json.loads((tmp_path / "manifest.json").read_text())["notes"]
        assert notes["baseline_emissions"] == pytest.approx(300.0)
        assert notes["target_tons"] == pytest.approx(150.0)

    def test_unmet_target_exits_5(self, tmp_path, capsys):
        rc = main(["find-tax", TWO_UNIT, "--target-tons", "50",
                   "--out", str(tmp_path)])
        assert rc == 5
        assert "not met" in capsys.readouterr().err
        # the trail is still written, the solution files are not
        assert (tmp_path / "search.csv").exists()
        assert (tmp_path / "manifest.json").exists()
        assert not (tmp_path / "summary.csv").exists()

    def test_targets_are_mutually_exclusive(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["find-tax", TWO_UNIT, "--target-tons", "150",
                  "--target-reduction", "10", "--out", str(tmp_path)])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["find-tax", TWO_UNIT, "--out", str(tmp_path)])
        assert exc.value.code == 2


class TestParetoCommand:
    def test_single_tax_point_matches_solve(self, tmp_path):
        main(["solve", TWO_UNIT, "--tax", "0", "--gap", "0",
              "--out", str(tmp_path / "solve")])
        rc = main(["pareto", TWO_UNIT, "--mode", "tax", "--points", "1",
                   "--tax", "0", "--gap", "0", "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "pareto.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 2
        kind, parameter, cost, emissions = rows[1][:4]
        summary = read_summary(tmp_path / "solve" / "summary.csv")
        assert kind == "tax"
        assert float(parameter) == 0.0
        assert float(cost) == pytest.approx(summary["expected_cost"])
        assert float(emissions) == pytest.approx(
            summary["expected_emissions"])

    def test_cap_mode_default_points(self, tmp_path):
        rc = main(["pareto", TWO_UNIT, "--mode", "cap", "--gap", "0",
                   "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "pareto.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 11
        costs = [float(r[2]) for r in rows[1:]]
        assert costs == sorted(costs, reverse=True)


class TestClusterCommand:
    def test_year_to_days_json(self, tmp_path, capsys):
        rc = main(["cluster", str(DATA / "year_sample.csv"), "--k", "3",
                   "--out", str(tmp_path)])
        assert rc == 0
        days = json.loads((tmp_path / "days.json").read_text())["days"]
        assert len(days) == 3
        assert sum(d["probability"] for d in days) == pytest.approx(1.0)
        notes = json.loads((tmp_path / "manifest.json").read_text())["notes"]
        assert notes["total_days"] == 365
        assert sum(notes["sizes"].values()) == 365
        assert "/365 days" in capsys.readouterr().out


class TestReportCommand:
    def test_side_by_side_table(self, tmp_path, capsys):
        main(["solve", TWO_UNIT, "--tax", "0", "--gap", "0",
              "--out", str(tmp_path / "t0")])
        main(["solve", TWO_UNIT, "--tax", "30", "--gap", "0",
              "--out", str(tmp_path / "t30")])
        capsys.readouterr()
        rc = main(["report", str(tmp_path / "t0" / "summary.csv"),
                   str(tmp_path / "t30" / "summary.csv"),
                   "--labels", "base,taxed"])
        assert rc == 0
        out = capsys.readouterr().out
        header, *rows = [line.split() for line in out.splitlines() if line]
        assert header == ["metric", "base", "taxed"]
        emissions = next(r for r in rows if r[0] == "expected_emissions")
        assert emissions[1:] == ["300", "91"]

    def test_wrong_label_count(self, tmp_path, capsys):
        main(["solve", TWO_UNIT, "--out", str(tmp_path)])
        rc = main(["report", str(tmp_path / "summary.csv"),
                   "--labels", "a,b"])
        assert rc == 2

    def test_non_summary_file(self, tmp_path):
        bad = tmp_path / "other.csv"
        bad.write_text("x,y\n1,2\n")
        assert main(["report", str(bad)]) == 2


class TestExitCodes:
    def test_missing_input_file(self, tmp_path, capsys):
        rc = main(["solve", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path)])
        assert rc == 2
        assert "error (parse)" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["solve", str(bad), "--out", str(tmp_path)]) == 2

    def test_invalid_system(self, tmp_path, capsys):
        doc = json.loads((DATA / "two_unit.json").read_text())
        doc["generators"][0]["g_min"] = 999.0
        bad = tmp_path / "sys.json"
        bad.write_text(json.dumps(doc))
        rc = main(["solve", str(bad), "--out", str(tmp_path)])
        assert rc == 3
        assert "error (validation)" in capsys.readouterr().err

    def test_infeasible_system(self, tmp_path, capsys):
        scn = tmp_path / "scn.json"
        scn.write_text(json.dumps(
            {"transforms": [{"kind": "load_scale", "factor": 50.0}]}))
        rc = main(["solve", TWO_UNIT, "--scenario", str(scn),
                   "--out", str(tmp_path)])
        assert rc == 4
        assert "error (infeasible)" in capsys.readouterr().err

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "taxgrid.cli", "solve", TWO_UNIT,
             "--tax", "30", "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "expected_cost" in proc.stdout
