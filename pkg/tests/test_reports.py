"""CSV writers: layout, formatting, byte determinism."""

from __future__ import annotations

import pathlib

import pytest

from taxgrid.milp import SolverConfig
from taxgrid.reports import (fmt, read_summary_csv, summary_table,
                             write_dispatch_csv, write_pareto_csv,
                             write_prices_csv, write_search_csv,
                             write_summary_csv)
from taxgrid.search import (TaxSearchConfig, sample_pareto_by_cap,
                            sample_pareto_by_tax, wsb)
from taxgrid.system import load_system
from taxgrid.ucct import extract_prices, solve_ucct

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"
EXACT = SolverConfig(relative_mip_gap=0.0)


class TestCellFormat:
    def test_six_significant_digits(self):
        assert fmt(1234567.89) == "1.23457e+06"
        assert fmt(0.000123456789) == "0.000123457"
        assert fmt(7560.0) == "7560"
        assert fmt(18.947368421) == "18.9474"

    def test_special_cells(self):
        assert fmt(None) == ""
        assert fmt(True) == "1"
        assert fmt(False) == "0"
        assert fmt("d1") == "d1"
        assert fmt(3) == "3"


class TestSolveFiles:
    def solved(self):
        s = load_system(DATA / "two_unit.json")
        return s, extract_prices(s, solve_ucct(s, 30.0, cfg=EXACT), cfg=EXACT)

    def test_dispatch_layout(self, tmp_path):
        s, res = self.solved()
        f = tmp_path / "dispatch.csv"
        write_dispatch_csv(f, s, res)
        lines = f.read_text().splitlines()
        assert lines[0] == "day,hour,generator,u,g"
        # one day, four hours, two generators
        assert len(lines) == 1 + 1 * 4 * 2
        first = lines[1].split(",")
        assert first[0] == "d1" and first[1] == "0"
        assert first[3] in {"0", "1"}

    def test_prices_layout(self, tmp_path):
        s, res = self.solved()
        f = tmp_path / "prices.csv"
        write_prices_csv(f, s, res)
        lines = f.read_text().splitlines()
        assert lines[0] == "day,hour,bus,lmp"
        assert len(lines) == 1 + 1 * 4 * 1
        # At a 30 $/ton tax the clean unit sets the price: 18 + 30 * 0.45.
        assert lines[1] == "d1,0,b1,31.5"

    def test_prices_require_extraction(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        res = solve_ucct(s, 0.0, cfg=EXACT)
        with pytest.raises(ValueError, match="prices"):
            write_prices_csv(tmp_path / "prices.csv", s, res)

    def test_summary_metrics(self, tmp_path):
        s, res = self.solved()
        f = tmp_path / "summary.csv"
        write_summary_csv(f, s, res)
        metrics = read_summary_csv(f)
        for key in ("tax", "expected_cost", "expected_emissions", "objective",
                    "tax_revenue", "shed_energy", "spill_energy",
                    "energy_coal", "energy_gas", "congestion_surplus",
                    "profit_coal", "profit_gas", "lmp_mean_b1", "lmp_std_b1"):
            assert key in metrics, key
        assert metrics["tax"] == 30.0
        assert metrics["expected_emissions"] == pytest.approx(91.0)
        assert metrics["congestion_surplus"] == pytest.approx(0.0, abs=1e-6)
        assert metrics["lmp_mean_b1"] == pytest.approx(31.5)
        assert metrics["lmp_std_b1"] == pytest.approx(0.0, abs=1e-9)
        # Revenue equals tax times expected tons.
        assert metrics["tax_revenue"] == pytest.approx(30.0 * 91.0, rel=1e-4)

    def test_byte_determinism(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        blobs = []
        for n in ("a", "b"):
            res = extract_prices(s, solve_ucct(s, 30.0, cfg=EXACT), cfg=EXACT)
            d, p, m = (tmp_path / f"{n}{k}.csv" for k in ("d", "p", "m"))
            write_dispatch_csv(d, s, res)
            write_prices_csv(p, s, res)
            write_summary_csv(m, s, res)
            blobs.append((d.read_bytes(), p.read_bytes(), m.read_bytes()))
        assert blobs[0] == blobs[1]
        assert b"\r" not in blobs[0][0]


class TestSearchFile:
    def test_iteration_trail(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        res = wsb(s, TaxSearchConfig(target_emissions=150.0), solver=EXACT)
        f = tmp_path / "search.csv"
        write_search_csv(f, res)
        lines = f.read_text().splitlines()
        assert lines[0] == "iteration,tax,emissions,cost,feasible,attainment"
        assert len(lines) == 1 + 16
        cells = [ln.split(",") for ln in lines[1:]]
        assert [c[0] for c in cells] == [str(i) for i in range(16)]
        assert all(c[4] in {"0", "1"} for c in cells)
        assert all(c[5] == "" for c in cells)  # plain mode: no attainment

    def test_attainment_column(self, tmp_path):
        s = load_system(DATA / "uncertain.json")
        res = wsb(s, TaxSearchConfig(target_emissions=77.2,
                                     certainty_level=0.8), solver=EXACT)
        f = tmp_path / "search.csv"
        write_search_csv(f, res)
        for ln in f.read_text().splitlines()[1:]:
            val = ln.split(",")[5]
            assert val != ""
            assert 0.0 <= float(val) <= 1.0


class TestParetoFile:
    def test_cap_sweep_with_infeasible_point(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_cap(s, 2, bounds=(50.0, 300.0), solver=EXACT)
        f = tmp_path / "pareto.csv"
        write_pareto_csv(f, sample)
        lines = f.read_text().splitlines()
        assert lines[0] == "kind,parameter,cost,emissions,marginal_value,feasible"
        bad, good = lines[1].split(","), lines[2].split(",")
        assert bad[0] == "cap" and bad[2] == "" and bad[5] == "0"
        assert good[2] == "3600" and good[5] == "1"

    def test_tax_sweep_rows(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_tax(s, [0.0, 30.0], solver=EXACT)
        f = tmp_path / "pareto.csv"
        write_pareto_csv(f, sample)
        lines = f.read_text().splitlines()
        assert lines[1].startswith("tax,0,3600,300")
        assert lines[2].startswith("tax,30,7560,91")


class TestSummaryTable:
    def test_columns_per_file(self, tmp_path):
        s = load_system(DATA / "two_unit.json")
        paths = []
        for tax in (0.0, 30.0):
            res = extract_prices(s, solve_ucct(s, tax, cfg=EXACT), cfg=EXACT)
            p = tmp_path / f"summary_{int(tax)}.csv"
            write_summary_csv(p, s, res)
            paths.append(p)
        table = summary_table(paths, labels=["tax0", "tax30"])
        lines = table.splitlines()
        assert lines[0].split() == ["metric", "tax0", "tax30"]
        emis = next(ln for ln in lines if ln.startswith("expected_emissions"))
        assert emis.split()[1:] == ["300", "91"]

    def test_rejects_non_summary(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_summary_csv(f)
