"""Bisection tax search, capped-run marginal values, Pareto sampling."""

from __future__ import annotations

import pathlib

import pytest

from taxgrid.milp import SolverConfig
from taxgrid.search import (CemvResult, InfeasibleTargetError, SolveCache,
                            TaxSearchConfig, cemv, sample_pareto_by_cap,
                            sample_pareto_by_tax, wsb)
from taxgrid.system import load_system
from taxgrid.ucct import solve_ucct

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"

# Gap limits make near-tie objectives ambiguous; these fixtures are tiny,
# so every search test runs the solver to proven optimality.
EXACT = SolverConfig(relative_mip_gap=0.0)


class TestConfigValidation:
    def test_accepts_sane_values(self):
        cfg = TaxSearchConfig(target_emissions=100.0)
        assert cfg.tax_low == 0.0 and cfg.tax_high == 100.0
        assert cfg.tolerance == 0.01

    def test_rejects_bad_bracket(self):
        with pytest.raises(ValueError):
            TaxSearchConfig(target_emissions=1.0, tax_low=5.0, tax_high=5.0)
        with pytest.raises(ValueError):
            TaxSearchConfig(target_emissions=1.0, tax_low=9.0, tax_high=2.0)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            TaxSearchConfig(target_emissions=1.0, tolerance=0.0)
        with pytest.raises(ValueError):
            TaxSearchConfig(target_emissions=1.0, tolerance=-0.5)

    def test_rejects_bad_certainty(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                TaxSearchConfig(target_emissions=1.0, certainty_level=bad)

    def test_rejects_bad_iteration_cap(self):
        with pytest.raises(ValueError):
            TaxSearchConfig(target_emissions=1.0, max_iterations=0)


class TestBisection:
    def test_two_unit_target_between_plateaus(self):
        s = load_system(DATA / "two_unit.json")
        cfg = TaxSearchConfig(target_emissions=150.0)
        res = wsb(s, cfg, solver=EXACT)
        assert res.converged
        # Emission plateaus switch between 18.94 and 18.95 on a cent grid;
        # the returned rate sits within one tolerance above the switch.
        assert 18.94 < res.optimal_tax <= 18.96
        assert res.result.expected_emissions <= 150.0 + 1e-9
        # Bracket (0, 100) at tolerance 0.01 always halves exactly 14 times.
        assert res.bisection_count == 14
        assert len(res.iterations) == 16

    def test_trail_is_consistent(self):
        s = load_system(DATA / "two_unit.json")
        res = wsb(s, TaxSearchConfig(target_emissions=150.0), solver=EXACT)
        feas = [it.tax for it in res.iterations if it.feasible]
        infeas = [it.tax for it in res.iterations if it.feasible is False]
        assert res.optimal_tax == min(feas)
        assert max(infeas) < res.optimal_tax
        assert res.optimal_tax - max(infeas) <= 0.01 + 1e-12
        # Expected emissions fall (weakly) as the rate rises.
        trail = sorted(res.iterations, key=lambda it: it.tax)
        for a, b in zip(trail, trail[1:]):
            assert b.emissions <= a.emissions + 1e-9
        assert all(it.attainment is None for it in res.iterations)

    def test_target_already_met_at_lower_bound(self):
        s = load_system(DATA / "two_unit.json")
        # Zero-tax expected emissions are exactly 300; ties count as met.
        res = wsb(s, TaxSearchConfig(target_emissions=300.0), solver=EXACT)
        assert res.converged
        assert res.optimal_tax == 0.0
        assert res.bisection_count == 0
        assert res.result.expected_emissions == pytest.approx(300.0)

    def test_unattainable_target(self):
        s = load_system(DATA / "two_unit.json")
        res = wsb(s, TaxSearchConfig(target_emissions=50.0), solver=EXACT)
        assert not res.converged
        assert res.optimal_tax is None
        assert "not met" in res.message
        # Only the upper-bound probe ran; it is returned as evidence.
        assert len(res.iterations) == 1
        assert res.iterations[0].tax == 100.0
        assert res.result.expected_emissions > 50.0

    def test_cache_replays_probes(self):
        s = load_system(DATA / "two_unit.json")
        cache = SolveCache()
        cfg = TaxSearchConfig(target_emissions=150.0)
        r1 = wsb(s, cfg, solver=EXACT, cache=cache)
        assert cache.hits == 0
        r2 = wsb(s, cfg, solver=EXACT, cache=cache)
        assert cache.hits == len(r2.iterations)
        assert r2.optimal_tax == r1.optimal_tax
        assert [it.tax for it in r2.iterations] == [it.tax for it in r1.iterations]


class TestCertaintyMode:
    def test_certainty_ladder(self):
        s = load_system(DATA / "uncertain.json")
        cache = SolveCache()

        def run(level):
            cfg = TaxSearchConfig(target_emissions=77.2, certainty_level=level)
            return wsb(s, cfg, solver=EXACT, cache=cache)

        plain = wsb(s, TaxSearchConfig(target_emissions=77.2),
                    solver=EXACT, cache=cache)
        half, strong, strict = run(0.5), run(0.8), run(0.95)
        for r in (plain, half, strong, strict):
            assert r.converged

        # The mid plateau attains the annual target with probability ~0.62,
        # so a 0.5 requirement lands on the same switch point as the plain
        # expected-value search, while 0.8 and 0.95 must push to the next
        # (deeper) plateau.
        assert half.optimal_tax == plain.optimal_tax
        assert 33.30 <= plain.optimal_tax <= 33.36
        assert 85.70 <= strong.optimal_tax <= 85.74
        assert strict.optimal_tax == strong.optimal_tax
        ladder = [plain.optimal_tax, half.optimal_tax,
                  strong.optimal_tax, strict.optimal_tax]
        assert ladder == sorted(ladder)
        assert strong.optimal_tax - half.optimal_tax > 50.0
        assert cache.hits > 0

    def test_attainment_recorded(self):
        s = load_system(DATA / "uncertain.json")
        cfg = TaxSearchConfig(target_emissions=77.2, certainty_level=0.8)
        res = wsb(s, cfg, solver=EXACT)
        for it in res.iterations:
            assert it.attainment is not None
            assert 0.0 <= it.attainment <= 1.0
            assert it.feasible == (it.attainment >= 0.8)


class TestCappedMarginalValue:
    def test_notch_cap_prices_the_block_swap(self):
        s = load_system(DATA / "notch.json")
        r = cemv(s, 60.0, solver=EXACT)
        assert isinstance(r, CemvResult)
        # Meeting the cap swaps cheap dirty block output for the cleaner
        # block at 1.2 $/MWh over 0.15 ton/MWh: 8 $/ton at the margin.
        assert r.tax == pytest.approx(8.0, abs=1e-6)
        assert r.capped_emissions == pytest.approx(60.0, abs=1e-6)
        assert r.capped_cost == pytest.approx(1140.0, abs=1e-6)
        # That marginal value, charged as a tax, does not reproduce the
        # capped outcome: the always-on unit wins at 8 $/ton.
        assert r.realized.expected_emissions == pytest.approx(100.0)
        assert r.realized.expected_emissions > 60.0

    def test_bisection_meets_what_the_cap_price_misses(self):
        s = load_system(DATA / "notch.json")
        capped = cemv(s, 60.0, solver=EXACT)
        searched = wsb(s, TaxSearchConfig(target_emissions=60.0), solver=EXACT)
        assert searched.converged
        assert searched.result.expected_emissions <= 60.0 + 1e-9
        assert capped.realized.expected_emissions > 60.0 + 1e-9
        assert searched.optimal_tax > capped.tax

    def test_slack_cap_prices_at_zero(self):
        s = load_system(DATA / "notch.json")
        r = cemv(s, 150.0, solver=EXACT)
        assert r.tax == 0.0
        assert r.capped_emissions == pytest.approx(100.0)
        assert r.realized.expected_emissions == pytest.approx(100.0)

    def test_cap_interpolates_between_commitment_outcomes(self):
        # Under a cap the dispatch blends the two regimes continuously, so
        # intermediate emission levels that no tax rate can induce become
        # reachable, at a constant marginal value.
        s = load_system(DATA / "two_unit.json")
        r = cemv(s, 143.25, solver=EXACT)
        assert r.tax == pytest.approx(3960.0 / 209.0, rel=1e-9)
        assert r.capped_emissions == pytest.approx(143.25)
        assert r.capped_cost == pytest.approx(6570.0)
        assert 3600.0 < r.capped_cost < 7560.0

    def test_gap_cap_collapses_to_zero(self):
        # A cap inside a commitment gap (no dispatch continuum crosses it)
        # leaves the cap row slack at the capped optimum, so the marginal
        # value vanishes and the re-run tax misses the cap entirely.
        s = load_system(DATA / "notch.json")
        r = cemv(s, 80.0, solver=EXACT)
        assert r.tax == 0.0
        assert r.capped_emissions == pytest.approx(65.0)
        assert r.capped_cost == pytest.approx(1100.0)
        assert r.realized.expected_emissions == pytest.approx(100.0)

    def test_shedding_backstops_deep_caps(self):
        # Below the cleanest commitment's floor the cap is still met by
        # paying the shed penalty, at a steep marginal value.
        s = load_system(DATA / "notch.json")
        r = cemv(s, 10.0, solver=EXACT)
        assert r.capped_emissions == pytest.approx(10.0)
        assert r.tax > 100.0
        assert r.capped_cost > 2185.0

    def test_two_unit_cap_at_clean_plateau(self):
        s = load_system(DATA / "two_unit.json")
        r = cemv(s, 91.0, solver=EXACT)
        assert r.tax == pytest.approx(3960.0 / 209.0, rel=1e-9)
        assert r.capped_cost == pytest.approx(7560.0)
        assert r.capped_emissions == pytest.approx(91.0)
        # At exactly the crossing rate the two commitments tie, so only the
        # tax-inclusive objective is determined, not which regime solves it.
        tie = 7560.0 + r.tax * 91.0
        assert r.realized.objective == pytest.approx(tie, rel=1e-9)

    def test_unreachable_cap_raises(self):
        # Reserve keeps capacity committed, and committed floors emit, so
        # even full shedding cannot reach this cap.
        s = load_system(DATA / "two_unit.json")
        with pytest.raises(InfeasibleTargetError):
            cemv(s, 10.0, solver=EXACT)


class TestParetoSampling:
    def test_tax_singleton_matches_direct_solve(self):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_tax(s, [0.0], solver=EXACT)
        direct = solve_ucct(s, 0.0, cfg=EXACT)
        assert sample.kind == "tax"
        assert len(sample.points) == 1
        pt = sample.points[0]
        assert pt.parameter == 0.0
        assert pt.cost == pytest.approx(direct.expected_cost)
        assert pt.emissions == pytest.approx(direct.expected_emissions)

    def test_tax_sweep_sorted(self):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_tax(s, [30.0, 0.0, 19.0], solver=EXACT)
        params = [p.parameter for p in sample.points]
        assert params == sorted(params)

    def test_cap_sweep_two_unit(self):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_cap(s, 5, bounds=(91.0, 300.0), solver=EXACT)
        assert sample.kind == "cap"
        caps = [p.parameter for p in sample.points]
        assert caps == pytest.approx([91.0, 143.25, 195.5, 247.75, 300.0])
        assert all(p.feasible for p in sample.points)
        costs = [p.cost for p in sample.points]
        # Linear between the all-dirty and swapped-dispatch endpoints: the
        # cap trades cost for tons at one rate over the whole range.
        assert costs == pytest.approx([7560.0, 6570.0, 5580.0, 4590.0, 3600.0])
        for a, b in zip(costs, costs[1:]):
            assert b <= a + 1e-9
        for p in sample.points:
            assert p.emissions == pytest.approx(p.parameter)
        for p in sample.points[:4]:
            assert p.marginal_value == pytest.approx(3960.0 / 209.0, rel=1e-9)
        assert sample.points[4].marginal_value == 0.0

    def test_cap_sweep_default_bounds(self):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_cap(s, 2, solver=EXACT)
        assert sample.points[0].parameter == pytest.approx(91.0)
        assert sample.points[-1].parameter == pytest.approx(300.0)

    def test_infeasible_cap_point_is_kept(self):
        s = load_system(DATA / "two_unit.json")
        sample = sample_pareto_by_cap(s, 2, bounds=(50.0, 300.0), solver=EXACT)
        assert len(sample.points) == 2
        assert sample.points[0].feasible is False
        assert sample.points[0].cost is None
        assert sample.points[1].feasible is True
        assert sample.points[1].cost == pytest.approx(3600.0)

    def test_bad_point_count(self):
        s = load_system(DATA / "two_unit.json")
        with pytest.raises(ValueError):
            sample_pareto_by_cap(s, 0)

    def test_cap_sweep_dominates_tax_sweep(self):
        s = load_system(DATA / "notch.json")
        by_tax = sample_pareto_by_tax(
            s, [0.0, 8.0, 20.69, 20.71, 32.16, 32.17, 50.0], solver=EXACT)
        by_cap = sample_pareto_by_cap(s, 5, bounds=(20.0, 100.0), solver=EXACT)
        # Direct caps can only do at least as well as any tax that achieves
        # the same or lower emissions.
        for t in by_tax.points:
            for c in by_cap.points:
                if c.feasible and c.parameter >= t.emissions - 1e-9:
                    assert c.cost <= t.cost + 1e-6
        # And on this system strictly better somewhere: the tax sweep jumps
        # over outcomes the cap can buy at intermediate cost.
        tax_at_50 = next(p for p in by_tax.points
                         if p.emissions == pytest.approx(50.0))
        assert any(c.feasible and c.parameter >= 50.0
                   and c.cost < tax_at_50.cost - 1.0
                   for c in by_cap.points)
