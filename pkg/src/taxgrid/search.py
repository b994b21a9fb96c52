"""Upper-level tax search: bisection on the tax rate, and alternatives.

The headline routine is weighted-sum bisection (wsb). Emissions under
cost-minimal commitment are a nonincreasing step function of the tax
rate, so the smallest rate meeting a target is the zero crossing of
E(tax) - target and bisection brackets it: keep the upper endpoint
feasible and the lower infeasible, halve until the bracket is narrower
than the tolerance, return the feasible upper endpoint.

cemv is the comparison method: solve cost minimization with an explicit
probability-weighted emissions cap across all days (one coupled problem),
read the marginal value of the cap off the fixed-binary LP dual, and
re-run the commitment at that value as a tax. On frontiers with concave
notches the re-run lands on a different commitment regime and overshoots
the cap, which is the failure the bisection method avoids.

Both searches and the Pareto samplers share a solve cache keyed by
(system content hash, tax, build flags); bisection never revisits a tax,
but sweeps and repeated searches on the same system do.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .milp.branch_bound import fix_binaries_and_dualize, solve_milp
from .milp.problem import GAP_LIMIT, LE, OPTIMAL, ProblemBuilder, SolverConfig
from .system import BuildFlags, SystemData, content_hash
from .ucct import UcctResult, build_day_milp, solve_ucct
from .uncertainty import (DAYS_PER_YEAR, attainment_probability,
                          emissions_distribution)


class InfeasibleTargetError(RuntimeError):
    """No commitment meets the emissions cap."""


@dataclass(frozen=True)
class TaxSearchConfig:
    """Target and bracket for the bisection search.

    target_emissions is on the same scale as UcctResult.expected_emissions:
    expected tons per day. With certainty_level set, feasibility becomes a
    probabilistic test on the annualized distribution instead of a point
    comparison.
    """

    target_emissions: float
    tax_low: float = 0.0
    tax_high: float = 100.0
    tolerance: float = 0.01
    certainty_level: float | None = None
    max_iterations: int = 60

    def __post_init__(self):
        if not self.tax_low < self.tax_high:
            raise ValueError("tax_low must be below tax_high")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.certainty_level is not None and not (0.0 < self.certainty_level < 1.0):
            raise ValueError("certainty_level must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class SearchIteration:
    tax: float
    emissions: float        # expected tons per day at this tax
    cost: float
    feasible: bool
    attainment: float | None = None  # Prob[annual <= target], certainty mode


@dataclass
class TaxSearchResult:
    optimal_tax: float | None
    iterations: tuple[SearchIteration, ...]
    result: UcctResult | None
    converged: bool
    message: str = ""

    @property
    def bisection_count(self) -> int:
        """Evaluations beyond the two bracket pre-checks."""
        return max(0, len(self.iterations) - 2)


class SolveCache:
    """Memoizes solve_ucct by (system content, tax, flags)."""

    def __init__(self):
        self._store: dict = {}
        self.hits = 0

    def solve(self, sys_data: SystemData, tax: float, solver: SolverConfig | None,
              flags: BuildFlags, jobs: int = 1) -> UcctResult:
        key = (content_hash(sys_data), tax, flags)
        if key in self._store:
            self.hits += 1
        else:
            self._store[key] = solve_ucct(sys_data, tax, cfg=solver,
                                          flags=flags, jobs=jobs)
        return self._store[key]


def wsb(sys_data: SystemData, cfg: TaxSearchConfig,
        solver: SolverConfig | None = None, flags: BuildFlags = BuildFlags(),
        jobs: int = 1, cache: SolveCache | None = None) -> TaxSearchResult:
    """Find the smallest tax rate whose commitment meets the target.

    Pre-checks both bracket endpoints: an infeasible upper endpoint means
    the target is out of reach in this bracket (returned unconverged with
    the evidence recorded), a feasible lower endpoint short-circuits to
    tax_low. The returned tax always passed the feasibility test itself.
    """
    cache = cache or SolveCache()
    trail: list[SearchIteration] = []

    def probe(tax: float) -> tuple[bool, UcctResult]:
        r = cache.solve(sys_data, tax, solver, flags, jobs)
        attainment = None
        if cfg.certainty_level is None:
            ok = bool(r.expected_emissions <= cfg.target_emissions)
        else:
            dist = emissions_distribution(r)
            attainment = float(attainment_probability(
                dist, DAYS_PER_YEAR * cfg.target_emissions))
            ok = bool(attainment >= cfg.certainty_level)
        trail.append(SearchIteration(tax=tax, emissions=r.expected_emissions,
                                     cost=r.expected_cost, feasible=ok,
                                     attainment=attainment))
        return ok, r

    hi_ok, hi_result = probe(cfg.tax_high)
    if not hi_ok:
        return TaxSearchResult(
            optimal_tax=None, iterations=tuple(trail), result=hi_result,
            converged=False,
            message=(f"target {cfg.target_emissions:g} not met even at "
                     f"tax {cfg.tax_high:g}; raise the bracket or relax the target"))
    lo_ok, lo_result = probe(cfg.tax_low)
    if lo_ok:
        return TaxSearchResult(optimal_tax=cfg.tax_low, iterations=tuple(trail),
                               result=lo_result, converged=True)

    lo, hi = cfg.tax_low, cfg.tax_high
    best = hi_result
    steps = 0
    while hi - lo > cfg.tolerance:
        if steps >= cfg.max_iterations:
            return TaxSearchResult(
                optimal_tax=hi, iterations=tuple(trail), result=best,
                converged=False,
                message=f"bracket still {hi - lo:g} wide after {steps} bisection steps")
        mid = 0.5 * (lo + hi)
        ok, r = probe(mid)
        if ok:
            hi, best = mid, r
        else:
            lo = mid
        steps += 1
    return TaxSearchResult(optimal_tax=hi, iterations=tuple(trail),
                           result=best, converged=True)


# ---------------------------------------------------------------------------
# Constrained emission marginal value


@dataclass
class CemvResult:
    tax: float                 # marginal value of the cap, $/ton
    capped_cost: float         # expected cost of the capped commitment
    capped_emissions: float    # expected emissions of the capped commitment
    realized: UcctResult       # what the same marginal value achieves as a tax


def _coupled_capped_problem(sys_data: SystemData, target: float,
                            flags: BuildFlags):
    """All days in one problem, probability-weighted, plus the cap row.

    Day columns keep their per-day labels behind a "dayid|" prefix. The
    objective is the probability-weighted expected cost (tax zero), and the
    single extra row caps probability-weighted emissions at the target.
    """
    pb = ProblemBuilder()
    cap_terms: list[tuple[int, float]] = []
    for day in sys_data.days:
        p = build_day_milp(sys_data, day, 0.0, flags)
        offset = pb.num_vars
        pi = day.probability
        for j in range(p.num_vars):
            pb.add_var(f"{day.id}|{p.col_labels[j]}", float(p.lo[j]),
                       float(p.up[j]), pi * float(p.c[j]), bool(p.binary[j]))
        for i in range(p.num_rows):
            s, e = p.a_indptr[i], p.a_indptr[i + 1]
            pb.add_row(f"{day.id}|{p.row_labels[i]}",
                       [(offset + int(p.a_indices[k]), float(p.a_data[k]))
                        for k in range(s, e)],
                       int(p.senses[i]), float(p.rhs[i]))
        for g in sys_data.generators:
            if not g.is_renewable and not flags.tced:
                for t in range(sys_data.horizon):
                    if g.e_min:
                        cap_terms.append(
                            (offset + p.col_index(f"u[{g.id},{t}]"), pi * g.e_min))
                    if g.e_startup:
                        cap_terms.append(
                            (offset + p.col_index(f"v[{g.id},{t}]"), pi * g.e_startup))
            for s_i, blk in enumerate(g.blocks):
                if blk.marginal_emis:
                    for t in range(sys_data.horizon):
                        cap_terms.append(
                            (offset + p.col_index(f"g[{g.id},{s_i},{t}]"),
                             pi * blk.marginal_emis))
    pb.add_row("emissions_cap", cap_terms, LE, target)
    return pb.build()


def cemv(sys_data: SystemData, target: float,
         solver: SolverConfig | None = None,
         flags: BuildFlags = BuildFlags()) -> CemvResult:
    """Cost minimization under an explicit emissions cap, priced at the margin.

    The marginal value lambda is the magnitude of the cap-row dual after
    fixing the binaries of the coupled solution. The returned realization
    re-runs the ordinary per-day commitment with lambda charged as a tax;
    on non-convex frontiers its emissions can exceed the cap.
    """
    problem = _coupled_capped_problem(sys_data, target, flags)
    sol = solve_milp(problem, solver)
    if sol.status not in (OPTIMAL, GAP_LIMIT):
        raise InfeasibleTargetError(
            f"no commitment keeps expected emissions within {target:g} tons")
    _, lp = fix_binaries_and_dualize(problem, sol, solver)
    if lp.status != OPTIMAL:
        raise InfeasibleTargetError("pricing re-solve of the capped problem failed")
    lam = max(0.0, -lp.dual(problem, "emissions_cap"))
    capped_emissions = problem.row_activity(
        problem.row_index("emissions_cap"), lp.x)
    realized = solve_ucct(sys_data, lam, cfg=solver, flags=flags)
    return CemvResult(tax=lam, capped_cost=float(lp.objective),
                      capped_emissions=float(capped_emissions),
                      realized=realized)


# ---------------------------------------------------------------------------
# Pareto frontier sampling


@dataclass(frozen=True)
class ParetoPoint:
    parameter: float                  # swept cap (tons) or tax ($/ton)
    cost: float | None
    emissions: float | None
    marginal_value: float | None = None
    feasible: bool = True


@dataclass(frozen=True)
class ParetoSample:
    kind: str                         # "cap" or "tax"
    points: tuple[ParetoPoint, ...]


def sample_pareto_by_tax(sys_data: SystemData, taxes: Sequence[float],
                         solver: SolverConfig | None = None,
                         flags: BuildFlags = BuildFlags(),
                         cache: SolveCache | None = None) -> ParetoSample:
    """Sweep the tax rate; every point is a realized commitment outcome.

    These points trace the convex hull of the cost/emissions frontier:
    weighted-sum minimization cannot land inside a concave notch.
    """
    cache = cache or SolveCache()
    pts = []
    for tax in sorted(taxes):
        r = cache.solve(sys_data, tax, solver, flags)
        pts.append(ParetoPoint(parameter=float(tax), cost=r.expected_cost,
                               emissions=r.expected_emissions))
    return ParetoSample(kind="tax", points=tuple(pts))


def sample_pareto_by_cap(sys_data: SystemData, n_points: int,
                         bounds: tuple[float, float] | None = None,
                         solver: SolverConfig | None = None,
                         flags: BuildFlags = BuildFlags()) -> ParetoSample:
    """Sweep the emissions cap; points carry the cap's marginal value.

    Bounds default to the achievable range: emissions at a prohibitive tax
    up to emissions at zero tax. Caps that no commitment can meet are
    recorded as infeasible points rather than dropped.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if bounds is None:
        hi = solve_ucct(sys_data, 0.0, cfg=solver, flags=flags).expected_emissions
        lo = solve_ucct(sys_data, 1000.0, cfg=solver, flags=flags).expected_emissions
        bounds = (lo, hi)
    caps = np.linspace(bounds[0], bounds[1], n_points)
    pts = []
    for cap in caps:
        try:
            r = cemv(sys_data, float(cap), solver, flags)
        except InfeasibleTargetError:
            pts.append(ParetoPoint(parameter=float(cap), cost=None,
                                   emissions=None, feasible=False))
            continue
        pts.append(ParetoPoint(parameter=float(cap), cost=r.capped_cost,
                               emissions=r.capped_emissions,
                               marginal_value=r.tax))
    return ParetoSample(kind="cap", points=tuple(pts))
