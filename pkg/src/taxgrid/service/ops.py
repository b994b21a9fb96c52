"""Operations behind the service routes, shared with the command line.

Each function takes a typed request and returns a typed response; all
domain failures surface as the package's own exception types, which
error_kind classifies for HTTP handlers and process exit codes alike.
"""

from __future__ import annotations

import numpy as np

from ..milp import SolverConfig
from ..repdays import fragment_from_days, parse_year_csv, representative_days
from ..search import (InfeasibleTargetError, SolveCache, TaxSearchConfig,
                      sample_pareto_by_cap, sample_pareto_by_tax, wsb)
from ..system import (BuildFlags, ParseError, ScenarioError, SystemData,
                      ValidationError, apply_scenario, parse_scenario,
                      system_from_dict)
from ..ucct import (UcctDaySolution, UcctInfeasibleError, UcctResult,
                    extract_prices, solve_ucct)
from .schemas import (ClusterRequest, ClusterResponse, DayResult,
                      FindTaxRequest, FindTaxResponse, IterationRow,
                      ParetoPointRow, ParetoRequest, ParetoResponse,
                      SolveRequest, SolveResponse, SolverOptions)


def error_kind(exc: Exception) -> str | None:
    """Classify a domain exception: parse, validation, or infeasible."""
    if isinstance(exc, (UcctInfeasibleError, InfeasibleTargetError)):
        return "infeasible"
    if isinstance(exc, ParseError):
        return "parse"
    if isinstance(exc, (ValidationError, ScenarioError, ValueError)):
        return "validation"
    return None


def build_system(system: dict, scenario: dict | None) -> tuple[SystemData, BuildFlags]:
    sys_data = system_from_dict(system)
    if scenario is None:
        return sys_data, BuildFlags()
    spec = parse_scenario(scenario)
    return apply_scenario(sys_data, spec), spec.build_flags()


def solver_config(opts: SolverOptions) -> SolverConfig | None:
    if opts.gap is None:
        return None
    return SolverConfig(relative_mip_gap=opts.gap)


def _lists(arrays: dict) -> dict[str, list[float]]:
    return {k: np.asarray(v, dtype=float).tolist() for k, v in arrays.items()}


def day_model(sol: UcctDaySolution) -> DayResult:
    return DayResult(
        day_id=sol.day_id,
        probability=sol.probability,
        cost=sol.cost,
        emissions=sol.emissions,
        relaxed=sol.relaxed,
        node_count=sol.node_count,
        commitment={g: [int(round(v)) for v in arr]
                    for g, arr in sol.commitment.items()},
        dispatch=_lists(sol.dispatch),
        shed=_lists(sol.shed),
        spill=_lists(sol.spill),
        flows=_lists(sol.flows),
        lmp=None if sol.lmp is None else _lists(sol.lmp))


def result_model(res: UcctResult) -> SolveResponse:
    return SolveResponse(
        tax=res.tax,
        expected_cost=res.expected_cost,
        expected_emissions=res.expected_emissions,
        objective=res.objective,
        tax_revenue=res.tax_revenue,
        fuel_energy=dict(res.fuel_energy),
        congestion_surplus=res.congestion_surplus,
        profit=None if res.profit is None else dict(res.profit),
        days=[day_model(d) for d in res.days])


def run_solve(req: SolveRequest) -> SolveResponse:
    sys_data, flags = build_system(req.system, req.scenario)
    cfg = solver_config(req.options)
    res = solve_ucct(sys_data, req.tax, cfg=cfg, flags=flags,
                     jobs=req.options.jobs)
    if req.prices:
        res = extract_prices(sys_data, res, cfg=cfg)
    return result_model(res)


def run_find_tax(req: FindTaxRequest) -> FindTaxResponse:
    sys_data, flags = build_system(req.system, req.scenario)
    cfg = solver_config(req.options)
    cache = SolveCache()

    baseline = None
    if req.target_reduction is not None:
        base = cache.solve(sys_data, 0.0, cfg, flags, jobs=req.options.jobs)
        baseline = base.expected_emissions
        target = baseline * (1.0 - req.target_reduction / 100.0)
    else:
        target = req.target_tons

    search_cfg = TaxSearchConfig(
        target_emissions=target, tax_low=req.bracket[0],
        tax_high=req.bracket[1], tolerance=req.tolerance,
        certainty_level=req.certainty)
    out = wsb(sys_data, search_cfg, solver=cfg, flags=flags,
              jobs=req.options.jobs, cache=cache)

    final = None
    if out.result is not None:
        final = result_model(extract_prices(sys_data, out.result, cfg=cfg))
    return FindTaxResponse(
        optimal_tax=out.optimal_tax,
        converged=out.converged,
        message=out.message,
        target_tons=target,
        baseline_emissions=baseline,
        bisection_count=out.bisection_count,
        iterations=[IterationRow(tax=it.tax, emissions=it.emissions,
                                 cost=it.cost, feasible=it.feasible,
                                 attainment=it.attainment)
                    for it in out.iterations],
        result=final)


def run_pareto(req: ParetoRequest) -> ParetoResponse:
    sys_data, flags = build_system(req.system, req.scenario)
    cfg = solver_config(req.options)
    if req.mode == "tax":
        taxes = req.taxes
        if taxes is None:
            taxes = np.linspace(0.0, 100.0, req.points).tolist()
        sample = sample_pareto_by_tax(sys_data, taxes, solver=cfg, flags=flags)
    else:
        sample = sample_pareto_by_cap(sys_data, req.points,
                                      bounds=req.bounds, solver=cfg,
                                      flags=flags)
    return ParetoResponse(
        kind=sample.kind,
        points=[ParetoPointRow(parameter=p.parameter, cost=p.cost,
                               emissions=p.emissions,
                               marginal_value=p.marginal_value,
                               feasible=p.feasible)
                for p in sample.points])


def run_cluster(req: ClusterRequest) -> ClusterResponse:
    year = parse_year_csv(req.csv_text)
    days = representative_days(year, req.k)
    total = len(year.profiles)
    return ClusterResponse(
        days=fragment_from_days(days)["days"],
        sizes={d.id: int(round(d.probability * total)) for d in days},
        total_days=total)
