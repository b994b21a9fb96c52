"""Unit commitment with a carbon tax over representative days.

Each representative day is assembled as an independent mixed-binary LP:
commitment/startup/shutdown binaries, piecewise-linear dispatch blocks,
cyclic min up/down and ramp coupling, DC power flow, an operating-reserve
row per hour (3% of load + 5% of renewable output + largest unit), and
hourly up/down flexibility requirements linearized with per-unit reserve
variables. Total unit output never appears as its own column; it is the
expression g_min*u + sum of block dispatch, substituted into every row
that needs it.

Day problems are unweighted. Probability weights enter only when results
are aggregated, so the per-day argmin is unchanged and days can be solved
independently (and concurrently).

Conventions that matter downstream:
  - renewables carry no commitment columns; their block dispatch is capped
    hour by hour at the day's availability profile, and their g_min and
    per-hour minimum cost/emission terms are ignored (renewable units are
    expected to declare g_min = 0),
  - line flow f is positive from from_bus to to_bus; the first bus is the
    angle reference,
  - ramp rows apply to every unit, renewables included, so curtailment is
    ramp-constrained like any other dispatch decision,
  - shed and spill are hourly MWh quantities; with 1 h steps they are
    numerically equal to MW.

The TCED relaxation (flags.tced) drops commitment logic, min up/down and
ramp rows, treats every unit as always committed, and zeroes g_min along
with the per-hour minimum cost and emission terms. Block widths are kept,
so relaxed dispatch capacity is the block span, while reserve and
flexibility headroom keep the literal g_max.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .milp.branch_bound import fix_binaries_and_dualize, solve_milp
from .milp.problem import (EQ, GAP_LIMIT, GE, LE, OPTIMAL, MilpProblem,
                           MilpSolution, ProblemBuilder, SolverConfig)
from .system import BuildFlags, Generator, RepresentativeDay, SystemData

RESERVE_LOAD_SHARE = 0.03
RESERVE_RENEWABLE_SHARE = 0.05


class UcctInfeasibleError(RuntimeError):
    """A day problem has no feasible commitment (or pricing re-solve failed)."""


def reserve_requirement(total_load: float, renewable_output: float,
                        largest_unit: float) -> float:
    """Hourly reserve requirement: 3% of load + 5% of renewable output
    plus the largest single unit (the N-1 headroom term)."""
    return (RESERVE_LOAD_SHARE * total_load
            + RESERVE_RENEWABLE_SHARE * renewable_output + largest_unit)


# ---------------------------------------------------------------------------
# Day problem assembly


def _col(kind: str, *idx) -> str:
    return f"{kind}[{','.join(str(i) for i in idx)}]"


def build_day_milp(sys_data: SystemData, day: RepresentativeDay, tax: float,
                   flags: BuildFlags = BuildFlags()) -> MilpProblem:
    """Assemble one representative day as a mixed-binary LP.

    Column and row labels follow a fixed kind[index,...] scheme; the bus
    balance rows are labeled bal[bus,t] so price extraction can find them.
    """
    if tax < 0:
        raise ValueError(f"tax rate must be >= 0, got {tax}")
    T = sys_data.horizon
    for b in sys_data.buses:
        if len(day.demand[b.id]) != T:
            raise ValueError(f"day {day.id}: demand[{b.id}] does not match horizon {T}")
    tced = flags.tced
    pb = ProblemBuilder()

    thermal = [g for g in sys_data.generators if not g.is_renewable]
    committed = [] if tced else thermal  # units that get u/v/z columns
    gens = sys_data.generators

    # --- columns -----------------------------------------------------------
    u = {}
    v = {}
    z = {}
    for g in committed:
        for t in range(T):
            u[g.id, t] = pb.add_var(_col("u", g.id, t), 0.0, 1.0,
                                    cost=g.c_min + tax * g.e_min, binary=True)
        for t in range(T):
            v[g.id, t] = pb.add_var(_col("v", g.id, t), 0.0, 1.0,
                                    cost=g.c_startup + tax * g.e_startup, binary=True)
        for t in range(T):
            z[g.id, t] = pb.add_var(_col("z", g.id, t), 0.0, 1.0, binary=True)

    gs = {}
    for g in gens:
        cap = day.renewable_cap.get(g.id) if g.is_renewable else None
        for s, blk in enumerate(g.blocks):
            for t in range(T):
                hi = blk.width
                if g.is_renewable:
                    avail = cap[t] if cap is not None else g.g_max
                    if len(g.blocks) == 1:
                        hi = min(blk.width, avail)
                gs[g.id, s, t] = pb.add_var(
                    _col("g", g.id, s, t), 0.0, hi,
                    cost=blk.marginal_cost + tax * blk.marginal_emis)

    shed = {}
    for b in sys_data.buses:
        for t in range(T):
            shed[b.id, t] = pb.add_var(_col("shed", b.id, t), 0.0,
                                       day.demand[b.id][t],
                                       cost=sys_data.shed_penalty)

    ren_at = {b.id: [g for g in gens if g.is_renewable and g.bus == b.id]
              for b in sys_data.buses}
    spill = {}
    for b in sys_data.buses:
        if ren_at[b.id]:
            for t in range(T):
                spill[b.id, t] = pb.add_var(_col("spill", b.id, t), 0.0, np.inf,
                                            cost=sys_data.spill_penalty)

    theta = {}
    flow = {}
    if sys_data.lines:
        slack = sys_data.buses[0].id
        for b in sys_data.buses:
            if b.id != slack:
                for t in range(T):
                    theta[b.id, t] = pb.add_var(_col("th", b.id, t),
                                                -np.inf, np.inf)
        for l in sys_data.lines:
            for t in range(T):
                flow[l.id, t] = pb.add_var(_col("f", l.id, t),
                                           -l.capacity, l.capacity)

    # Flexibility reserve columns, one pair per unit-hour. For units without
    # commitment columns the ramp-rate cap becomes a plain upper bound.
    rup = {}
    rdn = {}
    if not flags.relax_flexibility:
        for g in gens:
            has_u = (g.id, 0) in u
            for t in range(T):
                rup[g.id, t] = pb.add_var(_col("rup", g.id, t), 0.0,
                                          np.inf if has_u else g.ramp_up)
            for t in range(T):
                rdn[g.id, t] = pb.add_var(_col("rdn", g.id, t), 0.0,
                                          np.inf if has_u else g.ramp_down)

    # --- unit output as coefficient lists ------------------------------------
    def output_terms(g: Generator, t: int, scale: float = 1.0):
        """Coefficients of the unit's total output g_min*u + sum_s g_s."""
        terms = [(gs[g.id, s, t], scale) for s in range(len(g.blocks))]
        if (g.id, t) in u and g.g_min != 0.0:
            terms.append((u[g.id, t], scale * g.g_min))
        return terms

    # --- bus balance and network -------------------------------------------
    for b in sys_data.buses:
        for t in range(T):
            terms = []
            for g in gens:
                if g.bus == b.id:
                    terms += output_terms(g, t)
            terms.append((shed[b.id, t], 1.0))
            if (b.id, t) in spill:
                terms.append((spill[b.id, t], -1.0))
            for l in sys_data.lines:
                if l.to_bus == b.id:
                    terms.append((flow[l.id, t], 1.0))
                elif l.from_bus == b.id:
                    terms.append((flow[l.id, t], -1.0))
            pb.add_row(_col("bal", b.id, t), terms, EQ, day.demand[b.id][t])

    for l in sys_data.lines:
        for t in range(T):
            terms = [(flow[l.id, t], 1.0)]
            if (l.from_bus, t) in theta:
                terms.append((theta[l.from_bus, t], -1.0 / l.reactance))
            if (l.to_bus, t) in theta:
                terms.append((theta[l.to_bus, t], 1.0 / l.reactance))
            pb.add_row(_col("flow", l.id, t), terms, EQ, 0.0)

    # --- block caps and commitment logic ------------------------------------
    for g in committed:
        for s, blk in enumerate(g.blocks):
            for t in range(T):
                pb.add_row(_col("blk", g.id, s, t),
                           [(gs[g.id, s, t], 1.0), (u[g.id, t], -blk.width)],
                           LE, 0.0)
    for g in gens:
        if g.is_renewable and len(g.blocks) > 1:
            cap = day.renewable_cap.get(g.id)
            for t in range(T):
                avail = cap[t] if cap is not None else g.g_max
                pb.add_row(_col("rencap", g.id, t),
                           [(gs[g.id, s, t], 1.0) for s in range(len(g.blocks))],
                           LE, avail)

    for g in committed:
        for t in range(T):
            pb.add_row(_col("vz", g.id, t),
                       [(v[g.id, t], 1.0), (z[g.id, t], 1.0)], LE, 1.0)
        for t in range(T):
            # v - z = u_t - u_{t-1}, hours wrapping cyclically
            pb.add_row(_col("logic", g.id, t),
                       [(v[g.id, t], 1.0), (z[g.id, t], -1.0),
                        (u[g.id, t], -1.0), (u[g.id, (t - 1) % T], 1.0)],
                       EQ, 0.0)
        for t in range(T):
            window = [(v[g.id, (t - k) % T], 1.0) for k in range(g.min_up)]
            pb.add_row(_col("minup", g.id, t),
                       window + [(u[g.id, t], -1.0)], LE, 0.0)
        for t in range(T):
            window = [(z[g.id, (t - k) % T], 1.0) for k in range(g.min_down)]
            pb.add_row(_col("mindn", g.id, t),
                       window + [(u[g.id, t], 1.0)], LE, 1.0)

    if not tced:
        for g in gens:
            for t in range(T):
                terms = output_terms(g, t) + output_terms(g, (t - 1) % T, -1.0)
                pb.add_row(_col("rampup", g.id, t), terms, LE, g.ramp_up)
            for t in range(T):
                terms = output_terms(g, t, -1.0) + output_terms(g, (t - 1) % T)
                pb.add_row(_col("rampdn", g.id, t), terms, LE, g.ramp_down)

    # --- operating reserve ---------------------------------------------------
    largest = max(g.g_max for g in gens)
    for t in range(T):
        terms = []
        fixed_headroom = 0.0
        for g in gens:
            if g.is_renewable:
                terms += output_terms(g, t, -RESERVE_RENEWABLE_SHARE)
            elif (g.id, t) in u:
                terms.append((u[g.id, t], g.g_max - g.g_min))
                terms += [(gs[g.id, s, t], -1.0) for s in range(len(g.blocks))]
            else:  # relaxed: always committed, g_min zeroed
                fixed_headroom += g.g_max
                terms += [(gs[g.id, s, t], -1.0) for s in range(len(g.blocks))]
        need = reserve_requirement(sys_data.total_demand(day, t), 0.0, largest)
        pb.add_row(_col("res", t), terms, GE, need - fixed_headroom)

    # --- hourly flexibility --------------------------------------------------
    if not flags.relax_flexibility:
        for t in range(T):
            pb.add_row(_col("flexup", t), [(rup[g.id, t], 1.0) for g in gens],
                       GE, day.wind_up_req[t] + day.load_ramp_req[t])
            pb.add_row(_col("flexdn", t), [(rdn[g.id, t], 1.0) for g in gens],
                       GE, day.wind_down_req[t] + day.load_ramp_req[t])
        for g in gens:
            has_u = (g.id, 0) in u
            for t in range(T):
                if has_u:
                    pb.add_row(_col("rupcap", g.id, t),
                               [(rup[g.id, t], 1.0), (u[g.id, t], -g.ramp_up)],
                               LE, 0.0)
                pb.add_row(_col("ruphead", g.id, t),
                           [(rup[g.id, t], 1.0)] + output_terms(g, t),
                           LE, g.g_max)
                if has_u:
                    pb.add_row(_col("rdncap", g.id, t),
                               [(rdn[g.id, t], 1.0), (u[g.id, t], -g.ramp_down)],
                               LE, 0.0)
                # headroom above minimum: rdn <= g - g_min*u = sum_s g_s
                pb.add_row(_col("rdnfloor", g.id, t),
                           [(rdn[g.id, t], 1.0)]
                           + [(gs[g.id, s, t], -1.0) for s in range(len(g.blocks))],
                           LE, 0.0)

    # --- renewable spill caps --------------------------------------------
    for b in sys_data.buses:
        for t in range(T):
            if (b.id, t) in spill:
                terms = [(spill[b.id, t], 1.0)]
                for g in ren_at[b.id]:
                    terms += output_terms(g, t, -1.0)
                pb.add_row(_col("spillcap", b.id, t), terms, LE, 0.0)

    # --- optional daily gas energy cap ------------------------------------
    if flags.gas_energy_fraction is not None:
        terms = []
        for g in gens:
            if g.fuel == "gas":
                for t in range(T):
                    terms += output_terms(g, t)
        total = sum(sys_data.total_demand(day, t) for t in range(T))
        pb.add_row("gascap", terms, LE, flags.gas_energy_fraction * total)

    return pb.build()


# ---------------------------------------------------------------------------
# Solving and accounting


@dataclass
class UcctDaySolution:
    """Primal values and accounting for one solved representative day."""

    day_id: str
    probability: float
    objective: float           # cost + tax * emissions, this day, unweighted
    generation_cost: float     # commitment, startup, and block energy cost
    shed_cost: float           # load shed and renewable spill penalties
    emissions: float           # tons, including commitment and startup terms
    commitment: dict[str, np.ndarray]
    startup: dict[str, np.ndarray]
    shutdown: dict[str, np.ndarray]
    dispatch: dict[str, np.ndarray]        # unit output g per hour
    block_dispatch: dict[str, np.ndarray]  # (blocks, hours)
    shed: dict[str, np.ndarray]
    spill: dict[str, np.ndarray]
    flows: dict[str, np.ndarray]
    angles: dict[str, np.ndarray]
    node_count: int
    iterations: int
    relaxed: bool = False      # solved with commitment dropped (g_min zeroed)
    lmp: dict[str, np.ndarray] | None = None
    problem: MilpProblem | None = None
    milp: MilpSolution | None = None

    @property
    def cost(self) -> float:
        return self.generation_cost + self.shed_cost


@dataclass
class UcctResult:
    """Probability-weighted aggregate over all representative days."""

    tax: float
    flags: BuildFlags
    days: tuple[UcctDaySolution, ...]
    expected_cost: float       # E[generation + shed cost], $ per day
    expected_emissions: float  # E[emissions], tons per day
    objective: float           # expected_cost + tax * expected_emissions
    tax_revenue: float
    fuel_energy: dict[str, float]
    congestion_surplus: float | None = None
    profit: dict[str, float] | None = None

    def day(self, day_id: str) -> UcctDaySolution:
        for d in self.days:
            if d.day_id == day_id:
                return d
        raise KeyError(day_id)


def _pull(problem: MilpProblem, x: np.ndarray, kind: str, *idx) -> float:
    return float(x[problem.col_index(_col(kind, *idx))])


def _day_solution(sys_data: SystemData, day: RepresentativeDay, tax: float,
                  flags: BuildFlags, problem: MilpProblem,
                  sol: MilpSolution) -> UcctDaySolution:
    T = sys_data.horizon
    x = sol.x
    tced = flags.tced
    commitment, startup, shutdown = {}, {}, {}
    dispatch, blocks = {}, {}
    gen_cost = 0.0
    emis = 0.0
    for g in sys_data.generators:
        if g.is_renewable or tced:
            uu = np.ones(T)
            vv = np.zeros(T)
            zz = np.zeros(T)
        else:
            uu = np.array([round(_pull(problem, x, "u", g.id, t)) for t in range(T)],
                          dtype=float)
            vv = np.array([round(_pull(problem, x, "v", g.id, t)) for t in range(T)],
                          dtype=float)
            zz = np.array([round(_pull(problem, x, "z", g.id, t)) for t in range(T)],
                          dtype=float)
            gen_cost += g.c_min * uu.sum() + g.c_startup * vv.sum()
            emis += g.e_min * uu.sum() + g.e_startup * vv.sum()
        bt = np.array([[_pull(problem, x, "g", g.id, s, t) for t in range(T)]
                       for s in range(len(g.blocks))])
        for s, blk in enumerate(g.blocks):
            gen_cost += blk.marginal_cost * bt[s].sum()
            emis += blk.marginal_emis * bt[s].sum()
        gmin = 0.0 if (g.is_renewable or tced) else g.g_min
        commitment[g.id] = uu
        startup[g.id] = vv
        shutdown[g.id] = zz
        blocks[g.id] = bt
        dispatch[g.id] = gmin * uu + bt.sum(axis=0)

    shed_cost = 0.0
    shed, spill = {}, {}
    for b in sys_data.buses:
        sv = np.array([_pull(problem, x, "shed", b.id, t) for t in range(T)])
        shed[b.id] = sv
        shed_cost += sys_data.shed_penalty * sv.sum()
        try:
            pv = np.array([_pull(problem, x, "spill", b.id, t) for t in range(T)])
        except KeyError:
            pv = np.zeros(T)
        spill[b.id] = pv
        shed_cost += sys_data.spill_penalty * pv.sum()

    flows, angles = {}, {}
    if sys_data.lines:
        for l in sys_data.lines:
            flows[l.id] = np.array([_pull(problem, x, "f", l.id, t)
                                    for t in range(T)])
        slack = sys_data.buses[0].id
        for b in sys_data.buses:
            if b.id == slack:
                angles[b.id] = np.zeros(T)
            else:
                angles[b.id] = np.array([_pull(problem, x, "th", b.id, t)
                                         for t in range(T)])

    return UcctDaySolution(
        day_id=day.id, probability=day.probability,
        objective=gen_cost + shed_cost + tax * emis,
        generation_cost=gen_cost, shed_cost=shed_cost, emissions=emis,
        commitment=commitment, startup=startup, shutdown=shutdown,
        dispatch=dispatch, block_dispatch=blocks, shed=shed, spill=spill,
        flows=flows, angles=angles,
        node_count=sol.node_count, iterations=sol.iterations,
        relaxed=tced, problem=problem, milp=sol)


def solve_ucct(sys_data: SystemData, tax: float,
               cfg: SolverConfig | None = None,
               flags: BuildFlags = BuildFlags(), jobs: int = 1) -> UcctResult:
    """Solve every representative day at the given tax and aggregate.

    Days are independent; jobs > 1 solves them in a thread pool. The result
    is a deterministic reduction with days ordered by day id.
    """
    cfg = cfg or SolverConfig()

    def run(day: RepresentativeDay) -> UcctDaySolution:
        problem = build_day_milp(sys_data, day, tax, flags)
        sol = solve_milp(problem, cfg)
        if sol.status not in (OPTIMAL, GAP_LIMIT):
            raise UcctInfeasibleError(
                f"day {day.id}: {sol.status} at tax {tax:g} "
                "(check reserve and flexibility requirements against the fleet)")
        return _day_solution(sys_data, day, tax, flags, problem, sol)

    if jobs > 1 and len(sys_data.days) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            solved = list(pool.map(run, sys_data.days))
    else:
        solved = [run(day) for day in sys_data.days]
    solved.sort(key=lambda d: d.day_id)

    expected_cost = sum(d.probability * d.cost for d in solved)
    expected_emissions = sum(d.probability * d.emissions for d in solved)
    fuel_energy: dict[str, float] = {}
    for g in sys_data.generators:
        energy = sum(d.probability * d.dispatch[g.id].sum() for d in solved)
        fuel_energy[g.fuel] = fuel_energy.get(g.fuel, 0.0) + energy
    return UcctResult(
        tax=tax, flags=flags, days=tuple(solved),
        expected_cost=expected_cost, expected_emissions=expected_emissions,
        objective=expected_cost + tax * expected_emissions,
        tax_revenue=tax * expected_emissions, fuel_energy=fuel_energy)


# ---------------------------------------------------------------------------
# Pricing


def extract_prices(sys_data: SystemData, result: UcctResult,
                   cfg: SolverConfig | None = None) -> UcctResult:
    """Populate locational prices, congestion surplus, and unit profits.

    Binaries are fixed at their solved values and each day is re-solved as a
    pure LP; the LMP at a bus-hour is the dual of its balance row. Day
    problems are unweighted, so the duals need no probability scaling.
    """
    T = sys_data.horizon
    priced_days = []
    surplus = 0.0
    profit = {g.id: 0.0 for g in sys_data.generators}
    for d in result.days:
        if d.problem is None or d.milp is None:
            raise ValueError(f"day {d.day_id}: solution carries no problem data")
        _, lp = fix_binaries_and_dualize(d.problem, d.milp, cfg)
        if lp.status != OPTIMAL:
            raise UcctInfeasibleError(
                f"day {d.day_id}: pricing re-solve returned {lp.status}")
        lmp = {b.id: np.array([lp.dual(d.problem, _col("bal", b.id, t))
                               for t in range(T)])
               for b in sys_data.buses}
        priced_days.append(replace(d, lmp=lmp))

        for l in sys_data.lines:
            df = lmp[l.to_bus] - lmp[l.from_bus]
            surplus += d.probability * float(d.flows[l.id] @ df)
        for g in sys_data.generators:
            revenue = float(lmp[g.bus] @ d.dispatch[g.id])
            expense = 0.0
            if not (g.is_renewable or result.flags.tced):
                expense += (g.c_min + result.tax * g.e_min) * d.commitment[g.id].sum()
                expense += (g.c_startup + result.tax * g.e_startup) * d.startup[g.id].sum()
            for s, blk in enumerate(g.blocks):
                expense += ((blk.marginal_cost + result.tax * blk.marginal_emis)
                            * d.block_dispatch[g.id][s].sum())
            profit[g.id] += d.probability * (revenue - expense)

    return replace(result, days=tuple(priced_days),
                   congestion_surplus=surplus, profit=profit)


# ---------------------------------------------------------------------------
# Diagnostics


def day_residuals(sys_data: SystemData, sol: UcctDaySolution) -> dict[str, float]:
    """Worst-case physical residuals of a day solution, for verification.

    Returns max absolute violations: bus balance, dispatch identity
    (reported unit output vs commitment plus blocks), flow bounds, and the
    DC flow definition. All entries should sit at numerical noise.
    """
    day = next(d for d in sys_data.days if d.id == sol.day_id)
    T = sys_data.horizon

    balance = 0.0
    for b in sys_data.buses:
        net = np.zeros(T)
        for g in sys_data.generators:
            if g.bus == b.id:
                net += sol.dispatch[g.id]
        net += sol.shed[b.id] - sol.spill[b.id]
        for l in sys_data.lines:
            if l.to_bus == b.id:
                net += sol.flows[l.id]
            elif l.from_bus == b.id:
                net -= sol.flows[l.id]
        balance = max(balance, float(np.max(np.abs(net - np.asarray(day.demand[b.id])))))

    identity = 0.0
    for g in sys_data.generators:
        gmin = 0.0 if (g.is_renewable or sol.relaxed) else g.g_min
        expect = gmin * sol.commitment[g.id] + sol.block_dispatch[g.id].sum(axis=0)
        identity = max(identity, float(np.max(np.abs(sol.dispatch[g.id] - expect))))

    flow_bound = 0.0
    flow_def = 0.0
    for l in sys_data.lines:
        f = sol.flows[l.id]
        flow_bound = max(flow_bound, float(np.max(np.abs(f) - l.capacity, initial=0.0)))
        want = (sol.angles[l.from_bus] - sol.angles[l.to_bus]) / l.reactance
        flow_def = max(flow_def, float(np.max(np.abs(f - want))))

    return {"balance": balance, "dispatch_identity": identity,
            "flow_bound": flow_bound, "flow_definition": flow_def}
