"""Branch and bound over the binary columns of a MilpProblem.

Node selection is best-bound with depth-first plunging: after branching, the
child nearest the fractional LP value is solved immediately by a warm dual
re-solve of the live tableau; the far child is pushed on a heap keyed by its
parent bound. When a dive ends (prune, integral, infeasible), the best-bound
node is popped and rebuilt from the root-optimal snapshot.

Branching picks the most fractional free binary, ties broken by lowest
column index. Termination: (incumbent - bound) / max(1, |incumbent|) <=
relative_mip_gap, or an empty frontier. Node and wall-clock limits end the
search with status gap_limit and whatever incumbent/bound is in hand.
"""

from __future__ import annotations

import dataclasses
import heapq
import time

import numpy as np

from .problem import (GAP_LIMIT, INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL,
                      UNBOUNDED, MilpProblem, MilpSolution, SolverConfig)
from .simplex import SimplexEngine


def solve_lp(problem: MilpProblem, cfg: SolverConfig | None = None) -> MilpSolution:
    """Solve the problem as a pure LP (binaries relaxed to their bounds)."""
    cfg = cfg or SolverConfig()
    problem.validate()
    eng = SimplexEngine(problem, cfg)
    status = eng.solve_from_scratch()
    if status != OPTIMAL:
        return MilpSolution(status=status, iterations=eng.iterations)
    obj = eng.objective()
    return MilpSolution(status=OPTIMAL, objective=obj, x=eng.x_struct(),
                        duals=eng.duals(), reduced_costs=eng.reduced_costs(),
                        best_bound=obj, relative_gap=0.0, node_count=0,
                        iterations=eng.iterations)


def _free_binaries(problem: MilpProblem) -> np.ndarray:
    return np.flatnonzero(problem.binary & (problem.lo < problem.up))


def _clean_x(problem: MilpProblem, x: np.ndarray) -> np.ndarray:
    out = x.copy()
    mask = problem.binary
    out[mask] = np.round(out[mask])
    return out


def solve_milp(problem: MilpProblem, cfg: SolverConfig | None = None) -> MilpSolution:
    cfg = cfg or SolverConfig()
    problem.validate()
    free_bin = _free_binaries(problem)
    if free_bin.size == 0:
        # Pure LP (possibly with fixed binaries): duals are meaningful.
        return dataclasses.replace(solve_lp(problem, cfg), node_count=1)

    t0 = time.monotonic()
    int_tol = cfg.integrality_tolerance
    eng = SimplexEngine(problem, cfg)
    status = eng.solve_from_scratch()
    node_count = 1
    iterations = eng.iterations
    if status in (INFEASIBLE, UNBOUNDED, NUMERICAL_FAILURE):
        return MilpSolution(status=status, node_count=node_count,
                            iterations=iterations)
    root_snap = eng.snapshot()
    root_obj = eng.objective()

    incumbent_obj = np.inf
    incumbent_x = None
    history: list[tuple[int, float]] = []
    heap: list[tuple[float, int, dict[int, float]]] = []
    seq = 0
    pruned_bound = np.inf   # tightest bound among cutoff-pruned subtrees
    limit_hit = False

    cur_bounds: dict[int, float] = {}
    cur_status = status
    cur_obj = root_obj
    diving = True

    def cutoff() -> float:
        if not np.isfinite(incumbent_obj):
            return np.inf
        return incumbent_obj - cfg.relative_mip_gap * max(1.0, abs(incumbent_obj))

    def open_bound() -> float:
        return heap[0][0] if heap else np.inf

    while True:
        if cfg.max_nodes is not None and node_count >= cfg.max_nodes and (heap or diving):
            limit_hit = True
        if cfg.max_seconds is not None and time.monotonic() - t0 > cfg.max_seconds:
            limit_hit = True
        if limit_hit:
            break

        if diving:
            backtrack = False
            if cur_status == INFEASIBLE:
                backtrack = True
            elif cur_status == NUMERICAL_FAILURE:
                # Cold restart of this node before giving up on the solve.
                lo = problem.lo.copy()
                up = problem.up.copy()
                for col, v in cur_bounds.items():
                    lo[col] = up[col] = v
                eng = SimplexEngine(problem.with_bounds(lo, up), cfg)
                cur_status = eng.solve_from_scratch()
                iterations += eng.iterations
                if cur_status == NUMERICAL_FAILURE:
                    return MilpSolution(status=NUMERICAL_FAILURE,
                                        node_count=node_count,
                                        iterations=iterations)
                continue
            elif cur_status == UNBOUNDED:
                return MilpSolution(status=UNBOUNDED, node_count=node_count,
                                    iterations=iterations)
            else:
                obj = eng.objective()
                cur_obj = obj
                if obj >= cutoff():
                    pruned_bound = min(pruned_bound, obj)
                    backtrack = True
                else:
                    x = eng.x_struct()
                    frac = np.abs(x[free_bin] - np.round(x[free_bin]))
                    if float(frac.max()) <= int_tol:
                        incumbent_obj = obj
                        incumbent_x = _clean_x(problem, x)
                        history.append((node_count, obj))
                        backtrack = True
                    else:
                        if cfg.branching == "first_fractional":
                            pick = int(np.flatnonzero(frac > int_tol)[0])
                        else:
                            pick = int(np.argmax(frac))
                        j = int(free_bin[pick])
                        near = 1.0 if x[j] >= 0.5 else 0.0
                        far_bounds = dict(cur_bounds)
                        far_bounds[j] = 1.0 - near
                        heapq.heappush(heap, (obj, seq, far_bounds))
                        seq += 1
                        cur_bounds[j] = near
                        eng.set_bounds(j, near, near)
                        base_iters = eng.iterations
                        cur_status = eng.resolve_after_bound_change()
                        iterations += eng.iterations - base_iters
                        node_count += 1
                        continue
            if backtrack:
                diving = False
                continue

        # Pick the best-bound open node, if the gap is still open.
        gap_scale = max(1.0, abs(incumbent_obj)) if np.isfinite(incumbent_obj) else 1.0
        if (np.isfinite(incumbent_obj)
                and incumbent_obj - open_bound() <= cfg.relative_mip_gap * gap_scale):
            break
        if not heap:
            break
        bound, _, bounds = heapq.heappop(heap)
        if bound >= cutoff():
            pruned_bound = min(pruned_bound, bound)
            continue
        eng.restore(root_snap)
        for col, v in bounds.items():
            eng.set_bounds(col, v, v)
        base_iters = eng.iterations
        cur_status = eng.resolve_after_bound_change()
        iterations += eng.iterations - base_iters
        node_count += 1
        cur_bounds = bounds
        diving = True

    best_bound = min(pruned_bound, open_bound(),
                     incumbent_obj if np.isfinite(incumbent_obj) else np.inf)
    if limit_hit and diving and cur_status == OPTIMAL:
        best_bound = min(best_bound, cur_obj)
    if incumbent_x is None:
        if limit_hit:
            return MilpSolution(status=GAP_LIMIT, best_bound=None if not np.isfinite(best_bound) else float(best_bound),
                                relative_gap=np.inf, node_count=node_count,
                                iterations=iterations)
        return MilpSolution(status=INFEASIBLE, node_count=node_count,
                            iterations=iterations)
    gap = (incumbent_obj - best_bound) / max(1.0, abs(incumbent_obj))
    status = GAP_LIMIT if (limit_hit and gap > cfg.relative_mip_gap) else OPTIMAL
    return MilpSolution(status=status, objective=float(incumbent_obj),
                        x=incumbent_x, best_bound=float(best_bound),
                        relative_gap=float(max(gap, 0.0)), node_count=node_count,
                        iterations=iterations,
                        incumbent_history=tuple(history))


def fix_binaries_and_dualize(problem: MilpProblem,
                             solution: MilpSolution | np.ndarray,
                             cfg: SolverConfig | None = None
                             ) -> tuple[MilpProblem, MilpSolution]:
    """Freeze the binaries at their rounded solved values and re-solve for duals."""
    x = solution.x if isinstance(solution, MilpSolution) else solution
    if x is None:
        raise ValueError("cannot fix binaries without a primal solution")
    x = np.asarray(x, dtype=float)
    if x.shape != problem.c.shape:
        raise ValueError("solution vector length does not match the problem")
    lo = problem.lo.copy()
    up = problem.up.copy()
    for j in np.flatnonzero(problem.binary):
        v = float(np.round(x[j]))
        lo[j] = up[j] = v
    fixed = problem.with_bounds(lo, up)
    return fixed, solve_lp(fixed, cfg)
