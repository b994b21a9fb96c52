"""Bounded-variable tableau simplex with primal and dual pivoting.

The engine keeps every row as an equality with one slack column, so variable
bounds never become rows. The full tableau T = B^-1 A (structurals, slacks,
and any phase-1 artificials) is maintained densely; the slack block of T is
B^-1 itself, which makes duals and refreshes cheap to compute.

Solve strategy, in order of preference:
  1. slack basis already primal feasible        -> primal phase 2
  2. slack basis dual feasible after bound flips -> dual simplex
  3. otherwise                                   -> artificial phase 1, then primal

The dual path is also what makes branch-and-bound cheap: fixing a binary
bound leaves reduced costs untouched, so a parent-optimal basis stays dual
feasible and a handful of dual pivots repair it.

Anti-cycling: Dantzig-style pricing by default, switching permanently (for
the running solve) to Bland's smallest-index rule once the configured number
of consecutive degenerate pivots is hit. A hard pivot cap turns runaway
solves into an explicit numerical-failure status instead of a hang.
"""

from __future__ import annotations

import numpy as np

from .problem import (EQ, GE, INFEASIBLE, LE, NUMERICAL_FAILURE, OPTIMAL,
                      UNBOUNDED, MilpProblem, SolverConfig)

BASIC, NB_LO, NB_UP, NB_FREE = 0, 1, 2, 3

_PIVOT_TOL = 1e-9       # entries smaller than this never pivot
_DUAL_TOL = 1e-7        # reduced-cost feasibility tolerance
_DEGEN_STEP = 1e-10     # step lengths below this count as degenerate
_REFRESH_EVERY = 512    # pivots between full recomputes of xB and d


class _Snapshot:
    __slots__ = ("tableau", "xb", "basis", "state", "lo", "up", "d", "ncols")

    def __init__(self, eng: "SimplexEngine"):
        self.tableau = eng.T.copy()
        self.xb = eng.xb.copy()
        self.basis = eng.basis.copy()
        self.state = eng.state.copy()
        self.lo = eng.lo.copy()
        self.up = eng.up.copy()
        self.d = eng.d.copy()
        self.ncols = eng.ncols


class SimplexEngine:
    """Solves one LP and supports warm re-solves after bound changes."""

    def __init__(self, problem: MilpProblem, cfg: SolverConfig):
        self.cfg = cfg
        self.n = problem.num_vars
        self.m = problem.num_rows
        self.ncols = self.n + self.m
        self.T = np.zeros((self.m, self.ncols))
        dense = problem.dense_rows()
        self.T[:, :self.n] = dense
        self.T[:, self.n:] = np.eye(self.m)
        self.A_full = self.T.copy()
        self.b = problem.rhs.astype(float).copy()

        lo = np.empty(self.ncols)
        up = np.empty(self.ncols)
        lo[:self.n] = problem.lo
        up[:self.n] = problem.up
        # Slack bounds encode the row sense: a.x + s = b.
        for i in range(self.m):
            sense = int(problem.senses[i])
            if sense == LE:
                lo[self.n + i], up[self.n + i] = 0.0, np.inf
            elif sense == GE:
                lo[self.n + i], up[self.n + i] = -np.inf, 0.0
            else:
                lo[self.n + i], up[self.n + i] = 0.0, 0.0
        self.lo, self.up = lo, up

        self.cost = np.zeros(self.ncols)
        self.cost[:self.n] = problem.c
        self.cc = self.cost          # active (phase-dependent) cost vector
        self.basis = np.arange(self.n, self.ncols, dtype=np.int64)
        self.state = np.full(self.ncols, NB_LO, dtype=np.int8)
        self.state[self.basis] = BASIC
        self.xb = np.zeros(self.m)
        self.d = np.zeros(self.ncols)
        self.iterations = 0
        self._bland = False
        self._degen_run = 0
        self._n_art = 0

    # -- state helpers ------------------------------------------------------

    def _default_nonbasic_states(self) -> None:
        for j in range(self.n):
            if self.state[j] == BASIC:
                continue
            if np.isfinite(self.lo[j]):
                self.state[j] = NB_LO
            elif np.isfinite(self.up[j]):
                self.state[j] = NB_UP
            else:
                self.state[j] = NB_FREE

    def _nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.state == NB_LO, self.lo,
                        np.where(self.state == NB_UP, self.up, 0.0))
        vals[self.state == BASIC] = 0.0
        return vals

    def _recompute_xb(self) -> None:
        vals = self._nonbasic_values()
        self.xb = self.T[:, self.n:self.n + self.m] @ self.b - self.T @ vals

    def _recompute_d(self) -> None:
        self.d = self.cc - self.cc[self.basis] @ self.T

    def x_full(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basis] = self.xb
        return x

    def x_struct(self) -> np.ndarray:
        return self.x_full()[:self.n]

    def objective(self) -> float:
        return float(self.cost @ self.x_full())

    def duals(self) -> np.ndarray:
        """Row duals with the d(objective)/d(rhs) sign convention."""
        d = self.cost - self.cost[self.basis] @ self.T
        return -d[self.n:self.n + self.m]

    def reduced_costs(self) -> np.ndarray:
        d = self.cost - self.cost[self.basis] @ self.T
        return d[:self.n]

    def snapshot(self) -> _Snapshot:
        return _Snapshot(self)

    def restore(self, snap: _Snapshot) -> None:
        self.T = snap.tableau.copy()
        self.xb = snap.xb.copy()
        self.basis = snap.basis.copy()
        self.state = snap.state.copy()
        self.lo = snap.lo.copy()
        self.up = snap.up.copy()
        self.d = snap.d.copy()
        self.ncols = snap.ncols

    def set_bounds(self, j: int, lo: float, up: float) -> None:
        """Change one column's bounds, keeping basic values consistent."""
        old = self.lo[j] if self.state[j] == NB_LO else (
            self.up[j] if self.state[j] == NB_UP else None)
        self.lo[j], self.up[j] = lo, up
        if self.state[j] == BASIC:
            return
        if self.state[j] == NB_LO:
            new = lo if np.isfinite(lo) else up
            self.state[j] = NB_LO if np.isfinite(lo) else NB_UP
        elif self.state[j] == NB_UP:
            new = up if np.isfinite(up) else lo
            self.state[j] = NB_UP if np.isfinite(up) else NB_LO
        else:
            return
        if old is not None and new != old:
            self.xb -= self.T[:, j] * (new - old)

    # -- feasibility checks --------------------------------------------------

    def _primal_violation(self) -> float:
        blo = self.lo[self.basis]
        bup = self.up[self.basis]
        below = np.maximum(blo - self.xb, 0.0)
        above = np.maximum(self.xb - bup, 0.0)
        if self.m == 0:
            return 0.0
        return float(np.maximum(below, above).max())

    def _movable(self) -> np.ndarray:
        """Mask of nonbasic columns that can change value (span > 0)."""
        span = self.up - self.lo
        return (self.state != BASIC) & (span > 0)

    def _dual_infeasibility(self) -> float:
        movable = self._movable()
        viol = np.zeros(self.ncols)
        at_lo = movable & (self.state == NB_LO)
        at_up = movable & (self.state == NB_UP)
        free = movable & (self.state == NB_FREE)
        viol[at_lo] = np.maximum(-self.d[at_lo], 0.0)
        viol[at_up] = np.maximum(self.d[at_up], 0.0)
        viol[free] = np.abs(self.d[free])
        return float(viol.max()) if self.ncols else 0.0

    # -- pivoting ------------------------------------------------------------

    def _pivot(self, r: int, j: int, new_xb_r: float, leave_state: int) -> None:
        leaving = self.basis[r]
        col = self.T[:, j].copy()
        piv = col[r]
        self.T[r, :] /= piv
        row = self.T[r, :]
        mask = np.ones(self.m, dtype=bool)
        mask[r] = False
        self.T[mask, :] -= np.outer(col[mask], row)
        self.d -= self.d[j] * row
        self.basis[r] = j
        self.state[j] = BASIC
        self.state[leaving] = leave_state
        self.xb[r] = new_xb_r
        self.iterations += 1
        if self.iterations % _REFRESH_EVERY == 0:
            self._recompute_xb()
            self._recompute_d()

    def _note_step(self, t: float) -> None:
        if abs(t) <= _DEGEN_STEP:
            self._degen_run += 1
            if self._degen_run >= self.cfg.degenerate_iteration_threshold:
                self._bland = True
        else:
            self._degen_run = 0

    # -- primal simplex -------------------------------------------------------

    def _primal_entering(self) -> int | None:
        d = self.d
        movable = self._movable()
        elig = movable & (((self.state == NB_LO) & (d < -_DUAL_TOL))
                          | ((self.state == NB_UP) & (d > _DUAL_TOL))
                          | ((self.state == NB_FREE) & (np.abs(d) > _DUAL_TOL)))
        if not elig.any():
            return None
        idx = np.flatnonzero(elig)
        if self._bland:
            return int(idx[0])
        return int(idx[np.argmax(np.abs(d[idx]))])

    def _primal_step(self, j: int) -> str:
        sigma = 1.0
        if self.state[j] == NB_UP or (self.state[j] == NB_FREE and self.d[j] > 0):
            sigma = -1.0
        col = self.T[:, j]
        move = sigma * col
        blo = self.lo[self.basis]
        bup = self.up[self.basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_dn = np.where(move > _PIVOT_TOL, (self.xb - blo) / move, np.inf)
            t_up = np.where(move < -_PIVOT_TOL, (bup - self.xb) / -move, np.inf)
        ratios = np.minimum(np.maximum(t_dn, 0.0), np.maximum(t_up, 0.0))
        t_basic = float(ratios.min()) if self.m else np.inf
        span = self.up[j] - self.lo[j]

        if span <= t_basic and np.isfinite(span):
            # Bound flip: the entering variable crosses to its other bound.
            self.xb -= move * span
            self.state[j] = NB_UP if sigma > 0 else NB_LO
            self.iterations += 1
            self._note_step(span)
            return "step"
        if not np.isfinite(t_basic):
            return "unbounded"

        cand = np.flatnonzero(np.abs(ratios - t_basic) <= 1e-9 * (1.0 + t_basic))
        if self._bland:
            r = int(cand[np.argmin(self.basis[cand])])
        else:
            r = int(cand[np.argmax(np.abs(col[cand]))])
        if abs(col[r]) < _PIVOT_TOL:
            return "numerical"
        t = max(ratios[r], 0.0)
        hits_lower = move[r] > 0
        new_val = (self.lo[j] if self.state[j] == NB_LO
                   else self.up[j] if self.state[j] == NB_UP else 0.0) + sigma * t
        self.xb -= move * t
        self._pivot(r, j, new_val, NB_LO if hits_lower else NB_UP)
        self._note_step(t)
        return "step"

    def _run_primal(self, max_iters: int) -> str:
        while True:
            if self.iterations > max_iters:
                return NUMERICAL_FAILURE
            j = self._primal_entering()
            if j is None:
                return OPTIMAL
            res = self._primal_step(j)
            if res == "unbounded":
                return UNBOUNDED
            if res == "numerical":
                return NUMERICAL_FAILURE

    # -- dual simplex ----------------------------------------------------------

    def _dual_leaving(self) -> int | None:
        tol = self.cfg.feasibility_tolerance
        blo = self.lo[self.basis]
        bup = self.up[self.basis]
        below = blo - self.xb
        above = self.xb - bup
        viol = np.maximum(below, above)
        if self.m == 0 or viol.max() <= tol:
            return None
        if self._bland:
            rows = np.flatnonzero(viol > tol)
            return int(rows[np.argmin(self.basis[rows])])
        return int(np.argmax(viol))

    def _dual_step(self, r: int) -> str:
        blo = self.lo[self.basis[r]]
        bup = self.up[self.basis[r]]
        to_lower = self.xb[r] < blo
        beta = blo if to_lower else bup
        w = self.T[r, :]
        movable = self._movable()
        if to_lower:
            elig = movable & (((self.state == NB_LO) & (w < -_PIVOT_TOL))
                              | ((self.state == NB_UP) & (w > _PIVOT_TOL))
                              | ((self.state == NB_FREE) & (np.abs(w) > _PIVOT_TOL)))
        else:
            elig = movable & (((self.state == NB_LO) & (w > _PIVOT_TOL))
                              | ((self.state == NB_UP) & (w < -_PIVOT_TOL))
                              | ((self.state == NB_FREE) & (np.abs(w) > _PIVOT_TOL)))
        if not elig.any():
            return "infeasible"
        idx = np.flatnonzero(elig)
        ratios = np.abs(self.d[idx] / w[idx])
        if self._bland:
            best = ratios.min()
            near = idx[ratios <= best + _DUAL_TOL]
            j = int(near[0])
        else:
            best = ratios.min()
            near = idx[ratios <= best + _DUAL_TOL]
            j = int(near[np.argmax(np.abs(w[near]))])
        delta = (self.xb[r] - beta) / w[j]
        val_j = (self.lo[j] if self.state[j] == NB_LO
                 else self.up[j] if self.state[j] == NB_UP else 0.0)
        self.xb -= self.T[:, j] * delta
        self._pivot(r, j, val_j + delta, NB_LO if to_lower else NB_UP)
        self._note_step(delta)
        return "step"

    def _run_dual(self, max_iters: int) -> str:
        while True:
            if self.iterations > max_iters:
                return NUMERICAL_FAILURE
            r = self._dual_leaving()
            if r is None:
                return OPTIMAL
            res = self._dual_step(r)
            if res == "infeasible":
                return INFEASIBLE

    # Incremental updates of d and xb drift over long runs. Optimality claims
    # are only accepted after a fresh recompute confirms them; otherwise the
    # loop resumes from the recomputed state.

    def _certified_primal(self, max_iters: int) -> str:
        for _ in range(4):
            status = self._run_primal(max_iters)
            if status != OPTIMAL:
                return status
            self._recompute_d()
            self._recompute_xb()
            if self._dual_infeasibility() <= 10 * _DUAL_TOL:
                return OPTIMAL
        return NUMERICAL_FAILURE

    def _certified_dual(self, max_iters: int) -> str:
        for _ in range(4):
            status = self._run_dual(max_iters)
            if status != OPTIMAL:
                return status
            self._recompute_xb()
            self._recompute_d()
            if self._primal_violation() <= self.cfg.feasibility_tolerance:
                return OPTIMAL
        return NUMERICAL_FAILURE

    # -- phase 1 with artificials ----------------------------------------------

    def _add_artificials(self) -> None:
        tol = self.cfg.feasibility_tolerance
        viol_rows = []
        for i in range(self.m):
            v = self.xb[i]
            if v < self.lo[self.basis[i]] - tol or v > self.up[self.basis[i]] + tol:
                viol_rows.append(i)
        if not viol_rows:
            return
        k = len(viol_rows)
        grow = np.zeros((self.m, k))
        art_lo = np.empty(k)
        art_up = np.empty(k)
        art_cost = np.empty(k)
        for idx, i in enumerate(viol_rows):
            sl = self.basis[i]
            target = (self.lo[sl] if self.xb[i] < self.lo[sl] else self.up[sl])
            resid = self.xb[i] - target
            grow[i, idx] = 1.0
            if resid >= 0:
                art_lo[idx], art_up[idx], art_cost[idx] = 0.0, np.inf, 1.0
            else:
                art_lo[idx], art_up[idx], art_cost[idx] = -np.inf, 0.0, -1.0
            # Slack leaves the basis at its nearest bound; artificial takes over.
            self.state[sl] = NB_LO if target == self.lo[sl] else NB_UP
            self.basis[i] = self.ncols + idx
            self.xb[i] = resid
        self.T = np.hstack([self.T, grow])
        self.A_full = np.hstack([self.A_full, grow])
        self.lo = np.concatenate([self.lo, art_lo])
        self.up = np.concatenate([self.up, art_up])
        self.cost = np.concatenate([self.cost, np.zeros(k)])
        phase1 = np.zeros(self.ncols + k)
        phase1[self.ncols:] = art_cost
        self.state = np.concatenate([self.state, np.full(k, NB_LO, dtype=np.int8)])
        self.state[self.ncols:self.ncols + k] = BASIC
        self.ncols += k
        self._n_art = k
        self.cc = phase1

    def _retire_artificials(self) -> None:
        for j in range(self.ncols - self._n_art, self.ncols):
            self.lo[j] = 0.0
            self.up[j] = 0.0
            if self.state[j] != BASIC:
                self.state[j] = NB_LO
        self.cc = self.cost

    # -- top-level solve ---------------------------------------------------------

    def _max_iters(self) -> int:
        return 5000 + 60 * (self.m + self.n)

    def _try_dual_start(self) -> bool:
        """Flip nonbasic columns so the slack basis is dual feasible."""
        d = self.cc.copy()
        d[self.basis] = 0.0
        for j in range(self.n):
            if self.state[j] == BASIC:
                continue
            span_fixed = self.lo[j] == self.up[j]
            if span_fixed:
                continue
            if d[j] < -_DUAL_TOL:
                if not np.isfinite(self.up[j]):
                    return False
                self.state[j] = NB_UP
            elif d[j] > _DUAL_TOL:
                if not np.isfinite(self.lo[j]):
                    return False
                self.state[j] = NB_LO
            elif self.state[j] == NB_FREE and abs(d[j]) > _DUAL_TOL:
                return False
        return True

    def solve_from_scratch(self) -> str:
        """Cold solve from the slack basis."""
        self.cc = self.cost
        self._bland = False
        self._degen_run = 0
        self._default_nonbasic_states()
        self._recompute_xb()
        self._recompute_d()
        max_iters = self.iterations + self._max_iters()
        tol = self.cfg.feasibility_tolerance

        if self._primal_violation() <= tol:
            status = self._certified_primal(max_iters)
        elif self._try_dual_start():
            self._recompute_xb()
            self._recompute_d()
            status = self._certified_dual(max_iters)
            if status == OPTIMAL:
                status = self._certified_primal(max_iters)
        else:
            self._default_nonbasic_states()
            self._recompute_xb()
            self._add_artificials()
            self._recompute_d()
            status = self._certified_primal(max_iters)
            if status == OPTIMAL:
                infeas = float(np.abs(self.cc @ self.x_full()))
                self._retire_artificials()
                if infeas > max(1e-9, tol * (1.0 + float(np.abs(self.b).max(initial=0.0)))):
                    return INFEASIBLE
                self._recompute_xb()
                self._recompute_d()
                status = self._certified_primal(max_iters)
        return self._verify(status)

    def resolve_after_bound_change(self) -> str:
        """Warm re-solve: the basis is dual feasible, bounds moved."""
        self.cc = self.cost
        self._bland = False
        self._degen_run = 0
        max_iters = self.iterations + self._max_iters()
        status = self._certified_dual(max_iters)
        if status == OPTIMAL:
            status = self._certified_primal(max_iters)
        return self._verify(status)

    def _verify(self, status: str) -> str:
        if status != OPTIMAL:
            return status
        tol = 20 * self.cfg.feasibility_tolerance
        x = self.x_full()
        scale = 1.0 + float(np.abs(self.b).max(initial=0.0))
        row_resid = float(np.abs(self.A_full @ x - self.b).max(initial=0.0))
        bound_resid = float(np.maximum(np.maximum(self.lo - x, x - self.up), 0.0)
                            .max(initial=0.0))
        if row_resid > tol * scale or bound_resid > tol * scale:
            return NUMERICAL_FAILURE
        return OPTIMAL
