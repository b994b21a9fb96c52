"""Mixed-binary linear program container and solver configuration.

Problems are built incrementally through ProblemBuilder (the unit-commitment
builder emits thousands of rows) and frozen into numpy arrays for the
simplex engine. Row senses are encoded as integers: -1 (<=), 0 (=), +1 (>=).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LE, EQ, GE = -1, 0, 1
_SENSE_TEXT = {LE: "<=", EQ: "=", GE: ">="}

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap_limit"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverConfig:
    feasibility_tolerance: float = 1e-7
    relative_mip_gap: float = 1e-3
    integrality_tolerance: float = 1e-6
    # Consecutive degenerate pivots tolerated before switching to Bland's rule.
    degenerate_iteration_threshold: int = 60
    branching: str = "most_fractional"  # or "first_fractional"
    max_nodes: int | None = None
    max_seconds: float | None = None


@dataclass(frozen=True)
class MilpProblem:
    """Immutable mixed-binary LP: min c.x s.t. rows, lo <= x <= up."""

    c: np.ndarray
    lo: np.ndarray
    up: np.ndarray
    binary: np.ndarray           # bool mask; binary columns must have bounds within [0, 1]
    a_indptr: np.ndarray         # CSR layout of the row coefficients
    a_indices: np.ndarray
    a_data: np.ndarray
    senses: np.ndarray
    rhs: np.ndarray
    col_labels: tuple[str, ...]
    row_labels: tuple[str, ...]

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rhs.shape[0]

    def row_index(self, label: str) -> int:
        try:
            return self._row_lookup[label]
        except AttributeError:
            object.__setattr__(self, "_row_lookup",
                               {lab: i for i, lab in enumerate(self.row_labels)})
            return self._row_lookup[label]

    def col_index(self, label: str) -> int:
        try:
            return self._col_lookup[label]
        except AttributeError:
            object.__setattr__(self, "_col_lookup",
                               {lab: j for j, lab in enumerate(self.col_labels)})
            return self._col_lookup[label]

    def dense_rows(self) -> np.ndarray:
        a = np.zeros((self.num_rows, self.num_vars))
        for i in range(self.num_rows):
            s, e = self.a_indptr[i], self.a_indptr[i + 1]
            a[i, self.a_indices[s:e]] = self.a_data[s:e]
        return a

    def row_activity(self, i: int, x: np.ndarray) -> float:
        s, e = self.a_indptr[i], self.a_indptr[i + 1]
        return float(self.a_data[s:e] @ x[self.a_indices[s:e]])

    def with_bounds(self, lo: np.ndarray, up: np.ndarray) -> "MilpProblem":
        return MilpProblem(self.c, lo, up, self.binary, self.a_indptr,
                           self.a_indices, self.a_data, self.senses, self.rhs,
                           self.col_labels, self.row_labels)

    def validate(self) -> None:
        if not (len(self.lo) == len(self.up) == len(self.binary) == self.num_vars):
            raise ValueError("column array lengths disagree")
        if np.any(self.lo > self.up):
            j = int(np.argmax(self.lo > self.up))
            raise ValueError(f"column {self.col_labels[j]}: lower bound exceeds upper")
        bad = self.binary & ((self.lo < -1e-12) | (self.up > 1 + 1e-12))
        if np.any(bad):
            j = int(np.argmax(bad))
            raise ValueError(f"binary column {self.col_labels[j]}: bounds outside [0, 1]")
        if len(set(self.col_labels)) != self.num_vars:
            raise ValueError("column labels are not unique")
        if len(set(self.row_labels)) != self.num_rows:
            raise ValueError("row labels are not unique")


@dataclass
class MilpSolution:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    # Row duals and column reduced costs, present only when no binary was
    # free during the solve (pure LP or all binaries fixed). Sign convention:
    # dual = d(objective)/d(rhs).
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    best_bound: float | None = None
    relative_gap: float = 0.0
    node_count: int = 0
    iterations: int = 0
    incumbent_history: tuple[tuple[int, float], ...] = ()

    def dual(self, problem: MilpProblem, row_label: str) -> float:
        if self.duals is None:
            raise ValueError("solution carries no duals (a binary was free)")
        return float(self.duals[problem.row_index(row_label)])


class ProblemBuilder:
    """Accumulates columns and rows, then freezes into a MilpProblem."""

    def __init__(self):
        self._c: list[float] = []
        self._lo: list[float] = []
        self._up: list[float] = []
        self._binary: list[bool] = []
        self._col_labels: list[str] = []
        self._row_labels: list[str] = []
        self._senses: list[int] = []
        self._rhs: list[float] = []
        self._indptr: list[int] = [0]
        self._indices: list[int] = []
        self._data: list[float] = []

    def add_var(self, label: str, lo: float = 0.0, up: float = np.inf,
                cost: float = 0.0, binary: bool = False) -> int:
        self._col_labels.append(label)
        self._lo.append(lo)
        self._up.append(up)
        self._c.append(cost)
        self._binary.append(binary)
        return len(self._col_labels) - 1

    def add_row(self, label: str, coeffs: Iterable[tuple[int, float]],
                sense: int, rhs: float) -> int:
        combined: dict[int, float] = {}
        for j, a in coeffs:
            if a != 0.0:
                combined[j] = combined.get(j, 0.0) + a
        for j in combined:
            self._indices.append(j)
            self._data.append(combined[j])
        self._indptr.append(len(self._indices))
        self._row_labels.append(label)
        self._senses.append(sense)
        self._rhs.append(rhs)
        return len(self._row_labels) - 1

    @property
    def num_vars(self) -> int:
        return len(self._col_labels)

    @property
    def num_rows(self) -> int:
        return len(self._row_labels)

    def build(self) -> MilpProblem:
        p = MilpProblem(
            c=np.asarray(self._c, dtype=float),
            lo=np.asarray(self._lo, dtype=float),
            up=np.asarray(self._up, dtype=float),
            binary=np.asarray(self._binary, dtype=bool),
            a_indptr=np.asarray(self._indptr, dtype=np.int64),
            a_indices=np.asarray(self._indices, dtype=np.int64),
            a_data=np.asarray(self._data, dtype=float),
            senses=np.asarray(self._senses, dtype=np.int64),
            rhs=np.asarray(self._rhs, dtype=float),
            col_labels=tuple(self._col_labels),
            row_labels=tuple(self._row_labels),
        )
        p.validate()
        return p


def _term(coef: float, label: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    body = label if mag == 1.0 else f"{mag:g} {label}"
    return f"{sign} {body}" if not first else f"{sign}{body}"


def write_lp_text(p: MilpProblem) -> str:
    """Human-readable listing of the problem, for debugging (not a parser target)."""
    out = []
    terms = [_term(float(p.c[j]), p.col_labels[j], not out and j == 0)
             for j in range(p.num_vars) if p.c[j] != 0.0]
    out.append("min: " + (" ".join(terms) if terms else "0"))
    for i in range(p.num_rows):
        s, e = p.a_indptr[i], p.a_indptr[i + 1]
        parts = []
        for k in range(s, e):
            parts.append(_term(float(p.a_data[k]), p.col_labels[p.a_indices[k]],
                               not parts))
        body = " ".join(parts) if parts else "0"
        out.append(f"{p.row_labels[i]}: {body} {_SENSE_TEXT[int(p.senses[i])]} {p.rhs[i]:g}")
    for j in range(p.num_vars):
        tag = " binary" if p.binary[j] else ""
        out.append(f"bound: {p.lo[j]:g} <= {p.col_labels[j]} <= {p.up[j]:g}{tag}")
    return "\n".join(out) + "\n"
