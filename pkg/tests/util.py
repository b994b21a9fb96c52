"""Shared helpers for building solver problems in tests."""

from __future__ import annotations

import numpy as np

from taxgrid.milp import ProblemBuilder


def build_problem(c, a_rows, senses, rhs, lo, up, binary=()):
    """Assemble a problem from raw arrays; `binary` lists binary column indices."""
    n = len(c)
    binary = set(binary)
    pb = ProblemBuilder()
    for j in range(n):
        pb.add_var(f"x{j}", lo=lo[j], up=up[j], cost=c[j], binary=j in binary)
    for i in range(len(rhs)):
        coeffs = [(j, a_rows[i][j]) for j in range(n) if a_rows[i][j] != 0]
        pb.add_row(f"r{i}", coeffs, int(senses[i]), float(rhs[i]))
    return pb.build()


def random_lp(rng: np.random.Generator, n_max=8, m_max=8, allow_free=True):
    """Random small LP in raw arrays understood by both solver and oracle."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    c = rng.integers(-5, 6, size=n).astype(float)
    a = rng.integers(-4, 5, size=(m, n)).astype(float)
    senses = rng.choice([-1, 0, 1], size=m, p=[0.5, 0.2, 0.3])
    rhs = rng.integers(-10, 11, size=m).astype(float)
    lo = np.zeros(n)
    up = np.full(n, np.inf)
    for j in range(n):
        kind = rng.random()
        if kind < 0.25:
            up[j] = float(rng.integers(1, 8))
        elif kind < 0.45:
            lo[j] = float(rng.integers(-4, 1))
            up[j] = lo[j] + float(rng.integers(1, 9))
        elif allow_free and kind < 0.55:
            lo[j] = -np.inf
    return c, a, senses, rhs, lo, up
