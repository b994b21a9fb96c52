"""CSV emission for solves, tax searches, and frontier samples.

Every writer is deterministic: rows follow system declaration order and
day id order, floats are rendered at six significant digits with a "."
decimal point regardless of locale, and lines end with a bare newline.
Identical inputs therefore produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from typing import Iterable, Sequence

import numpy as np

from .search import ParetoSample, TaxSearchResult
from .system import SystemData
from .ucct import UcctResult

FLOAT_DIGITS = 6


def fmt(value) -> str:
    """Render one CSV cell: blank for None, %.6g for numbers."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, float)):
        return format(float(value), f".{FLOAT_DIGITS}g")
    return str(value)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Solve result files


def dispatch_rows(sys_data: SystemData, result: UcctResult):
    for d in result.days:
        for t in range(sys_data.horizon):
            for g in sys_data.generators:
                yield (d.day_id, t, g.id, int(d.commitment[g.id][t]),
                       d.dispatch[g.id][t])


def write_dispatch_csv(path, sys_data: SystemData, result: UcctResult) -> None:
    write_rows(path, ["day", "hour", "generator", "u", "g"],
               dispatch_rows(sys_data, result))


def prices_rows(sys_data: SystemData, result: UcctResult):
    for d in result.days:
        if d.lmp is None:
            raise ValueError(
                f"day {d.day_id} has no locational prices; extract them first")
        for t in range(sys_data.horizon):
            for b in sys_data.buses:
                yield (d.day_id, t, b.id, d.lmp[b.id][t])


def write_prices_csv(path, sys_data: SystemData, result: UcctResult) -> None:
    write_rows(path, ["day", "hour", "bus", "lmp"],
               prices_rows(sys_data, result))


def _lmp_stats(sys_data: SystemData, result: UcctResult):
    """Probability-weighted mean and population deviation per bus.

    Each day-hour carries weight probability / horizon, so the weights sum
    to one across the whole result.
    """
    T = sys_data.horizon
    stats = {}
    for b in sys_data.buses:
        mean = 0.0
        second = 0.0
        for d in result.days:
            w = d.probability / T
            for t in range(T):
                p = d.lmp[b.id][t]
                mean += w * p
                second += w * p * p
        stats[b.id] = (mean, math.sqrt(max(0.0, second - mean * mean)))
    return stats


def summary_rows(sys_data: SystemData, result: UcctResult):
    rows = [
        ("tax", result.tax),
        ("expected_cost", result.expected_cost),
        ("expected_emissions", result.expected_emissions),
        ("objective", result.objective),
        ("tax_revenue", result.tax_revenue),
    ]
    shed = sum(d.probability * float(np.sum(v)) for d in result.days
               for v in d.shed.values())
    spill = sum(d.probability * float(np.sum(v)) for d in result.days
                for v in d.spill.values())
    rows.append(("shed_energy", shed))
    rows.append(("spill_energy", spill))
    for fuel in sorted(result.fuel_energy):
        rows.append((f"energy_{fuel}", result.fuel_energy[fuel]))
    if result.congestion_surplus is not None:
        rows.append(("congestion_surplus", result.congestion_surplus))
    if result.profit is not None:
        by_fuel: dict[str, float] = {}
        for g in sys_data.generators:
            by_fuel[g.fuel] = by_fuel.get(g.fuel, 0.0) + result.profit[g.id]
        for fuel in sorted(by_fuel):
            rows.append((f"profit_{fuel}", by_fuel[fuel]))
        for b_id, (mean, std) in _lmp_stats(sys_data, result).items():
            rows.append((f"lmp_mean_{b_id}", mean))
            rows.append((f"lmp_std_{b_id}", std))
    return rows


def write_summary_csv(path, sys_data: SystemData, result: UcctResult) -> None:
    write_rows(path, ["metric", "value"], summary_rows(sys_data, result))


# ---------------------------------------------------------------------------
# Search and frontier files


def write_search_csv(path, search: TaxSearchResult) -> None:
    rows = [(n, it.tax, it.emissions, it.cost, it.feasible, it.attainment)
            for n, it in enumerate(search.iterations)]
    write_rows(path, ["iteration", "tax", "emissions", "cost", "feasible",
                      "attainment"], rows)


def write_pareto_csv(path, sample: ParetoSample) -> None:
    rows = [(sample.kind, p.parameter, p.cost, p.emissions, p.marginal_value,
             p.feasible) for p in sample.points]
    write_rows(path, ["kind", "parameter", "cost", "emissions",
                      "marginal_value", "feasible"], rows)


def read_summary_csv(path) -> dict[str, float]:
    """Parse a summary file back to metric -> value."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["metric", "value"]:
            raise ValueError(f"{path}: not a summary file")
        for row in reader:
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {row!r}")
            out[row[0]] = float(row[1])
    return out


def summary_table(paths: Sequence, labels: Sequence[str] | None = None) -> str:
    """Align one column per summary file, metrics as rows."""
    labels = list(labels) if labels else [str(p) for p in paths]
    summaries = [read_summary_csv(p) for p in paths]
    metrics: list[str] = []
    for s in summaries:
        for m in s:
            if m not in metrics:
                metrics.append(m)
    name_w = max(len("metric"), max((len(m) for m in metrics), default=0))
    col_ws = [max(len(lab), FLOAT_DIGITS + 6) for lab in labels]
    lines = ["  ".join(["metric".ljust(name_w)]
                       + [lab.rjust(w) for lab, w in zip(labels, col_ws)])]
    for m in metrics:
        cells = [fmt(s[m]) if m in s else "" for s in summaries]
        lines.append("  ".join([m.ljust(name_w)]
                               + [c.rjust(w) for c, w in zip(cells, col_ws)]))
    return "\n".join(lines)
