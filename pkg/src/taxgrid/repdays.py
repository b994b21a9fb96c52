"""Representative day selection from a year of hourly records.

A year of hourly system load and wind availability collapses to a handful
of weighted days. Days are clustered on standardized daily shape vectors
(hourly load and hourly aggregate available wind, each dimension z-scored
over the year) with Ward's minimum-variance agglomeration, every cluster
is represented by its medoid so the chosen profile is a day that actually
occurred (averaging would smooth away the ramps that stress commitment),
and the cluster's share of the year becomes the day's probability.

Cluster weights are carried as exact fractions of the day count; they only
become floats when a RepresentativeDay is materialized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .system import ParseError, RepresentativeDay

# Upward/downward flexibility demanded per MW of available wind when a
# clustered day is materialized; stands in for a forecast-error budget.
WIND_FLEX_SHARE = 0.10


@dataclass(frozen=True)
class DailyProfile:
    """One calendar day of hourly observations.

    availability maps a wind unit id to its hourly output fraction in
    [0, 1]; load is system-wide MW.
    """

    date: str
    load: tuple[float, ...]
    availability: Mapping[str, tuple[float, ...]]


@dataclass(frozen=True)
class YearData:
    profiles: tuple[DailyProfile, ...]
    participation: Mapping[str, float]   # bus id -> share of system load
    wind_capacity: Mapping[str, float]   # wind unit id -> installed MW

    @property
    def horizon(self) -> int:
        return len(self.profiles[0].load)


@dataclass(frozen=True)
class DayCluster:
    medoid: DailyProfile
    member_dates: tuple[str, ...]   # sorted ascending
    weight: Fraction                # member count over year length

    @property
    def size(self) -> int:
        return len(self.member_dates)


# ---------------------------------------------------------------------------
# Features and clustering


def feature_matrix(profiles: Sequence[DailyProfile],
                   wind_capacity: Mapping[str, float] | None = None) -> np.ndarray:
    """Daily shape vectors: hourly load then hourly aggregate wind, z-scored.

    Aggregate wind is capacity-weighted when capacities are given, a plain
    sum of fractions otherwise. Constant dimensions standardize to zero.
    """
    T = len(profiles[0].load)
    unit_ids = sorted(profiles[0].availability)
    rows = []
    for p in profiles:
        if len(p.load) != T or sorted(p.availability) != unit_ids:
            raise ValueError(f"day {p.date}: inconsistent feature dimensions")
        load = np.asarray(p.load, dtype=float)
        if unit_ids:
            agg = np.zeros(T)
            for uid in unit_ids:
                w = 1.0 if wind_capacity is None else float(wind_capacity[uid])
                agg += w * np.asarray(p.availability[uid], dtype=float)
            rows.append(np.concatenate([load, agg]))
        else:
            rows.append(load)
    x = np.vstack(rows)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    np.divide(x - mu, sd, out=out, where=sd > 0.0)
    return out


def _ward_partition(x: np.ndarray, k: int) -> list[list[int]]:
    """Agglomerate rows of x down to k clusters; returns member index lists.

    Classic Lance-Williams recurrence on Ward merge costs. Ties pick the
    lexicographically smallest surviving pair, which is a date order when
    the rows arrive date-sorted.
    """
    n = x.shape[0]
    diff = x[:, None, :] - x[None, :, :]
    cost = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(cost, np.inf)
    size = np.ones(n)
    members: list[list[int]] = [[i] for i in range(n)]
    alive = np.ones(n, dtype=bool)
    for _ in range(n - k):
        flat = int(np.argmin(cost))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        si, sj, sh = size[i], size[j], size[alive]
        # Ward update of the merged cluster's cost to every survivor.
        upd = ((si + sh) * cost[i, alive] + (sj + sh) * cost[j, alive]
               - sh * cost[i, j]) / (si + sj + sh)
        cost[i, alive] = upd
        cost[alive, i] = upd
        cost[i, i] = np.inf
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        size[i] += size[j]
        members[i].extend(members[j])
        members[j] = []
        alive[j] = False
    return [sorted(members[i]) for i in range(n) if alive[i]]


def cluster_days(profiles: Sequence[DailyProfile], k: int,
                 wind_capacity: Mapping[str, float] | None = None
                 ) -> list[DayCluster]:
    """Partition a year of days into k clusters, each led by its medoid.

    The medoid is the member with the least summed Euclidean distance to
    its cluster mates on the standardized features; ties go to the
    earliest date. Results do not depend on input order.
    """
    n = len(profiles)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if len({p.date for p in profiles}) != n:
        raise ValueError("duplicate date tags in the year")
    ordered = sorted(profiles, key=lambda p: p.date)
    x = feature_matrix(ordered, wind_capacity)
    clusters = []
    for idxs in _ward_partition(x, k):
        pts = x[idxs]
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        best = idxs[int(np.argmin(d.sum(axis=1)))]  # first argmin = earliest
        clusters.append(DayCluster(
            medoid=ordered[best],
            member_dates=tuple(ordered[i].date for i in idxs),
            weight=Fraction(len(idxs), n)))
    clusters.sort(key=lambda c: c.medoid.date)
    return clusters


# ---------------------------------------------------------------------------
# Materializing system days


def representative_days(year: YearData, k: int) -> tuple[RepresentativeDay, ...]:
    """Cluster the year and type each medoid as a weighted system day.

    Bus demand splits the system load by the declared participation
    factors; wind ceilings scale availability by installed capacity. The
    flexibility requirements follow two documented rules: a WIND_FLEX_SHARE
    slice of available wind in both directions, and the coming hour's load
    ramp magnitude (cyclic).
    """
    days = []
    for c in cluster_days(year.profiles, k, year.wind_capacity):
        p = c.medoid
        T = len(p.load)
        load = np.asarray(p.load, dtype=float)
        caps = {uid: tuple(float(year.wind_capacity[uid]) * a
                           for a in p.availability[uid])
                for uid in sorted(p.availability)}
        agg = np.zeros(T)
        for prof in caps.values():
            agg += np.asarray(prof)
        ramp = np.abs(np.roll(load, -1) - load)
        days.append(RepresentativeDay(
            id=p.date,
            probability=float(c.weight),
            demand={bus: tuple(share * v for v in load)
                    for bus, share in sorted(year.participation.items())},
            renewable_cap=caps,
            wind_up_req=tuple(WIND_FLEX_SHARE * v for v in agg),
            wind_down_req=tuple(WIND_FLEX_SHARE * v for v in agg),
            load_ramp_req=tuple(float(v) for v in ramp)))
    return tuple(days)


def fragment_from_days(days: Sequence[RepresentativeDay]) -> dict:
    """Serialize day records as the "days" section of a system JSON document."""
    out = []
    for d in days:
        out.append({
            "id": d.id,
            "probability": d.probability,
            "demand": {b: list(v) for b, v in d.demand.items()},
            "renewable_cap": {g: list(v) for g, v in d.renewable_cap.items()},
            "wind_up_req": list(d.wind_up_req),
            "wind_down_req": list(d.wind_down_req),
            "load_ramp_req": list(d.load_ramp_req),
        })
    return {"days": out}


def days_fragment(year: YearData, k: int) -> dict:
    """Cluster the year and serialize the chosen days."""
    return fragment_from_days(representative_days(year, k))


# ---------------------------------------------------------------------------
# Year CSV ingestion


def _parse_metadata(line: str, path) -> tuple[str, dict[str, float]]:
    body = line.lstrip("#").strip()
    if ":" not in body:
        raise ParseError(f"{path}: metadata line needs 'name: id=value,...': {line!r}")
    name, _, items = body.partition(":")
    pairs = {}
    for item in items.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ParseError(f"{path}: bad metadata entry {item!r}")
        key, _, val = item.partition("=")
        try:
            pairs[key.strip()] = float(val)
        except ValueError as exc:
            raise ParseError(f"{path}: bad metadata value {item!r}") from exc
    return name.strip(), pairs


def parse_year_csv(text: str, path="year CSV") -> YearData:
    """Parse a year of hourly observations from CSV content.

    Expected layout: '#' metadata lines, then a header 'timestamp,load,
    <wind unit ids...>', then one row per hour. The metadata must declare
    'participation' (bus shares of system load, summing to 1) and, when
    wind columns exist, 'wind_capacity' (installed MW per unit id).
    Timestamps are ISO-like 'YYYY-MM-DDTHH...'; every date must cover the
    same number of hours in order.
    """
    meta: dict[str, dict[str, float]] = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            name, pairs = _parse_metadata(line, path)
            meta[name] = pairs
        elif line.strip():
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if not header or [h.strip() for h in header[:2]] != ["timestamp", "load"]:
        raise ParseError(f"{path}: header must start 'timestamp,load'")
    unit_ids = [h.strip() for h in header[2:]]

    participation = meta.get("participation")
    if not participation:
        raise ParseError(f"{path}: missing '# participation:' metadata")
    if abs(sum(participation.values()) - 1.0) > 1e-9:
        raise ParseError(f"{path}: participation shares must sum to 1")
    capacity = meta.get("wind_capacity", {})
    if set(capacity) != set(unit_ids):
        raise ParseError(f"{path}: wind_capacity metadata must cover exactly "
                         f"the wind columns {unit_ids}")

    by_date: dict[str, list[tuple[int, float, list[float]]]] = {}
    for row in reader:
        if len(row) != 2 + len(unit_ids):
            raise ParseError(f"{path}: row has {len(row)} fields, "
                             f"expected {2 + len(unit_ids)}: {row!r}")
        stamp = row[0].strip()
        if len(stamp) < 13 or stamp[10] != "T":
            raise ParseError(f"{path}: bad timestamp {stamp!r}")
        try:
            hour = int(stamp[11:13])
            load = float(row[1])
            avail = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise ParseError(f"{path}: bad numeric field in {row!r}") from exc
        if load < 0:
            raise ParseError(f"{path}: negative load at {stamp}")
        for uid, a in zip(unit_ids, avail):
            if not 0.0 <= a <= 1.0:
                raise ParseError(
                    f"{path}: availability for {uid} at {stamp} outside [0, 1]")
        by_date.setdefault(stamp[:10], []).append((hour, load, avail))

    if not by_date:
        raise ParseError(f"{path}: no data rows")
    profiles = []
    T = None
    for date in sorted(by_date):
        rows = sorted(by_date[date])
        hours = [r[0] for r in rows]
        if hours != list(range(len(rows))):
            raise ParseError(f"{path}: {date} hours are not 0..{len(rows) - 1}")
        if T is None:
            T = len(rows)
        elif len(rows) != T:
            raise ParseError(f"{path}: {date} has {len(rows)} hours, "
                             f"others have {T}")
        profiles.append(DailyProfile(
            date=date,
            load=tuple(r[1] for r in rows),
            availability={uid: tuple(r[2][i] for r in rows)
                          for i, uid in enumerate(unit_ids)}))
    return YearData(profiles=tuple(profiles),
                    participation=dict(sorted(participation.items())),
                    wind_capacity=dict(sorted(capacity.items())))


def load_year_csv(path) -> YearData:
    """Read a year CSV file; see parse_year_csv for the layout."""
    with open(path, newline="") as fh:
        return parse_year_csv(fh.read(), path=str(path))
