"""Power system data model: loading, validation, scenario transforms.

A system is a static network (buses, lines, generators) plus a set of
probability-weighted representative days. Everything downstream (the
unit-commitment builder, the tax search, the reports) consumes the frozen
dataclasses defined here. All quantities are in physical units: MW, MWh,
hours, $/MWh, tons/MWh, ohms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

PROB_SUM_TOL = 1e-9
BLOCK_WIDTH_TOL = 1e-6


class ParseError(ValueError):
    """Input file is not valid JSON or is missing required structure."""


class ValidationError(ValueError):
    """System data violates a structural invariant."""


class ScenarioError(ValueError):
    """A scenario transform is malformed or cannot be applied."""


FUELS = ("coal", "gas", "oil", "nuclear", "hydro", "wind", "other")


@dataclass(frozen=True)
class Bus:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    reactance: float  # ohms, > 0
    capacity: float   # MW flow limit, applied as |f| <= capacity


@dataclass(frozen=True)
class Block:
    """One step of a generator's piecewise-linear cost/emission curve."""

    width: float          # MW
    marginal_cost: float  # $/MWh
    marginal_emis: float  # tons/MWh


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    fuel: str
    g_min: float
    g_max: float
    blocks: tuple[Block, ...]
    c_min: float      # $/h while committed at minimum output
    c_startup: float  # $ per start
    e_min: float      # tons/h while committed at minimum output
    e_startup: float  # tons per start
    min_up: int
    min_down: int
    ramp_up: float       # MW/h
    ramp_down: float     # MW/h
    is_renewable: bool = False


@dataclass(frozen=True)
class RepresentativeDay:
    """One clustered day with its probability weight.

    demand maps bus id -> hourly MW; renewable_cap maps renewable generator
    id -> hourly available MW (the hourly ceiling on that unit's output).
    """

    id: str
    probability: float
    demand: Mapping[str, tuple[float, ...]]
    renewable_cap: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    wind_up_req: tuple[float, ...] = ()
    wind_down_req: tuple[float, ...] = ()
    load_ramp_req: tuple[float, ...] = ()


@dataclass(frozen=True)
class SystemData:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    days: tuple[RepresentativeDay, ...]
    shed_penalty: float   # $/MWh of unserved load
    spill_penalty: float  # $/MWh of curtailed renewable output
    horizon: int = 24

    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def generator(self, gen_id: str) -> Generator:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise KeyError(gen_id)

    def renewables(self) -> list[Generator]:
        return [g for g in self.generators if g.is_renewable]

    def total_demand(self, day: RepresentativeDay, hour: int) -> float:
        return sum(day.demand[b.id][hour] for b in self.buses)


# ---------------------------------------------------------------------------
# JSON loading


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise ParseError(f"{where}: missing required field '{key}'")
    return mapping[key]


def _hours(raw, where: str) -> tuple[float, ...]:
    if not isinstance(raw, (list, tuple)):
        raise ParseError(f"{where}: expected a list of hourly values")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: non-numeric hourly value") from exc


def _parse_generator(raw: Mapping, where: str) -> Generator:
    blocks = []
    for k, braw in enumerate(_require(raw, "blocks", where)):
        bwhere = f"{where} block {k}"
        blocks.append(Block(
            width=float(_require(braw, "width", bwhere)),
            marginal_cost=float(_require(braw, "marginal_cost", bwhere)),
            marginal_emis=float(_require(braw, "marginal_emis", bwhere)),
        ))
    return Generator(
        id=str(_require(raw, "id", where)),
        bus=str(_require(raw, "bus", where)),
        fuel=str(_require(raw, "fuel", where)),
        g_min=float(_require(raw, "g_min", where)),
        g_max=float(_require(raw, "g_max", where)),
        blocks=tuple(blocks),
        c_min=float(_require(raw, "c_min", where)),
        c_startup=float(_require(raw, "c_startup", where)),
        e_min=float(_require(raw, "e_min", where)),
        e_startup=float(_require(raw, "e_startup", where)),
        min_up=int(_require(raw, "min_up", where)),
        min_down=int(_require(raw, "min_down", where)),
        ramp_up=float(_require(raw, "ramp_up", where)),
        ramp_down=float(_require(raw, "ramp_down", where)),
        is_renewable=bool(raw.get("is_renewable", False)),
    )


def _parse_day(raw: Mapping, where: str, horizon: int) -> RepresentativeDay:
    demand = {str(b): _hours(v, f"{where} demand[{b}]")
              for b, v in _require(raw, "demand", where).items()}
    cap = {str(g): _hours(v, f"{where} renewable_cap[{g}]")
           for g, v in raw.get("renewable_cap", {}).items()}
    zeros = (0.0,) * horizon  # requirement vectors default to no requirement
    return RepresentativeDay(
        id=str(_require(raw, "id", where)),
        probability=float(_require(raw, "probability", where)),
        demand=demand,
        renewable_cap=cap,
        wind_up_req=_hours(raw["wind_up_req"], f"{where} wind_up_req")
        if "wind_up_req" in raw else zeros,
        wind_down_req=_hours(raw["wind_down_req"], f"{where} wind_down_req")
        if "wind_down_req" in raw else zeros,
        load_ramp_req=_hours(raw["load_ramp_req"], f"{where} load_ramp_req")
        if "load_ramp_req" in raw else zeros,
    )


def system_from_dict(raw: Mapping) -> SystemData:
    """Build a SystemData from parsed JSON, then validate it."""
    if not isinstance(raw, Mapping):
        raise ParseError("top level of a system file must be a JSON object")
    penalties = _require(raw, "penalties", "system")
    sys_data = SystemData(
        buses=tuple(Bus(id=str(_require(b, "id", f"bus {k}")),
                        name=str(b.get("name", "")))
                    for k, b in enumerate(_require(raw, "buses", "system"))),
        lines=tuple(Line(
            id=str(_require(l, "id", f"line {k}")),
            from_bus=str(_require(l, "from_bus", f"line {k}")),
            to_bus=str(_require(l, "to_bus", f"line {k}")),
            reactance=float(_require(l, "reactance", f"line {k}")),
            capacity=float(_require(l, "capacity", f"line {k}")),
        ) for k, l in enumerate(raw.get("lines", []))),
        generators=tuple(_parse_generator(g, f"generator {k}")
                         for k, g in enumerate(_require(raw, "generators", "system"))),
        days=tuple(_parse_day(d, f"day {k}", int(raw.get("horizon", 24)))
                   for k, d in enumerate(_require(raw, "days", "system"))),
        shed_penalty=float(_require(penalties, "shed_penalty", "penalties")),
        spill_penalty=float(_require(penalties, "spill_penalty", "penalties")),
        horizon=int(raw.get("horizon", 24)),
    )
    violations = validate(sys_data)
    if violations:
        raise ValidationError(violations[0])
    return sys_data


def load_system(path) -> SystemData:
    """Load and validate a system JSON file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return system_from_dict(raw)


# ---------------------------------------------------------------------------
# Validation


def validate(sys_data: SystemData) -> list[str]:
    """Check every structural invariant; return a list of violation strings.

    An empty list means the system is well formed. Callers that need a hard
    failure raise ValidationError on the first entry.
    """
    v: list[str] = []
    T = sys_data.horizon
    if T < 1:
        v.append(f"horizon must be >= 1, got {T}")
    if sys_data.shed_penalty < 0 or sys_data.spill_penalty < 0:
        v.append("penalties must be >= 0")
    if not sys_data.buses:
        v.append("system has no buses")
    if not sys_data.days:
        v.append("system has no representative days")

    bus_ids = [b.id for b in sys_data.buses]
    if len(set(bus_ids)) != len(bus_ids):
        v.append("bus ids are not unique")
    bus_set = set(bus_ids)

    line_ids = [l.id for l in sys_data.lines]
    if len(set(line_ids)) != len(line_ids):
        v.append("line ids are not unique")
    for l in sys_data.lines:
        if l.from_bus not in bus_set or l.to_bus not in bus_set:
            v.append(f"line {l.id}: endpoint references unknown bus")
        if l.from_bus == l.to_bus:
            v.append(f"line {l.id}: endpoints must differ")
        if l.reactance <= 0:
            v.append(f"line {l.id}: reactance must be > 0")
        if l.capacity < 0:
            v.append(f"line {l.id}: capacity must be >= 0")

    gen_ids = [g.id for g in sys_data.generators]
    if len(set(gen_ids)) != len(gen_ids):
        v.append("generator ids are not unique")
    renewable_ids = {g.id for g in sys_data.renewables()}
    for g in sys_data.generators:
        if g.bus not in bus_set:
            v.append(f"generator {g.id}: references unknown bus {g.bus}")
        if g.fuel not in FUELS:
            v.append(f"generator {g.id}: unknown fuel {g.fuel!r}")
        if not (0 <= g.g_min <= g.g_max):
            v.append(f"generator {g.id}: requires 0 <= g_min <= g_max")
        if not g.blocks:
            v.append(f"generator {g.id}: needs at least one block")
        width_sum = sum(b.width for b in g.blocks)
        if abs(width_sum - (g.g_max - g.g_min)) > BLOCK_WIDTH_TOL:
            v.append(f"generator {g.id}: block widths sum to {width_sum}, "
                     f"expected g_max - g_min = {g.g_max - g.g_min}")
        for k, b in enumerate(g.blocks):
            if b.width < 0:
                v.append(f"generator {g.id} block {k}: width must be >= 0")
            if b.marginal_cost < 0 or b.marginal_emis < 0:
                v.append(f"generator {g.id} block {k}: cost and emission rates must be >= 0")
            if k > 0 and b.marginal_cost < g.blocks[k - 1].marginal_cost - 1e-12:
                v.append(f"generator {g.id}: block marginal costs must be nondecreasing")
        if min(g.c_min, g.c_startup, g.e_min, g.e_startup) < 0:
            v.append(f"generator {g.id}: fixed cost and emission terms must be >= 0")
        if not (1 <= g.min_up <= T) or not (1 <= g.min_down <= T):
            v.append(f"generator {g.id}: min_up/min_down must lie in [1, horizon]")
        if g.ramp_up <= 0 or g.ramp_down <= 0:
            v.append(f"generator {g.id}: ramp rates must be > 0")

    day_ids = [d.id for d in sys_data.days]
    if len(set(day_ids)) != len(day_ids):
        v.append("day ids are not unique")
    prob_sum = 0.0
    for d in sys_data.days:
        prob_sum += d.probability
        if not (0.0 <= d.probability <= 1.0):
            v.append(f"day {d.id}: probability outside [0, 1]")
        if set(d.demand) != bus_set:
            v.append(f"day {d.id}: demand must cover exactly the bus set")
        for b, profile in d.demand.items():
            if len(profile) != T:
                v.append(f"day {d.id}: demand[{b}] has {len(profile)} hours, expected {T}")
            if any(x < 0 for x in profile):
                v.append(f"day {d.id}: demand[{b}] has negative values")
        if set(d.renewable_cap) != renewable_ids:
            v.append(f"day {d.id}: renewable_cap must cover exactly the renewable units")
        for gid, profile in d.renewable_cap.items():
            if len(profile) != T:
                v.append(f"day {d.id}: renewable_cap[{gid}] has {len(profile)} hours, expected {T}")
            if any(x < 0 for x in profile):
                v.append(f"day {d.id}: renewable_cap[{gid}] has negative values")
        for name in ("wind_up_req", "wind_down_req", "load_ramp_req"):
            profile = getattr(d, name)
            if len(profile) != T:
                v.append(f"day {d.id}: {name} has {len(profile)} hours, expected {T}")
            elif any(x < 0 for x in profile):
                v.append(f"day {d.id}: {name} has negative values")
    if sys_data.days and abs(prob_sum - 1.0) > PROB_SUM_TOL:
        v.append(f"day probabilities sum to {prob_sum!r}, expected 1 within {PROB_SUM_TOL}")
    return v


# ---------------------------------------------------------------------------
# Canonical serialization (used for hashing, purity tests, and file output)


def system_to_dict(sys_data: SystemData) -> dict:
    return {
        "buses": [{"id": b.id, "name": b.name} for b in sys_data.buses],
        "lines": [{"id": l.id, "from_bus": l.from_bus, "to_bus": l.to_bus,
                   "reactance": l.reactance, "capacity": l.capacity}
                  for l in sys_data.lines],
        "generators": [{
            "id": g.id, "bus": g.bus, "fuel": g.fuel,
            "g_min": g.g_min, "g_max": g.g_max,
            "blocks": [{"width": b.width, "marginal_cost": b.marginal_cost,
                        "marginal_emis": b.marginal_emis} for b in g.blocks],
            "c_min": g.c_min, "c_startup": g.c_startup,
            "e_min": g.e_min, "e_startup": g.e_startup,
            "min_up": g.min_up, "min_down": g.min_down,
            "ramp_up": g.ramp_up, "ramp_down": g.ramp_down,
            "is_renewable": g.is_renewable,
        } for g in sys_data.generators],
        "days": [{
            "id": d.id, "probability": d.probability,
            "demand": {b: list(p) for b, p in sorted(d.demand.items())},
            "renewable_cap": {g: list(p) for g, p in sorted(d.renewable_cap.items())},
            "wind_up_req": list(d.wind_up_req),
            "wind_down_req": list(d.wind_down_req),
            "load_ramp_req": list(d.load_ramp_req),
        } for d in sys_data.days],
        "penalties": {"shed_penalty": sys_data.shed_penalty,
                      "spill_penalty": sys_data.spill_penalty},
        "horizon": sys_data.horizon,
    }


def canonical_dumps(sys_data: SystemData) -> str:
    return json.dumps(system_to_dict(sys_data), sort_keys=True, separators=(",", ":"))


def content_hash(sys_data: SystemData) -> str:
    return hashlib.sha256(canonical_dumps(sys_data).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Scenario transforms
#
# Data transforms return a new SystemData; flag transforms carry switches the
# unit-commitment builder consumes. apply_scenario only touches the data;
# ScenarioSpec.build_flags() collects the switches.


@dataclass(frozen=True)
class BuildFlags:
    """Model switches consumed by the day-problem builder."""

    tced: bool = False                # drop commitment logic/ramps, zero min terms
    relax_flexibility: bool = False   # drop the hourly flexibility requirements
    gas_energy_fraction: float | None = None  # cap gas energy per day


def _check_factor(factor: float, name: str) -> float:
    if factor <= 0:
        raise ScenarioError(f"{name}: scale factor must be > 0, got {factor}")
    return float(factor)


@dataclass(frozen=True)
class WindScale:
    factor: float

    def apply(self, s: SystemData) -> SystemData:
        f = _check_factor(self.factor, "wind_scale")
        wind = {g.id for g in s.generators if g.is_renewable and g.fuel == "wind"}
        days = tuple(replace(
            d, renewable_cap={gid: tuple(x * f for x in prof) if gid in wind else prof
                              for gid, prof in d.renewable_cap.items()})
            for d in s.days)
        return replace(s, days=days)


@dataclass(frozen=True)
class RetireCoal:
    """Remove coal units, highest first-block marginal cost first, ties by id."""

    count: int | None = None
    ids: tuple[str, ...] = ()

    def apply(self, s: SystemData) -> SystemData:
        coal = [g for g in s.generators if g.fuel == "coal"]
        if self.ids:
            coal_ids = {g.id for g in coal}
            for gid in self.ids:
                if gid not in coal_ids:
                    raise ScenarioError(f"retire_coal: unknown coal generator id {gid!r}")
            retired = set(self.ids)
        else:
            n = int(self.count or 0)
            if n < 0 or n > len(coal):
                raise ScenarioError(f"retire_coal: cannot retire {n} of {len(coal)} coal units")
            ranked = sorted(coal, key=lambda g: (-g.blocks[0].marginal_cost, g.id))
            retired = {g.id for g in ranked[:n]}
        return replace(s, generators=tuple(g for g in s.generators if g.id not in retired))


@dataclass(frozen=True)
class AddGenerator:
    generator: Generator

    def apply(self, s: SystemData) -> SystemData:
        g = self.generator
        if any(g.id == old.id for old in s.generators):
            raise ScenarioError(f"add_generator: id {g.id!r} already exists")
        days = s.days
        if g.is_renewable:
            # New renewable units default to a flat availability at g_max.
            days = tuple(replace(
                d, renewable_cap={**d.renewable_cap, g.id: (g.g_max,) * s.horizon})
                for d in s.days)
        return replace(s, generators=s.generators + (g,), days=days)


@dataclass(frozen=True)
class GasPriceScale:
    factor: float

    def apply(self, s: SystemData) -> SystemData:
        f = _check_factor(self.factor, "gas_price_scale")
        gens = tuple(
            replace(g, blocks=tuple(replace(b, marginal_cost=b.marginal_cost * f)
                                    for b in g.blocks)) if g.fuel == "gas" else g
            for g in s.generators)
        return replace(s, generators=gens)


@dataclass(frozen=True)
class LoadScale:
    factor: float

    def apply(self, s: SystemData) -> SystemData:
        f = _check_factor(self.factor, "load_scale")
        days = tuple(replace(
            d, demand={b: tuple(x * f for x in prof) for b, prof in d.demand.items()})
            for d in s.days)
        return replace(s, days=days)


@dataclass(frozen=True)
class TransmissionScale:
    factor: float

    def apply(self, s: SystemData) -> SystemData:
        f = _check_factor(self.factor, "transmission_scale")
        return replace(s, lines=tuple(replace(l, capacity=l.capacity * f)
                                      for l in s.lines))


@dataclass(frozen=True)
class GasEnergyLimit:
    fraction: float


@dataclass(frozen=True)
class RelaxFlexibility:
    pass


@dataclass(frozen=True)
class TcedRelaxation:
    pass


_DATA_TRANSFORMS = (WindScale, RetireCoal, AddGenerator, GasPriceScale,
                    LoadScale, TransmissionScale)

Transform = (WindScale | RetireCoal | AddGenerator | GasPriceScale | LoadScale
             | TransmissionScale | GasEnergyLimit | RelaxFlexibility | TcedRelaxation)


@dataclass(frozen=True)
class ScenarioSpec:
    transforms: tuple[Transform, ...] = ()

    def build_flags(self) -> BuildFlags:
        tced = False
        relax = False
        gas_fraction = None
        for t in self.transforms:
            if isinstance(t, TcedRelaxation):
                tced = True
            elif isinstance(t, RelaxFlexibility):
                relax = True
            elif isinstance(t, GasEnergyLimit):
                if not (0.0 < t.fraction <= 1.0):
                    raise ScenarioError(
                        f"gas_energy_limit: fraction must lie in (0, 1], got {t.fraction}")
                gas_fraction = float(t.fraction)
        return BuildFlags(tced=tced, relax_flexibility=relax,
                          gas_energy_fraction=gas_fraction)


def apply_scenario(base: SystemData, spec: ScenarioSpec) -> SystemData:
    """Apply the data transforms of a scenario, in order, to a copy.

    The input system is never mutated; flag transforms are a no-op here
    (see ScenarioSpec.build_flags). The result is re-validated.
    """
    out = base
    for t in spec.transforms:
        if isinstance(t, _DATA_TRANSFORMS):
            out = t.apply(out)
    violations = validate(out)
    if violations:
        raise ScenarioError(f"scenario produced an invalid system: {violations[0]}")
    return out


def parse_scenario(raw: Mapping) -> ScenarioSpec:
    """Parse a scenario JSON object: {"transforms": [{"kind": ..., ...}]}."""
    transforms: list[Transform] = []
    for k, t in enumerate(_require(raw, "transforms", "scenario")):
        kind = _require(t, "kind", f"transform {k}")
        where = f"transform {k} ({kind})"
        if kind == "wind_scale":
            transforms.append(WindScale(float(_require(t, "factor", where))))
        elif kind == "retire_coal":
            if "ids" in t:
                transforms.append(RetireCoal(ids=tuple(str(x) for x in t["ids"])))
            else:
                transforms.append(RetireCoal(count=int(_require(t, "count", where))))
        elif kind == "add_generator":
            transforms.append(AddGenerator(
                _parse_generator(_require(t, "generator", where), where)))
        elif kind == "gas_price_scale":
            transforms.append(GasPriceScale(float(_require(t, "factor", where))))
        elif kind == "gas_energy_limit":
            transforms.append(GasEnergyLimit(float(_require(t, "fraction", where))))
        elif kind == "load_scale":
            transforms.append(LoadScale(float(_require(t, "factor", where))))
        elif kind == "transmission_scale":
            transforms.append(TransmissionScale(float(_require(t, "factor", where))))
        elif kind == "relax_flexibility":
            transforms.append(RelaxFlexibility())
        elif kind == "tced_relaxation":
            transforms.append(TcedRelaxation())
        else:
            raise ParseError(f"transform {k}: unknown kind {kind!r}")
    return ScenarioSpec(transforms=tuple(transforms))


def load_scenario(path) -> ScenarioSpec:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scenario(raw)
