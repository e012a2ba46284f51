"""Power-system configuration: technologies, costs, bounds and hourly series.

Series are given either as a number (constant) or as ``{file: name.csv, scale: x}``
where the CSV has columns ``hour,value``. File names are resolved against the
config file's directory first and the bundled data directory second.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigurationError

INF = math.inf


@dataclass(frozen=True)
class GenerationTech:
    name: str
    investment: float  # annualized, EUR/MW/yr
    fixed_om: float = 0.0  # EUR/MW/yr
    variable_cost: float = 0.0  # EUR/MWh incl. fuel
    co2_intensity: float = 0.0  # tCO2/MWh_el
    capacity: tuple[float, float] = (0.0, INF)  # MW
    availability: float | np.ndarray = 1.0

    def __post_init__(self):
        if min(self.investment, self.fixed_om, self.variable_cost, self.co2_intensity) < 0:
            raise ConfigurationError(f"generation {self.name}: costs and intensity must be >= 0")
        _check_bounds(f"generation {self.name}: capacity", self.capacity)
        a = np.asarray(self.availability, dtype=float)
        if not np.isfinite(a).all() or (a < 0).any() or (a > 1).any():
            raise ConfigurationError(f"generation {self.name}: availability must lie in [0, 1]")

    def marginal_cost(self, carbon_price: float) -> float:
        return self.variable_cost + carbon_price * self.co2_intensity


@dataclass(frozen=True)
class StorageTech:
    name: str
    power_cost: float  # EUR/MW/yr
    energy_cost: float  # EUR/MWh/yr
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    power_bounds: tuple[float, float] = (0.0, INF)
    energy_bounds: tuple[float, float] = (0.0, INF)
    inflow: np.ndarray | None = None  # MWh/h, e.g. hydro reservoirs
    grid_charging: bool = True
    self_discharge: float = 0.0  # share of the level lost per hour

    def __post_init__(self):
        for e in (self.charge_efficiency, self.discharge_efficiency):
            if not 0 < e <= 1:
                raise ConfigurationError(f"storage {self.name}: efficiencies must lie in (0, 1]")
        if min(self.power_cost, self.energy_cost) < 0 or not 0 <= self.self_discharge < 1:
            raise ConfigurationError(f"storage {self.name}: costs must be >= 0, self_discharge in [0, 1)")
        _check_bounds(f"storage {self.name}: power_bounds", self.power_bounds)
        _check_bounds(f"storage {self.name}: energy_bounds", self.energy_bounds)
        if self.inflow is not None and (np.asarray(self.inflow) < 0).any():
            raise ConfigurationError(f"storage {self.name}: inflow must be >= 0")


@dataclass(frozen=True)
class HydrogenChain:
    electrolyzer_cost: float  # EUR/MW_el/yr
    electrolyzer_efficiency: float  # MWh_H2 per MWh_el
    cavern_cost: float  # EUR/MWh_H2/yr
    turbine_cost: float  # EUR/MW_el/yr
    turbine_efficiency: float  # MWh_el per MWh_H2
    cavern_loss: float = 0.0  # share of the level lost per hour
    electrolyzer_bounds: tuple[float, float] = (0.0, INF)
    cavern_bounds: tuple[float, float] = (0.0, INF)
    turbine_bounds: tuple[float, float] = (0.0, INF)
    demand_twh: float = 0.0  # exogenous, spread uniformly over the year

    def __post_init__(self):
        for e in (self.electrolyzer_efficiency, self.turbine_efficiency):
            if not 0 < e <= 1:
                raise ConfigurationError("hydrogen: efficiencies must lie in (0, 1]")
        if self.demand_twh < 0 or min(self.electrolyzer_cost, self.cavern_cost, self.turbine_cost) < 0:
            raise ConfigurationError("hydrogen: demand and costs must be >= 0")
        if not 0 <= self.cavern_loss < 1:
            raise ConfigurationError("hydrogen: cavern_loss must lie in [0, 1)")
        for nm in ("electrolyzer_bounds", "cavern_bounds", "turbine_bounds"):
            _check_bounds(f"hydrogen: {nm}", getattr(self, nm))


@dataclass(frozen=True)
class Node:
    name: str
    load: np.ndarray  # MWh/h; a 0-d array means constant
    generation: tuple[GenerationTech, ...] = ()
    storage: tuple[StorageTech, ...] = ()
    hydrogen: HydrogenChain | None = None

    def __post_init__(self):
        if (np.asarray(self.load) < 0).any():
            raise ConfigurationError(f"node {self.name}: load must be >= 0")
        names = [t.name for t in self.generation] + [s.name for s in self.storage]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"node {self.name}: duplicate technology names")

    def series_lengths(self) -> dict[str, int]:
        out = {"load": len(self.load)} if np.ndim(self.load) else {}
        for g in self.generation:
            if np.ndim(g.availability):
                out[f"{g.name}.availability"] = len(g.availability)
        for s in self.storage:
            if s.inflow is not None:
                out[f"{s.name}.inflow"] = len(s.inflow)
        return out


@dataclass(frozen=True)
class BevParameters:
    charge_efficiency: float = 0.95
    discharge_efficiency: float = 0.95

    def __post_init__(self):
        if not (0 < self.charge_efficiency <= 1 and 0 < self.discharge_efficiency <= 1):
            raise ConfigurationError("bev: efficiencies must lie in (0, 1]")


@dataclass(frozen=True)
class SystemConfig:
    name: str
    nodes: dict[str, Node]
    ntc: dict[tuple[str, str], float] = field(default_factory=dict)  # MW per directed pair
    carbon_price: float = 0.0  # EUR/tCO2
    hours_per_year: int = 8760
    cost_scaling: str = "horizon"  # annual fixed costs scaled by H / hours_per_year; or "none"
    bev: BevParameters = BevParameters()
    horizon_hours: int = 168
    start_hour: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.nodes:
            raise ConfigurationError("system: at least one node is required")
        for (a, b), cap in self.ntc.items():
            if a not in self.nodes or b not in self.nodes or a == b:
                raise ConfigurationError(f"ntc {a}->{b}: unknown node or self-link")
            if not cap >= 0:
                raise ConfigurationError(f"ntc {a}->{b}: capacity must be >= 0")
        if self.cost_scaling not in ("horizon", "none"):
            raise ConfigurationError("cost_scaling must be 'horizon' or 'none'")
        if self.carbon_price < 0:
            raise ConfigurationError("carbon_price must be >= 0")

    def cost_weight(self, hours: int) -> float:
        return hours / self.hours_per_year if self.cost_scaling == "horizon" else 1.0

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def scaled(self, lam: float) -> "SystemConfig":
        """Load, inflows, hydrogen demand, NTCs and all capacity bounds multiplied by ``lam``."""
        b = lambda bounds: (bounds[0] * lam, bounds[1] * lam)  # noqa: E731
        nodes = {}
        for k, n in self.nodes.items():
            gens = tuple(replace(g, capacity=b(g.capacity)) for g in n.generation)
            stor = tuple(replace(s, power_bounds=b(s.power_bounds), energy_bounds=b(s.energy_bounds),
                                 inflow=None if s.inflow is None else s.inflow * lam) for s in n.storage)
            h2 = n.hydrogen and replace(n.hydrogen, demand_twh=n.hydrogen.demand_twh * lam,
                                        electrolyzer_bounds=b(n.hydrogen.electrolyzer_bounds),
                                        cavern_bounds=b(n.hydrogen.cavern_bounds),
                                        turbine_bounds=b(n.hydrogen.turbine_bounds))
            nodes[k] = Node(k, n.load * lam, gens, stor, h2)
        return replace(self, nodes=nodes, ntc={k: v * lam for k, v in self.ntc.items()})

    def subset(self, node_names) -> "SystemConfig":
        keep = list(node_names)
        return replace(self, nodes={k: self.nodes[k] for k in keep},
                       ntc={k: v for k, v in self.ntc.items() if k[0] in keep and k[1] in keep})


def _check_bounds(name: str, bounds) -> None:
    lo, hi = bounds
    if not (lo >= 0 and hi >= lo) or math.isnan(hi):
        raise ConfigurationError(f"{name}: need 0 <= min <= max, got {bounds}")


# -- loading ------------------------------------------------------------------


def data_dir() -> Path:
    return Path(str(resources.files("bevpsm.data")))


def read_series_csv(path) -> np.ndarray:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["hour", "value"]:
        raise ConfigurationError(f"{path}: expected header hour,value")
    try:
        hours = [int(r[0]) for r in rows[1:]]
        values = np.array([float(r[1]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    if hours != list(range(len(hours))):
        raise ConfigurationError(f"{path}: hours must run 0, 1, 2, ... without gaps")
    return values


def _series(spec, base: Path | None, what: str):
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if not isinstance(spec, dict) or "file" not in spec:
        raise ConfigurationError(f"{what}: expected a number, a list, or {{file: ..., scale: ...}}")
    candidates = ([base / spec["file"]] if base is not None else []) + [data_dir() / spec["file"]]
    for c in candidates:
        if c.exists():
            return read_series_csv(c) * float(spec.get("scale", 1.0))
    raise ConfigurationError(f"{what}: series file {spec['file']!r} not found")


def _bounds(v, default=(0.0, INF)) -> tuple[float, float]:
    if v is None:
        return default
    if isinstance(v, (int, float)):
        return (float(v), float(v))
    lo, hi = v
    return (float(lo or 0.0), INF if hi is None else float(hi))


def system_from_dict(raw: dict, base: Path | None = None) -> SystemConfig:
    try:
        nodes = {}
        for nname, nd in raw["nodes"].items():
            gens = tuple(
                GenerationTech(
                    name=str(g), investment=float(t.get("investment", 0.0)), fixed_om=float(t.get("fixed_om", 0.0)),
                    variable_cost=float(t.get("variable_cost", 0.0)), co2_intensity=float(t.get("co2_intensity", 0.0)),
                    capacity=_bounds(t.get("capacity")),
                    availability=_series(t.get("availability", 1.0), base, f"{nname}.{g}.availability"))
                for g, t in (nd.get("generation") or {}).items())
            stor = tuple(
                StorageTech(
                    name=str(s), power_cost=float(t.get("power_cost", 0.0)), energy_cost=float(t.get("energy_cost", 0.0)),
                    charge_efficiency=float(t.get("charge_efficiency", 1.0)),
                    discharge_efficiency=float(t.get("discharge_efficiency", 1.0)),
                    power_bounds=_bounds(t.get("power_bounds")), energy_bounds=_bounds(t.get("energy_bounds")),
                    inflow=None if t.get("inflow") is None else np.asarray(
                        _series(t["inflow"], base, f"{nname}.{s}.inflow"), dtype=float),
                    grid_charging=bool(t.get("grid_charging", True)), self_discharge=float(t.get("self_discharge", 0.0)))
                for s, t in (nd.get("storage") or {}).items())
            h = nd.get("hydrogen")
            h2 = None if h is None else HydrogenChain(
                electrolyzer_cost=float(h["electrolyzer_cost"]), electrolyzer_efficiency=float(h["electrolyzer_efficiency"]),
                cavern_cost=float(h["cavern_cost"]), turbine_cost=float(h["turbine_cost"]),
                turbine_efficiency=float(h["turbine_efficiency"]), cavern_loss=float(h.get("cavern_loss", 0.0)),
                electrolyzer_bounds=_bounds(h.get("electrolyzer_bounds")), cavern_bounds=_bounds(h.get("cavern_bounds")),
                turbine_bounds=_bounds(h.get("turbine_bounds")), demand_twh=float(h.get("demand_twh", 0.0)))
            load = _series(nd["load"], base, f"{nname}.load")
            nodes[str(nname)] = Node(str(nname), np.asarray(load, dtype=float), gens, stor, h2)
        ntc = {}
        for entry in raw.get("ntc") or []:
            a, b, cap = entry
            ntc[(str(a), str(b))] = float(cap)
        bev = raw.get("bev") or {}
        return SystemConfig(
            name=str(raw.get("name", "system")), nodes=nodes, ntc=ntc,
            carbon_price=float(raw.get("carbon_price", 0.0)), hours_per_year=int(raw.get("hours_per_year", 8760)),
            cost_scaling=str(raw.get("cost_scaling", "horizon")),
            bev=BevParameters(float(bev.get("charge_efficiency", 0.95)), float(bev.get("discharge_efficiency", 0.95))),
            horizon_hours=int(raw.get("horizon_hours", 168)), start_hour=int(raw.get("start_hour", 0)), raw=raw)
    except KeyError as exc:
        raise ConfigurationError(f"system configuration: missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"system configuration: {exc}") from None


BUNDLED_SYSTEMS = ("desk", "island", "stylized", "hydrogen", "interconnected")


def resolve_system_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    if str(name_or_path) in BUNDLED_SYSTEMS:
        return data_dir() / f"system_{name_or_path}.yaml"
    raise ConfigurationError(f"system configuration {name_or_path!r} not found")


def load_system_config(name_or_path, overrides: dict | None = None) -> SystemConfig:
    """Read a system YAML (bundled name or path); ``overrides`` maps dotted keys to values."""
    path = resolve_system_path(name_or_path)
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: configuration must be a mapping")
    if "system" in raw and "nodes" not in raw:
        raw = raw["system"]
    if overrides:
        raw = apply_overrides(raw, overrides)
    return system_from_dict(raw, path.parent)


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Set ``a.b.c=value`` style keys; every key must already exist in the document."""
    out = copy.deepcopy(raw)
    for key, value in overrides.items():
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            if not isinstance(node, dict) or p not in node:
                raise ConfigurationError(f"override {key!r}: unknown key {p!r}")
            node = node[p]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigurationError(f"override {key!r}: unknown key {parts[-1]!r}")
        node[parts[-1]] = value
    return out
