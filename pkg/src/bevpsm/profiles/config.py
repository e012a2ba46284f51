"""Generator inputs: vehicle catalog, mobility tables, charger distribution.

All inputs can be read from (and written to) one YAML document; the bundled
``data/profiles_default.yaml`` documents the schema and the default tables.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigurationError

DESTINATIONS = ("workplace", "shopping", "errands", "escort", "leisure", "home")
DAY_TYPES = ("weekday", "saturday", "sunday")
STEPS_PER_HOUR = 4
STEPS_PER_DAY = 96
STEP_HOURS = 0.25
YEAR_STEPS = 365 * STEPS_PER_DAY

PROB_TOL = 1e-9


@dataclass(frozen=True)
class VehicleModel:
    name: str
    battery_capacity: float  # kWh
    drive_consumption: float  # kWh/km
    max_home_charge: float  # kW, on-board AC limit
    max_fast_charge: float  # kW, DC limit

    def __post_init__(self):
        if not self.battery_capacity > 0:
            raise ConfigurationError(f"vehicle {self.name}: battery_capacity must be > 0")
        if not self.drive_consumption > 0:
            raise ConfigurationError(f"vehicle {self.name}: drive_consumption must be > 0")
        if not self.max_home_charge > 0:
            raise ConfigurationError(f"vehicle {self.name}: max_home_charge must be > 0")
        if not self.max_fast_charge >= self.max_home_charge:
            raise ConfigurationError(f"vehicle {self.name}: max_fast_charge must be >= max_home_charge")

    def as_dict(self) -> dict:
        return {"name": self.name, "battery_capacity": self.battery_capacity,
                "drive_consumption": self.drive_consumption, "max_home_charge": self.max_home_charge,
                "max_fast_charge": self.max_fast_charge}


@dataclass(frozen=True)
class VehicleCatalog:
    models: tuple[VehicleModel, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.models) != len(self.weights) or not self.models:
            raise ConfigurationError("vehicles: need one weight per model and at least one model")
        w = np.asarray(self.weights, dtype=float)
        if (w < 0).any() or abs(w.sum() - 1.0) > PROB_TOL:
            raise ConfigurationError("vehicles: mix weights must be >= 0 and sum to 1")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigurationError("vehicles: duplicate model names")

    def by_name(self, name: str) -> VehicleModel:
        for m in self.models:
            if m.name == name:
                return m
        raise ConfigurationError(f"vehicles: unknown model {name!r}")

    @property
    def mean_battery(self) -> float:
        return float(sum(m.battery_capacity * w for m, w in zip(self.models, self.weights)))


@dataclass(frozen=True)
class ChargerDistribution:
    probability: dict[str, float]
    power_kw: dict[str, float]

    def __post_init__(self):
        for d in DESTINATIONS:
            if d not in self.probability or d not in self.power_kw:
                raise ConfigurationError(f"chargers: missing destination {d!r}")
            if not 0.0 <= self.probability[d] <= 1.0:
                raise ConfigurationError(f"chargers.{d}: probability must lie in [0, 1]")
            if not self.power_kw[d] > 0:
                raise ConfigurationError(f"chargers.{d}: power_kw must be > 0")


@dataclass(frozen=True)
class Binned:
    """Piecewise-uniform distribution over bins ``[edges[k], edges[k+1])``."""

    edges: np.ndarray
    probs: np.ndarray

    def sample(self, rng: np.random.Generator) -> float:
        k = pick(rng, self.probs)
        return float(self.edges[k] + rng.random() * (self.edges[k + 1] - self.edges[k]))

    def mean(self) -> float:
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        return float(mids @ self.probs)


@dataclass(frozen=True)
class MobilityRules:
    """Synthetic travel-survey tables.

    ``trip_counts[day_type]`` is the distribution of away-from-home stops per
    day (a day with ``k`` stops has ``k + 1`` trips). ``destination_choice``
    picks the purpose of each stop; ``home`` is only eligible as an
    intermediate stop. ``departure_hour[dest]`` gives the hour-of-day of the
    first departure of a day whose first stop is ``dest``.
    """

    trip_counts: dict[str, dict[int, float]]
    destination_choice: dict[str, dict[str, float]]
    departure_hour: dict[str, np.ndarray]
    distance_km: dict[str, Binned]
    dwell_hours: dict[str, Binned]
    speed_bands: tuple[tuple[float, float], ...]
    max_speed_kmh: float = 130.0
    latest_return_step: int = STEPS_PER_DAY - 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for dt in DAY_TYPES:
            table = self.trip_counts.get(dt)
            if table is None:
                raise ConfigurationError(f"trip_counts.{dt}: missing table")
            _check_probs(f"trip_counts.{dt}", list(table.values()))
            if any(k < 0 for k in table):
                raise ConfigurationError(f"trip_counts.{dt}: negative trip count")
            choice = self.destination_choice.get(dt)
            if choice is None:
                raise ConfigurationError(f"destination_choice.{dt}: missing table")
            if set(choice) - set(DESTINATIONS):
                raise ConfigurationError(f"destination_choice.{dt}: unknown destination")
            _check_probs(f"destination_choice.{dt}", list(choice.values()))
        for d in DESTINATIONS:
            if d != "home":
                hours = self.departure_hour.get(d)
                if hours is None or len(hours) != 24:
                    raise ConfigurationError(f"departure_hour.{d}: need 24 hourly probabilities")
                _check_probs(f"departure_hour.{d}", hours)
            for name, tables in (("distance_km", self.distance_km), ("dwell_hours", self.dwell_hours)):
                t = tables.get(d)
                if t is None:
                    raise ConfigurationError(f"{name}.{d}: missing table")
                _check_probs(f"{name}.{d}", t.probs)
                if t.edges.size != t.probs.size + 1 or (np.diff(t.edges) <= 0).any():
                    raise ConfigurationError(f"{name}.{d}: edges must be increasing, one more than probs")
                if t.edges[0] <= 0:
                    raise ConfigurationError(f"{name}.{d}: values must be > 0")
        if not self.speed_bands:
            raise ConfigurationError("speed_bands: empty")
        for limit, speed in self.speed_bands:
            if not (limit > 0 and 0 < speed <= self.max_speed_kmh):
                raise ConfigurationError("speed_bands: speeds must lie in (0, max_speed_kmh]")

    def speed_for(self, km: float) -> float:
        for limit, speed in self.speed_bands:
            if km <= limit:
                return speed
        return self.speed_bands[-1][1]


def pick(rng: np.random.Generator, probs) -> int:
    """Inverse-CDF draw of one index; zero-probability entries are never returned."""
    cdf = np.cumsum(probs)
    return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))


def _check_probs(name: str, probs) -> None:
    p = np.asarray(probs, dtype=float)
    if p.size == 0 or (p < 0).any() or not np.isfinite(p).all():
        raise ConfigurationError(f"{name}: probabilities must be finite and >= 0")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ConfigurationError(f"{name}: probabilities sum to {p.sum():.12g}, expected 1")


@dataclass(frozen=True)
class GeneratorConfig:
    rules: MobilityRules
    chargers: ChargerDistribution
    catalog: VehicleCatalog
    horizon_steps: int = YEAR_STEPS
    start_weekday: int = 0
    reserve_fraction: float = 0.1
    charge_efficiency: float = 0.95
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.horizon_steps <= 0 or self.horizon_steps % STEPS_PER_DAY:
            raise ConfigurationError("generator.horizon_steps must be a positive multiple of 96")
        if not 0.0 <= self.reserve_fraction < 1.0:
            raise ConfigurationError("generator.reserve_fraction must lie in [0, 1)")
        if not 0.0 < self.charge_efficiency <= 1.0:
            raise ConfigurationError("generator.charge_efficiency must lie in (0, 1]")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]

    def with_horizon(self, steps: int) -> "GeneratorConfig":
        raw = json.loads(json.dumps(self.raw))
        raw.setdefault("generator", {})["horizon_steps"] = int(steps)
        return config_from_dict(raw)


def _binned(section: dict, name: str) -> dict[str, Binned]:
    if "edges" not in section:
        raise ConfigurationError(f"{name}: missing edges")
    edges = np.asarray(section["edges"], dtype=float)
    out = {}
    for d in DESTINATIONS:
        if d not in section:
            raise ConfigurationError(f"{name}.{d}: missing table")
        out[d] = Binned(edges, np.asarray(section[d], dtype=float))
    return out


def config_from_dict(raw: dict) -> GeneratorConfig:
    try:
        mob = raw["mobility"]
        rules = MobilityRules(
            trip_counts={dt: {int(k): float(v) for k, v in mob["trip_counts"][dt].items()}
                         for dt in mob["trip_counts"]},
            destination_choice={dt: {str(k): float(v) for k, v in t.items()}
                                for dt, t in mob["destination_choice"].items()},
            departure_hour={d: np.asarray(v, dtype=float) for d, v in mob["departure_hour"].items()},
            distance_km=_binned(mob["distance_km"], "distance_km"),
            dwell_hours=_binned(mob["dwell_hours"], "dwell_hours"),
            speed_bands=tuple((float(a), float(b)) for a, b in mob["speed_bands_kmh"]),
            max_speed_kmh=float(mob.get("max_speed_kmh", 130.0)),
        )
        chargers = ChargerDistribution(
            probability={d: float(v["probability"]) for d, v in raw["chargers"].items()},
            power_kw={d: float(v["power_kw"]) for d, v in raw["chargers"].items()},
        )
        vehicles = raw["vehicles"]
        catalog = VehicleCatalog(
            models=tuple(VehicleModel(str(v["name"]), float(v["battery_capacity"]), float(v["drive_consumption"]),
                                      float(v["max_home_charge"]), float(v["max_fast_charge"])) for v in vehicles),
            weights=tuple(float(v["weight"]) for v in vehicles),
        )
        gen = raw.get("generator", {})
        return GeneratorConfig(
            rules=rules, chargers=chargers, catalog=catalog,
            horizon_steps=int(gen.get("horizon_steps", YEAR_STEPS)),
            start_weekday=int(gen.get("start_weekday", 0)),
            reserve_fraction=float(gen.get("reserve_fraction", 0.1)),
            charge_efficiency=float(gen.get("charge_efficiency", 0.95)),
            raw=raw,
        )
    except KeyError as exc:
        raise ConfigurationError(f"profile configuration: missing key {exc.args[0]!r}") from None
    except (TypeError, AttributeError) as exc:
        raise ConfigurationError(f"profile configuration: {exc}") from None


def load_generator_config(path: str | Path | None = None, overrides: dict | None = None) -> GeneratorConfig:
    """Read a profile-generator YAML file; ``None`` loads the bundled defaults."""
    if path is None:
        text = resources.files("bevpsm.data").joinpath("profiles_default.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigurationError("profile configuration must be a mapping")
    if "profiles" in raw and "mobility" not in raw:
        raw = raw["profiles"]
    if overrides:
        raw = json.loads(json.dumps(raw))
        raw.setdefault("generator", {}).update(overrides)
    return config_from_dict(raw)


def default_config(horizon_steps: int | None = None) -> GeneratorConfig:
    cfg = load_generator_config()
    return cfg if horizon_steps is None else cfg.with_horizon(horizon_steps)
