"""BEV profiles, profile pools, and their on-disk format.

A pool directory holds ``manifest.yaml`` plus one sub-directory per profile
with ``mobility.csv``, ``consumption.csv``, ``availability.csv`` (columns
``step_index,value``) and ``trips.csv``. The three series files use
change-point encoding: a row is written at step 0 and at every step where the
value changes, and the value holds until the next row. Floats are written with
``repr`` so a reload is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from .. import __version__
from ..errors import GenerationError, InputError
from .config import DESTINATIONS, GeneratorConfig, VehicleModel, config_from_dict, pick
from .mobility import DRIVING, MobilityProfile, Trip, generate_mobility, profile_from_trips
from .series import (AVAILABILITY, CONSUMPTION, TimeSeries, derive_driving_consumption,
                     derive_grid_availability, resample_hourly)

POOL_FORMAT = "bevpsm-pool/1"


@dataclass(frozen=True)
class BevProfile:
    profile_id: int
    seed: int
    vehicle: VehicleModel
    mobility: MobilityProfile
    consumption: TimeSeries  # kWh per 15-min step
    availability: TimeSeries  # kW

    @cached_property
    def hourly_consumption(self) -> np.ndarray:
        """kWh per hour, equivalently average kW."""
        return resample_hourly(self.consumption).values

    @cached_property
    def hourly_availability(self) -> np.ndarray:
        return resample_hourly(self.availability).values

    @property
    def battery_capacity(self) -> float:
        return self.vehicle.battery_capacity

    @property
    def annual_consumption_kwh(self) -> float:
        """Driving consumption normalized to 365 days."""
        return self.consumption.total() * 35040 / len(self.consumption)


def generate_profile(profile_id: int, seed: int, config: GeneratorConfig) -> BevProfile:
    """Seed ``seed`` is split into independent streams for vehicle, mobility and chargers."""
    vehicle_ss, mobility_ss, charger_ss = np.random.SeedSequence(seed).spawn(3)
    cat = config.catalog
    vehicle = cat.models[pick(np.random.default_rng(vehicle_ss), cat.weights)]
    mob = generate_mobility(mobility_ss, config.rules, config.horizon_steps, config.start_weekday)
    try:
        avail = derive_grid_availability(mob, config.chargers, vehicle, charger_ss,
                                         config.reserve_fraction, config.charge_efficiency)
    except GenerationError as exc:
        raise GenerationError(f"profile {profile_id} (seed {seed}): {exc}") from None
    return BevProfile(profile_id, seed, vehicle, mob, derive_driving_consumption(mob, vehicle), avail)


def _generate(args):
    return generate_profile(*args)


class ProfilePool:
    def __init__(self, profiles, base_seed: int, config: GeneratorConfig):
        self.profiles = tuple(profiles)
        self.base_seed = int(base_seed)
        self.config = config
        self._by_id = {p.profile_id: p for p in self.profiles}
        if len(self._by_id) != len(self.profiles):
            raise InputError("duplicate profile ids in pool")

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    def __getitem__(self, profile_id: int) -> BevProfile:
        try:
            return self._by_id[int(profile_id)]
        except KeyError:
            raise InputError(f"profile id {profile_id} is not in the pool") from None

    @property
    def ids(self) -> list[int]:
        return [p.profile_id for p in self.profiles]

    @property
    def horizon_steps(self) -> int:
        return self.config.horizon_steps

    @property
    def horizon_hours(self) -> int:
        return self.config.horizon_steps // 4

    def mean_battery(self) -> float:
        return float(np.mean([p.battery_capacity for p in self.profiles]))

    def content_digest(self) -> str:
        h = hashlib.sha256()
        for p in self.profiles:
            h.update(f"{p.profile_id}:{p.seed}:{p.vehicle.name}".encode())
            for arr in (p.mobility.state, p.mobility.km, p.consumption.values, p.availability.values):
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    # -- serialization -------------------------------------------------

    def save(self, directory) -> Path:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        entries = []
        for p in self.profiles:
            sub = f"profile_{p.profile_id:04d}"
            (root / sub).mkdir(exist_ok=True)
            labels = np.array([DESTINATIONS[s] if s != DRIVING else "driving" for s in range(-1, len(DESTINATIONS))])
            _write_changes(root / sub / "mobility.csv", labels[p.mobility.state.astype(int) + 1])
            _write_changes(root / sub / "consumption.csv", p.consumption.values)
            _write_changes(root / sub / "availability.csv", p.availability.values)
            _write_trips(root / sub / "trips.csv", p.mobility.trips)
            entries.append({"profile_id": p.profile_id, "seed": p.seed, "directory": sub,
                            "vehicle": p.vehicle.as_dict(), "n_trips": len(p.mobility.trips)})
        manifest = {
            "format": POOL_FORMAT,
            "generator_version": __version__,
            "n_profiles": len(self.profiles),
            "base_seed": self.base_seed,
            "horizon_steps": self.config.horizon_steps,
            "config_digest": self.config.digest(),
            "encoding": "change-point rows (step_index,value); value holds until the next row",
            "config": self.config.raw,
            "profiles": entries,
        }
        with open(root / "manifest.yaml", "w") as fh:
            yaml.safe_dump(manifest, fh, sort_keys=False)
        return root

    @classmethod
    def load(cls, directory, ids=None) -> "ProfilePool":
        """Reload a saved pool; ``ids`` restricts loading to those profiles."""
        root = Path(directory)
        path = root / "manifest.yaml"
        if not path.exists():
            raise InputError(f"{root}: no pool manifest found")
        manifest = yaml.safe_load(path.read_text())
        if manifest.get("format") != POOL_FORMAT:
            raise InputError(f"{path}: unsupported pool format {manifest.get('format')!r}")
        config = config_from_dict(manifest["config"])
        horizon = int(manifest["horizon_steps"])
        wanted = None if ids is None else {int(i) for i in ids}
        profiles = []
        for e in manifest["profiles"]:
            if wanted is not None and int(e["profile_id"]) not in wanted:
                continue
            sub = root / e["directory"]
            vehicle = VehicleModel(**e["vehicle"])
            mob = profile_from_trips(_read_trips(sub / "trips.csv"), horizon)
            states = _read_changes(sub / "mobility.csv", horizon, str)
            expect = np.array(["driving" if s == DRIVING else DESTINATIONS[s] for s in mob.state])
            if not np.array_equal(states, expect):
                raise InputError(f"{sub}: mobility.csv disagrees with trips.csv")
            cons = TimeSeries(_read_changes(sub / "consumption.csv", horizon, float), CONSUMPTION)
            avail = TimeSeries(_read_changes(sub / "availability.csv", horizon, float), AVAILABILITY)
            profiles.append(BevProfile(int(e["profile_id"]), int(e["seed"]), vehicle, mob, cons, avail))
        if wanted is not None and len(profiles) != len(wanted):
            missing = sorted(wanted - {p.profile_id for p in profiles})
            raise InputError(f"{root}: profile ids {missing} are not in the pool")
        return cls(profiles, manifest["base_seed"], config)


def build_pool(n: int, base_seed: int, config: GeneratorConfig, workers: int = 1) -> ProfilePool:
    """Profile ``i`` is generated from seed ``base_seed + i``; results do not depend on ``workers``."""
    if n < 1:
        raise InputError("pool size must be >= 1")
    jobs = [(i, base_seed + i, config) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            profiles = list(ex.map(_generate, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        profiles = [_generate(j) for j in jobs]
    return ProfilePool(profiles, base_seed, config)


def _write_changes(path: Path, values: np.ndarray) -> None:
    idx = np.concatenate(([0], np.flatnonzero(values[1:] != values[:-1]) + 1))
    with open(path, "w", newline="") as fh:
        fh.write("step_index,value\n")
        for i in idx:
            v = values[i]
            fh.write(f"{i},{v if isinstance(v, str) else repr(float(v))}\n")


def _read_changes(path: Path, horizon: int, kind):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["step_index", "value"]:
        raise InputError(f"{path}: expected header step_index,value")
    steps = [int(r[0]) for r in rows[1:]]
    values = [kind(r[1]) for r in rows[1:]]
    if not steps or steps[0] != 0 or any(b <= a for a, b in zip(steps, steps[1:])) or steps[-1] >= horizon:
        raise InputError(f"{path}: step indices must start at 0 and increase within the horizon")
    lengths = np.diff(np.append(steps, horizon))
    return np.repeat(np.array(values, dtype=object if kind is str else float), lengths).astype(
        str if kind is str else float)


def _write_trips(path: Path, trips) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("trip_id,origin,destination,depart_step,arrive_step,km\n")
        for t in trips:
            fh.write(f"{t.trip_id},{t.origin},{t.destination},{t.depart_step},{t.arrive_step},{t.km!r}\n")


def _read_trips(path: Path) -> list[Trip]:
    with open(path, newline="") as fh:
        return [Trip(int(r["trip_id"]), r["origin"], r["destination"], int(r["depart_step"]),
                     int(r["arrive_step"]), float(r["km"])) for r in csv.DictReader(fh)]
