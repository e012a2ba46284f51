"""Drawing profile samples from a pool, fleet scaling, aggregate statistics, trimming.

Streams: sample ``j`` of size ``n`` in a set drawn with ``master_seed`` uses
``PCG64(SeedSequence(master_seed, spawn_key=(n, j)))``. Each sample therefore
depends only on ``(master_seed, n, j)``, so sets are stable under parallel or
partial generation and identical across charging strategies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InputError
from .profiles.pool import ProfilePool


@dataclass(frozen=True)
class Sample:
    sample_id: int
    profile_ids: tuple[int, ...]
    fleet_size: int | Fraction = 15_000_000

    def __post_init__(self):
        if not self.profile_ids:
            raise InputError("a sample needs at least one profile")
        if len(set(self.profile_ids)) != len(self.profile_ids):
            raise InputError(f"sample {self.sample_id}: profile ids must be distinct")
        if self.fleet_size < 0:
            raise InputError("fleet size must be >= 0")

    @property
    def n_profiles(self) -> int:
        return len(self.profile_ids)

    @property
    def scale(self) -> Fraction:
        """Vehicles per profile, exact."""
        return Fraction(self.fleet_size) / self.n_profiles

    def with_fleet(self, fleet_size) -> "Sample":
        return Sample(self.sample_id, self.profile_ids, fleet_size)


@dataclass(frozen=True)
class AggregateStats:
    total_battery_capacity_gwh: float
    annual_driving_consumption_twh: float
    peak_scaled_consumption_gw: float
    mean_battery_kwh: float
    mean_annual_consumption_kwh: float


def scale_factor(fleet_size, n_profiles) -> Fraction:
    if not fleet_size > 0 or not n_profiles > 0:
        raise InputError("fleet size and profile count must both be > 0")
    return Fraction(fleet_size) / Fraction(n_profiles)


def sample_rng(master_seed: int, n_profiles: int, sample_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed,
                                                                      spawn_key=(n_profiles, sample_id))))


def draw_sample(pool: ProfilePool | list, n_profiles: int, rng: np.random.Generator,
                sample_id: int = 0, fleet_size=15_000_000) -> Sample:
    """Uniform draw without replacement; ``pool`` may also be a list of profile ids."""
    ids = pool.ids if isinstance(pool, ProfilePool) else list(pool)
    if not 1 <= n_profiles <= len(ids):
        raise InputError(f"cannot draw {n_profiles} profiles from a pool of {len(ids)}")
    picked = rng.choice(len(ids), size=n_profiles, replace=False)
    return Sample(sample_id, tuple(int(ids[k]) for k in picked), fleet_size)


def draw_sample_set(pool, n_profiles: int, n_samples: int, master_seed: int,
                    fleet_size=15_000_000) -> list[Sample]:
    """Independent samples; profiles return to the pool between samples."""
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    return [draw_sample(pool, n_profiles, sample_rng(master_seed, n_profiles, j), j, fleet_size)
            for j in range(n_samples)]


def draw_grid(pool, sizes, n_samples: int, master_seed: int, fleet_size=15_000_000) -> dict[int, list[Sample]]:
    return {int(n): draw_sample_set(pool, int(n), n_samples, master_seed, fleet_size) for n in sizes}


def scaled_consumption_gw(sample: Sample, pool: ProfilePool) -> np.ndarray:
    """Hourly aggregate driving consumption of the scaled sample, GW."""
    total = sum(pool[i].hourly_consumption for i in sample.profile_ids)
    return float(sample.scale) * total / 1e6


def aggregate_characteristics(sample: Sample, pool: ProfilePool) -> AggregateStats:
    profiles = [pool[i] for i in sample.profile_ids]
    s = sample.scale
    battery = sum(Fraction(p.battery_capacity) for p in profiles)
    annual = math.fsum(p.annual_consumption_kwh for p in profiles)
    peak = float(scaled_consumption_gw(sample, pool).max())
    return AggregateStats(
        total_battery_capacity_gwh=float(s * battery / 1_000_000),
        annual_driving_consumption_twh=float(s) * annual / 1e9,
        peak_scaled_consumption_gw=peak,
        mean_battery_kwh=float(battery / len(profiles)),
        mean_annual_consumption_kwh=annual / len(profiles),
    )


def trim_samples(samples, pool: ProfilePool, threshold: float = 0.05) -> list[Sample]:
    """Keep samples whose battery capacity and annual consumption are both within ``threshold``
    (relative) of the cross-sample means. An empty result is returned as-is."""
    samples = list(samples)
    if not samples:
        raise InputError("trim_samples needs at least one sample")
    stats = [aggregate_characteristics(s, pool) for s in samples]
    return [s for s, keep in zip(samples, trim_mask(stats, threshold)) if keep]


def trim_mask(stats: list[AggregateStats], threshold: float = 0.05) -> list[bool]:
    cap = np.array([a.total_battery_capacity_gwh for a in stats])
    use = np.array([a.annual_driving_consumption_twh for a in stats])

    def within(x):
        m = x.mean()
        if m == 0:
            return np.ones(x.size, dtype=bool)
        return np.abs(x - m) <= threshold * abs(m) * (1 + 1e-12)

    return list(within(cap) & within(use))


def nested_peak_fraction(pool: ProfilePool, sizes=(5, 20), n_draws: int = 50, seed: int = 0,
                         fleet_size=15_000_000) -> float:
    """Share of nested draws in which scaled peak driving consumption does not increase with size.

    Draw ``n`` ordered distinct ids; the first ``sizes[k]`` form the size-``k`` sample.
    """
    sizes = sorted(sizes)
    rng = np.random.default_rng(seed)
    ok = 0
    for j in range(n_draws):
        order = rng.permutation(pool.ids)[: sizes[-1]]
        peaks = [scaled_consumption_gw(Sample(j, tuple(int(i) for i in order[:n]), fleet_size), pool).max()
                 for n in sizes]
        ok += all(a >= b for a, b in zip(peaks, peaks[1:]))
    return ok / n_draws


def write_sample_csv(samples, path) -> Path:
    """Columns ``n_profiles,sample_id,profile_id``; one row per member, draw order preserved."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write("n_profiles,sample_id,profile_id\n")
        for s in samples:
            for pid in s.profile_ids:
                fh.write(f"{s.n_profiles},{s.sample_id},{pid}\n")
    return path


def read_sample_csv(path, fleet_size=15_000_000) -> list[Sample]:
    groups: dict[tuple[int, int], list[int]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n_profiles", "sample_id", "profile_id"]:
            raise InputError(f"{path}: expected columns n_profiles,sample_id,profile_id")
        for row in reader:
            groups.setdefault((int(row["n_profiles"]), int(row["sample_id"])), []).append(int(row["profile_id"]))
    out = []
    for (n, j), ids in groups.items():
        if len(ids) != n:
            raise InputError(f"{path}: sample ({n}, {j}) lists {len(ids)} profiles")
        out.append(Sample(j, tuple(ids), fleet_size))
    return out
