"""Synthetic mobility time series at 15-minute resolution.

Each simulated day starts and ends parked at home. A day with ``k`` stops is a
tour home -> stop_1 -> ... -> stop_k -> home; a tour that cannot return home by
``rules.latest_return_step`` is redrawn (a bounded number of times, after which
the day is spent at home).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .config import DAY_TYPES, DESTINATIONS, STEP_HOURS, STEPS_PER_DAY, STEPS_PER_HOUR, MobilityRules, pick

DRIVING = -1
HOME = DESTINATIONS.index("home")
MAX_DAY_ATTEMPTS = 25


@dataclass(frozen=True)
class Trip:
    trip_id: int
    origin: str
    destination: str
    depart_step: int  # first driving step
    arrive_step: int  # first parked step at the destination
    km: float

    @property
    def steps(self) -> int:
        return self.arrive_step - self.depart_step

    @property
    def km_per_step(self) -> float:
        return self.km / self.steps


@dataclass(frozen=True)
class MobilityProfile:
    """``state[t]`` is a destination index while parked and ``DRIVING`` (-1) while on a trip."""

    state: np.ndarray
    trip_id: np.ndarray
    km: np.ndarray
    trips: tuple[Trip, ...]

    @property
    def horizon(self) -> int:
        return int(self.state.size)

    @property
    def total_km(self) -> float:
        return float(sum(t.km for t in self.trips))

    def location(self, step: int) -> str:
        s = int(self.state[step])
        return "driving" if s == DRIVING else DESTINATIONS[s]

    def parking_events(self) -> list[tuple[int, int, int]]:
        """Maximal runs of parking at one place as ``(start, stop, destination_index)``."""
        parked = self.state != DRIVING
        change = np.flatnonzero(np.diff(self.state)) + 1
        bounds = np.concatenate(([0], change, [self.state.size]))
        return [(int(a), int(b), int(self.state[a])) for a, b in zip(bounds[:-1], bounds[1:]) if parked[a]]

    def validate(self, max_km_per_step: float | None = None) -> None:
        n = self.state.size
        if n == 0 or n % STEPS_PER_DAY:
            raise InputError("mobility horizon must be a positive multiple of 96 steps")
        if self.state[0] != HOME or self.state[-1] != HOME:
            raise InputError("mobility profile must start and end parked at home")
        if (self.km < 0).any() or (self.km[self.state != DRIVING] != 0).any():
            raise InputError("km must be >= 0 and zero while parked")
        if max_km_per_step is not None and (self.km > max_km_per_step * (1 + 1e-12)).any():
            raise InputError("km per step exceeds the configured maximum speed")
        prev = "home"
        for t in self.trips:
            if t.origin != prev:
                raise InputError(f"trip {t.trip_id} departs from {t.origin}, vehicle is at {prev}")
            if self.state[t.depart_step - 1] != DESTINATIONS.index(t.origin):
                raise InputError(f"trip {t.trip_id}: origin does not match the parked state")
            if self.state[t.arrive_step] != DESTINATIONS.index(t.destination):
                raise InputError(f"trip {t.trip_id}: destination does not match the parked state")
            prev = t.destination


def day_type(day: int, start_weekday: int = 0) -> str:
    wd = (start_weekday + day) % 7
    return DAY_TYPES[0] if wd < 5 else DAY_TYPES[wd - 4]


def _draw_stops(rng, rules: MobilityRules, dt: str, k: int) -> list[str]:
    choice = rules.destination_choice[dt]
    names = [d for d in DESTINATIONS if d in choice]
    probs = np.array([choice[d] for d in names])
    no_home = np.where(np.array(names) == "home", 0.0, probs)
    if no_home.sum() <= 0:
        raise InputError(f"destination_choice.{dt}: no away-from-home destination has positive probability")
    stops: list[str] = []
    for i in range(k):
        # first and last stops leave home; never two home stops in a row
        at_home = i == 0 or i == k - 1 or stops[-1] == "home"
        stops.append(names[pick(rng, no_home if at_home else probs)])
    return stops


def _plan_day(rng, rules: MobilityRules, dt: str, k: int):
    """One attempt at a tour; ``None`` if it does not return home in time."""
    stops = _draw_stops(rng, rules, dt, k)
    hour = pick(rng, rules.departure_hour[stops[0]])
    step = hour * STEPS_PER_HOUR + int(rng.integers(STEPS_PER_HOUR))
    legs = []
    origin = "home"
    for i, dest in enumerate(stops + ["home"]):
        km = rules.distance_km[dest].sample(rng)
        speed = rules.speed_for(km)
        n = max(1, math.ceil(km / (speed * STEP_HOURS) - 1e-9))
        legs.append((origin, dest, step, step + n, km))
        step += n
        if dest != "home" or i < k:
            step += max(1, round(rules.dwell_hours[dest].sample(rng) * STEPS_PER_HOUR))
        if step > rules.latest_return_step:
            return None
        origin = dest
    return legs


def generate_mobility(seed, rules: MobilityRules, horizon: int, start_weekday: int = 0) -> MobilityProfile:
    """Deterministic for a fixed ``seed`` (int, ``SeedSequence`` or ``Generator``) and rules."""
    if horizon <= 0 or horizon % STEPS_PER_DAY:
        raise InputError(f"horizon must be a positive multiple of {STEPS_PER_DAY} steps, got {horizon}")
    rules.validate()
    rng = np.random.default_rng(seed)
    state = np.full(horizon, HOME, dtype=np.int8)
    trip_id = np.full(horizon, -1, dtype=np.int32)
    km = np.zeros(horizon)
    trips: list[Trip] = []
    counts = {dt: (np.array(list(t)), np.array(list(t.values()))) for dt, t in rules.trip_counts.items()}

    for day in range(horizon // STEPS_PER_DAY):
        dt = day_type(day, start_weekday)
        ks, ps = counts[dt]
        k = int(ks[pick(rng, ps)])
        legs = None
        for _ in range(MAX_DAY_ATTEMPTS if k else 0):
            legs = _plan_day(rng, rules, dt, k)
            if legs is not None:
                break
        if not legs:
            continue
        base = day * STEPS_PER_DAY
        for origin, dest, a, b, dist in legs:
            tid = len(trips)
            trips.append(Trip(tid, origin, dest, base + a, base + b, dist))
            state[base + a:base + b] = DRIVING
            trip_id[base + a:base + b] = tid
            km[base + a:base + b] = dist / (b - a)
            state[base + b:base + STEPS_PER_DAY] = DESTINATIONS.index(dest)
    return MobilityProfile(state, trip_id, km, tuple(trips))


def profile_from_trips(trips, horizon: int) -> MobilityProfile:
    """Rebuild the per-step series from a trip list (the serialization path)."""
    state = np.full(horizon, HOME, dtype=np.int8)
    trip_id = np.full(horizon, -1, dtype=np.int32)
    km = np.zeros(horizon)
    trips = tuple(trips)
    for i, t in enumerate(trips):
        stop = trips[i + 1].depart_step if i + 1 < len(trips) else horizon
        state[t.depart_step:t.arrive_step] = DRIVING
        trip_id[t.depart_step:t.arrive_step] = t.trip_id
        km[t.depart_step:t.arrive_step] = t.km / t.steps
        state[t.arrive_step:stop] = DESTINATIONS.index(t.destination)
    return MobilityProfile(state, trip_id, km, trips)
