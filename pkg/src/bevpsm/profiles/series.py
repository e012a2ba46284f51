"""Driving-consumption and grid-availability series derived from a mobility profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GenerationError, InputError
from .config import DESTINATIONS, STEP_HOURS, STEPS_PER_HOUR, ChargerDistribution, VehicleModel
from .mobility import DRIVING, MobilityProfile

CONSUMPTION = "consumption"  # kWh per step
AVAILABILITY = "availability"  # kW
QUARTER_HOURLY = "15min"
HOURLY = "hourly"

MAX_CYCLE_PASSES = 20


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    kind: str
    resolution: str = QUARTER_HOURLY

    def __post_init__(self):
        if self.kind not in (CONSUMPTION, AVAILABILITY):
            raise InputError(f"unknown series kind {self.kind!r}")
        if self.resolution not in (QUARTER_HOURLY, HOURLY):
            raise InputError(f"unknown resolution {self.resolution!r}")
        if self.values.ndim != 1 or (self.values < 0).any() or not np.isfinite(self.values).all():
            raise InputError(f"{self.kind} series must be a finite, non-negative vector")

    def __len__(self) -> int:
        return int(self.values.size)

    def total(self) -> float:
        return float(self.values.sum())


def derive_driving_consumption(p: MobilityProfile, v: VehicleModel) -> TimeSeries:
    return TimeSeries(p.km * v.drive_consumption, CONSUMPTION)


def resample_hourly(s: TimeSeries) -> TimeSeries:
    """Consumption is summed over the four quarters; availability is their mean."""
    if s.resolution != QUARTER_HOURLY:
        raise InputError("resample_hourly expects a 15-minute series")
    if len(s) % STEPS_PER_HOUR:
        raise InputError(f"series length {len(s)} is not divisible by {STEPS_PER_HOUR}")
    q = s.values.reshape(-1, STEPS_PER_HOUR)
    values = q.sum(axis=1) if s.kind == CONSUMPTION else q.mean(axis=1)
    return TimeSeries(values, s.kind, HOURLY)


def charger_rating(c: ChargerDistribution, v: VehicleModel, dest: str) -> float:
    """A parked vehicle draws at most the lower of the station rating and its on-board AC limit."""
    return min(c.power_kw[dest], v.max_home_charge)


def derive_grid_availability(p: MobilityProfile, c: ChargerDistribution, v: VehicleModel, seed,
                             reserve_fraction: float = 0.1, charge_efficiency: float = 0.95) -> TimeSeries:
    """Parked availability from one charger draw per parking event, plus en-route fast-charge windows.

    Windows are placed by a forward SOC replay that charges at full
    availability: a driving step that would take the battery below
    ``reserve_fraction`` of its capacity becomes a window at
    ``v.max_fast_charge``. The replay is repeated from the end-of-horizon SOC
    until it reaches a fixed point, so the result also admits a cyclic schedule.
    """
    rng = np.random.default_rng(seed)
    avail = np.zeros(p.horizon)
    for a, b, dest in p.parking_events():
        name = DESTINATIONS[dest]
        if rng.random() < c.probability[name]:
            avail[a:b] = charger_rating(c, v, name)
    consumption = p.km * v.drive_consumption
    E = v.battery_capacity
    soc0 = E
    for _ in range(MAX_CYCLE_PASSES):
        end = _replay_with_windows(p, consumption, avail, v, soc0, reserve_fraction, charge_efficiency)
        if abs(end - soc0) <= 1e-9 * E:
            return TimeSeries(avail, AVAILABILITY)
        soc0 = end
    raise GenerationError("state of charge does not settle over repeated years; check charger probabilities")


def _replay_with_windows(p, consumption, avail, v, soc, reserve_fraction, eff) -> float:
    E = v.battery_capacity
    reserve = reserve_fraction * E
    fast = v.max_fast_charge * STEP_HOURS * eff
    for a, b, kind in _segments(p.state):
        if kind != DRIVING:
            if avail[a]:
                soc = min(E, soc + avail[a] * STEP_HOURS * eff * (b - a))
            continue
        for t in range(a, b):
            gain = avail[t] * STEP_HOURS * eff
            nxt = min(E, soc + gain) - consumption[t]
            if nxt < reserve and not avail[t]:
                avail[t] = v.max_fast_charge
                nxt = min(E, soc + fast) - consumption[t]
            if nxt < 0:
                tid = int(p.trip_id[t])
                raise GenerationError(
                    f"trip {tid} ({p.trips[tid].origin} -> {p.trips[tid].destination}, "
                    f"{p.trips[tid].km:.1f} km) is infeasible even with continuous fast charging")
            soc = nxt
    return soc


def _segments(state: np.ndarray):
    change = np.flatnonzero(np.diff(state)) + 1
    bounds = np.concatenate(([0], change, [state.size]))
    for a, b in zip(bounds[:-1], bounds[1:]):
        yield int(a), int(b), int(state[a])


def simulate_soc(consumption: np.ndarray, availability: np.ndarray, capacity: float,
                 efficiency: float = 0.95, soc0: float | None = None) -> np.ndarray:
    """Step-by-step SOC when charging at full availability; entries may go negative (no clipping at 0)."""
    soc = capacity if soc0 is None else soc0
    gain = availability * STEP_HOURS * efficiency
    out = np.empty(consumption.size)
    for t in range(consumption.size):
        soc = min(capacity, soc + gain[t]) - consumption[t]
        out[t] = soc
    return out


def fast_charge_windows(p: MobilityProfile, availability: TimeSeries) -> np.ndarray:
    """Steps where the vehicle is driving and can charge."""
    return np.flatnonzero((p.state == DRIVING) & (availability.values > 0))
