import copy

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bevpsm.errors import ConfigurationError, GenerationError, InputError
from bevpsm.profiles import (DRIVING, ChargerDistribution, MobilityProfile, ProfilePool, TimeSeries, Trip,
                             VehicleModel, build_pool, config_from_dict, default_config,
                             derive_driving_consumption, derive_grid_availability, fast_charge_windows,
                             generate_mobility, generate_profile, profile_from_trips, resample_hourly, simulate_soc)
from bevpsm.profiles.config import DESTINATIONS, pick
from oracles import replay_daily_km

ID3 = VehicleModel("id3", 58.0, 0.166, 11.0, 100.0)
ALWAYS = ChargerDistribution({d: 1.0 for d in DESTINATIONS}, {d: 11.0 for d in DESTINATIONS})
HOME_ONLY = ChargerDistribution({d: float(d == "home") for d in DESTINATIONS}, {d: 11.0 for d in DESTINATIONS})


def two_day_trip(km: float, steps: int) -> MobilityProfile:
    """Out to leisure on day 1 at 08:00, back at 18:00 on day 2."""
    out = Trip(0, "home", "leisure", 32, 32 + steps, km)
    back = Trip(1, "leisure", "home", 96 + 72, 96 + 72 + steps, km)
    return profile_from_trips([out, back], 192)


# -- mobility -------------------------------------------------------------------


def test_zero_trip_counts_stay_home():
    raw = copy.deepcopy(default_config().raw)
    for dt in raw["mobility"]["trip_counts"]:
        raw["mobility"]["trip_counts"][dt] = {0: 1.0}
    cfg = config_from_dict(raw)
    p = generate_mobility(5, cfg.rules, 96 * 14)
    assert p.trips == ()
    assert (p.state == DESTINATIONS.index("home")).all()
    assert p.km.sum() == 0.0


def test_same_seed_bit_identical():
    rules = default_config().rules
    a = generate_mobility(42, rules, 96 * 30)
    b = generate_mobility(42, rules, 96 * 30)
    assert np.array_equal(a.state, b.state) and np.array_equal(a.km, b.km) and a.trips == b.trips
    c = generate_mobility(43, rules, 96 * 30)
    assert not np.array_equal(a.km, c.km)


def test_year_km_matches_replay_and_corridor():
    cfg = default_config()
    mobility_seed = np.random.SeedSequence(1).spawn(3)[1]
    p = generate_mobility(mobility_seed, cfg.rules, 35040)
    replay = replay_daily_km(np.random.SeedSequence(1).spawn(3)[1], cfg.raw, 365)
    assert p.total_km == pytest.approx(sum(replay), rel=1e-9)
    assert p.km.sum() == pytest.approx(sum(replay), rel=1e-9)
    per_day = p.km.reshape(365, 96).sum(axis=1)
    assert np.allclose(per_day, replay, rtol=1e-9, atol=1e-9)
    lo, hi = cfg.raw["plausibility"]["annual_km"]
    assert lo <= p.total_km <= hi


def test_horizon_must_be_whole_days():
    with pytest.raises(InputError):
        generate_mobility(1, default_config().rules, 100)


@pytest.mark.parametrize("path,value", [
    (("mobility", "trip_counts", "weekday", 0), 0.5),
    (("mobility", "destination_choice", "sunday", "leisure"), 0.0),
    (("mobility", "departure_hour", "workplace", 7), 2.0),
])
def test_bad_probability_table_named(path, value):
    raw = copy.deepcopy(default_config().raw)
    node = raw
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    with pytest.raises(ConfigurationError, match=".".join(str(p) for p in path[1:3])):
        config_from_dict(raw)


def test_vehicle_invariants():
    with pytest.raises(ConfigurationError):
        VehicleModel("x", 0.0, 0.15, 11, 50)
    with pytest.raises(ConfigurationError):
        VehicleModel("x", 50.0, 0.15, 22, 11)


@given(st.integers(0, 2**63 - 1), st.integers(0, 6))
def test_property_mobility_invariants(seed, weekday):
    cfg = default_config()
    p = generate_mobility(seed, cfg.rules, 96 * 7, weekday)
    p.validate(max_km_per_step=cfg.rules.max_speed_kmh * 0.25)
    prev = "home"
    for t in p.trips:
        assert t.origin == prev
        prev = t.destination
    assert prev == "home"
    assert p.location(0) == "home" and p.location(p.horizon - 1) == "home"
    assert (p.trip_id[p.state == DRIVING] >= 0).all()


# -- consumption ----------------------------------------------------------------


def test_consumption_direct_product():
    p = profile_from_trips([Trip(0, "home", "shopping", 10, 11, 5.0), Trip(1, "shopping", "home", 20, 21, 5.0)], 96)
    c = derive_driving_consumption(p, VehicleModel("v", 50, 0.15, 11, 50))
    assert c.values[10] == pytest.approx(0.75, abs=1e-15)
    assert c.values[15] == 0.0
    assert c.values.sum() == pytest.approx(1.5)


def test_consumption_year_sum_matches_trip_list(year_pool):
    for prof in list(year_pool)[:20]:
        expect = sum(t.km for t in prof.mobility.trips) * prof.vehicle.drive_consumption
        assert prof.consumption.total() == pytest.approx(expect, rel=1e-9)


# -- availability -----------------------------------------------------------------


def test_home_charger_full_event():
    p = two_day_trip(60.0, 3)
    a = derive_grid_availability(p, HOME_ONLY, ID3, 0)
    for start, stop, dest in p.parking_events():
        if DESTINATIONS[dest] == "home":
            assert (a.values[start:stop] == 11.0).all()
        else:
            assert (a.values[start:stop] == 0.0).all()


def test_one_draw_per_parking_event(small_pool):
    for prof in small_pool:
        for start, stop, _ in prof.mobility.parking_events():
            assert np.unique(prof.availability.values[start:stop]).size == 1


def test_availability_capped_by_onboard_charger():
    fast_station = ChargerDistribution({d: 1.0 for d in DESTINATIONS}, {d: 22.0 for d in DESTINATIONS})
    a = derive_grid_availability(two_day_trip(30.0, 2), fast_station, ID3, 0)
    assert a.values.max() == 11.0


def test_short_trip_needs_no_window():
    km = 40.0 / ID3.drive_consumption  # 40 kWh < 0.9 * 58
    p = two_day_trip(km, 9)
    assert fast_charge_windows(p, derive_grid_availability(p, ALWAYS, ID3, 0)).size == 0
    # without a charger at the destination the return leg is what needs a window
    windows = fast_charge_windows(p, derive_grid_availability(p, HOME_ONLY, ID3, 0))
    assert windows.size and windows.min() >= p.trips[1].depart_step


def test_long_trip_gets_minimal_windows():
    km = 70.0 / ID3.drive_consumption
    p = two_day_trip(km, 15)
    a = derive_grid_availability(p, HOME_ONLY, ID3, 0)
    windows = fast_charge_windows(p, a)
    assert windows.size > 0
    assert (a.values[windows] == ID3.max_fast_charge).all()
    cons = derive_driving_consumption(p, ID3).values
    soc = simulate_soc(cons, a.values, ID3.battery_capacity)
    assert soc.min() >= 0.1 * ID3.battery_capacity - 1e-9
    # no window is redundant: dropping any one breaches the reserve
    for w in windows:
        trimmed = a.values.copy()
        trimmed[w] = 0.0
        assert simulate_soc(cons, trimmed, ID3.battery_capacity).min() < 0.1 * ID3.battery_capacity
    # latest placement: the first window comes after the battery has drained to near the reserve
    first = windows[windows < 96][0]
    assert soc[first - 1] - cons[first] < 0.1 * ID3.battery_capacity


def test_infeasible_trip_named():
    weak = VehicleModel("weak", 30.0, 0.3, 11.0, 11.0)
    p = two_day_trip(600.0, 20)
    with pytest.raises(GenerationError, match="trip 0"):
        derive_grid_availability(p, HOME_ONLY, weak, 0)


@given(st.integers(0, 2**32 - 1))
def test_property_series_invariants(seed):
    cfg = default_config(96 * 7)
    prof = generate_profile(0, seed, cfg)
    c, a = prof.consumption.values, prof.availability.values
    driving = prof.mobility.state == DRIVING
    assert (c >= 0).all() and (a >= 0).all()
    assert (c[~driving] == 0).all()
    en_route = driving & (a > 0)
    assert (a[en_route] == prof.vehicle.max_fast_charge).all()
    # energy feasibility from a full battery and again from the end-of-horizon level
    soc = simulate_soc(c, a, prof.battery_capacity, cfg.charge_efficiency)
    assert soc.min() >= -1e-9
    again = simulate_soc(c, a, prof.battery_capacity, cfg.charge_efficiency, soc0=soc[-1])
    assert again.min() >= -1e-9


# -- resampling -------------------------------------------------------------------


def test_resample_examples():
    assert resample_hourly(TimeSeries(np.full(4, 0.5), "consumption")).values.tolist() == [2.0]
    assert resample_hourly(TimeSeries(np.array([11.0, 11.0, 0.0, 0.0]), "availability")).values.tolist() == [5.5]
    assert resample_hourly(TimeSeries(np.zeros(4), "consumption")).values.tolist() == [0.0]
    with pytest.raises(InputError):
        resample_hourly(TimeSeries(np.zeros(6), "consumption"))
    with pytest.raises(InputError):
        resample_hourly(resample_hourly(TimeSeries(np.zeros(8), "availability")))


@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=40))
def test_property_resampling_conserves_energy(vals):
    v = np.repeat(np.asarray(vals), 4) / 3.0
    h = resample_hourly(TimeSeries(v, "consumption"))
    assert h.values.sum() == pytest.approx(v.sum(), rel=1e-9, abs=1e-12)
    av = resample_hourly(TimeSeries(v, "availability"))
    assert (av.values * 1.0).sum() == pytest.approx(v.sum() * 0.25, rel=1e-9, abs=1e-12)


def test_pool_year_conservation(year_pool):
    for prof in list(year_pool)[:20]:
        assert prof.hourly_consumption.sum() == pytest.approx(prof.consumption.total(), rel=1e-9)


# -- pools ------------------------------------------------------------------------


def test_pool_sizes_and_mean_battery(year_pool):
    assert len(year_pool) == 200
    lo, hi = default_config().raw["plausibility"]["mean_battery_kwh"]
    assert lo <= year_pool.mean_battery() <= hi
    assert year_pool.ids == list(range(200))
    single = build_pool(1, 7, default_config(96))
    assert len(single) == 1 and single[0].seed == 7


def test_pool_vehicle_mix_follows_weights(year_pool):
    cfg = default_config()
    names = [p.vehicle.name for p in year_pool]
    observed = np.array([names.count(m.name) for m in cfg.catalog.models])
    expected = np.array(cfg.catalog.weights) * len(names)
    chi2 = ((observed - expected) ** 2 / expected).sum()
    assert chi2 < 16.27  # 3 degrees of freedom, p = 0.001


def test_pool_round_trip_bit_exact(small_pool, tmp_path):
    small_pool.save(tmp_path / "a")
    back = ProfilePool.load(tmp_path / "a")
    assert back.content_digest() == small_pool.content_digest()
    for x, y in zip(small_pool, back):
        assert np.array_equal(x.consumption.values, y.consumption.values)
        assert np.array_equal(x.availability.values, y.availability.values)
        assert x.mobility.trips == y.mobility.trips and x.vehicle == y.vehicle
    back.save(tmp_path / "b")
    for f in sorted((tmp_path / "a").rglob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_pool_partial_load(small_pool_dir):
    part = ProfilePool.load(small_pool_dir, ids=[3, 1])
    assert sorted(part.ids) == [1, 3]
    with pytest.raises(InputError):
        ProfilePool.load(small_pool_dir, ids=[999])
    with pytest.raises(InputError):
        part[7]


def test_parallel_generation_matches_sequential(week_config):
    a = build_pool(6, 30, week_config, workers=1)
    b = build_pool(6, 30, week_config, workers=2)
    assert a.content_digest() == b.content_digest()


def test_generation_error_names_profile():
    raw = copy.deepcopy(default_config(96 * 7).raw)
    raw["vehicles"] = [{"name": "weak", "battery_capacity": 20, "drive_consumption": 0.4,
                        "max_home_charge": 3, "max_fast_charge": 3, "weight": 1.0}]
    raw["mobility"]["distance_km"]["edges"] = [300, 400]
    for d in DESTINATIONS:
        raw["mobility"]["distance_km"][d] = [1.0]
    for dt in raw["mobility"]["trip_counts"]:
        raw["mobility"]["trip_counts"][dt] = {1: 1.0}
    raw["mobility"]["dwell_hours"]["edges"] = [0.25, 0.5]
    for d in DESTINATIONS:
        raw["mobility"]["dwell_hours"][d] = [1.0]
    cfg = config_from_dict(raw)
    with pytest.raises(GenerationError, match="profile 0"):
        build_pool(1, 0, cfg)


def test_pick_is_unbiased():
    rng = np.random.default_rng(0)
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    draws = np.bincount([pick(rng, probs) for _ in range(20000)], minlength=4)
    expected = probs * 20000
    assert ((draws - expected) ** 2 / expected).sum() < 16.27
    assert all(pick(rng, [0.0, 1.0, 0.0]) == 1 for _ in range(100))
