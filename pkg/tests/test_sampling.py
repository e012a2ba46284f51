import csv
import dataclasses
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from bevpsm.errors import InputError
from bevpsm.profiles import ProfilePool, TimeSeries
from bevpsm.sampling import (Sample, aggregate_characteristics, draw_grid, draw_sample, draw_sample_set,
                             nested_peak_fraction, read_sample_csv, sample_rng, scale_factor, scaled_consumption_gw,
                             trim_mask, trim_samples, write_sample_csv)


def test_scale_factor_examples():
    assert scale_factor(15_000_000, 60) == 250_000
    assert scale_factor(15_000_000, 75) == 200_000
    assert scale_factor(15_000_000, 5) == 3_000_000
    assert scale_factor(15_000_000, 7) == Fraction(15_000_000, 7)
    for bad in [(0, 5), (15_000_000, 0), (-1, 3)]:
        with pytest.raises(InputError):
            scale_factor(*bad)


@given(st.integers(1, 10**9), st.integers(1, 500))
def test_property_scale_times_count_is_fleet(fleet, n):
    assert scale_factor(fleet, n) * n == fleet


def test_sample_invariants():
    with pytest.raises(InputError):
        Sample(0, (1, 1))
    with pytest.raises(InputError):
        Sample(0, ())
    s = Sample(3, (4, 9, 2))
    assert s.n_profiles == 3 and s.scale == 5_000_000


def test_draw_whole_pool_and_too_many():
    ids = list(range(20))
    s = draw_sample(ids, 20, np.random.default_rng(0))
    assert sorted(s.profile_ids) == ids
    with pytest.raises(InputError):
        draw_sample(ids, 21, np.random.default_rng(0))
    with pytest.raises(InputError):
        draw_sample(ids, 0, np.random.default_rng(0))


def test_single_draw_is_uniform():
    ids = list(range(20))
    rng = np.random.default_rng(123)
    counts = np.bincount([draw_sample(ids, 1, rng).profile_ids[0] for _ in range(10_000)], minlength=20)
    expected = 10_000 / 20
    sigma = math.sqrt(10_000 * (1 / 20) * (19 / 20))
    assert np.all(np.abs(counts - expected) <= 3 * sigma)
    assert ((counts - expected) ** 2 / expected).sum() < 43.82  # chi-square, 19 dof, p = 0.001


def test_draw_determinism_and_stream_rule():
    ids = list(range(200))
    a = draw_sample(ids, 30, sample_rng(7, 30, 4))
    b = draw_sample(ids, 30, sample_rng(7, 30, 4))
    assert a == b
    # the substream of sample j does not depend on how many other samples are drawn
    assert draw_sample_set(ids, 30, 10, 7)[4].profile_ids == a.profile_ids
    assert draw_sample_set(ids, 30, 1, 7)[0] == draw_sample(ids, 30, sample_rng(7, 30, 0))


def test_overlap_across_samples_at_120_of_200():
    ids = list(range(200))
    sets = draw_sample_set(ids, 120, 10, 2024)
    for s in sets:
        assert len(set(s.profile_ids)) == 120
    overlaps = [len(set(a.profile_ids) & set(b.profile_ids)) for a in sets for b in sets if a is not b]
    assert min(overlaps) > 0  # two disjoint 120-subsets of 200 are impossible


def test_grid_reproducible_and_strategy_free():
    ids = list(range(200))
    g1 = draw_grid(ids, range(5, 121, 5), 10, 99)
    g2 = draw_grid(ids, range(5, 121, 5), 10, 99)
    assert sum(len(v) for v in g1.values()) == 240
    assert all(g1[n][j].profile_ids == g2[n][j].profile_ids for n in g1 for j in range(10))


def test_sample_csv_round_trip(tmp_path):
    samples = [s for v in draw_grid(list(range(50)), [2, 5], 3, 1).values() for s in v]
    write_sample_csv(samples, tmp_path / "s.csv")
    back = read_sample_csv(tmp_path / "s.csv")
    assert [(s.n_profiles, s.sample_id, s.profile_ids) for s in back] == \
        [(s.n_profiles, s.sample_id, s.profile_ids) for s in samples]
    (tmp_path / "bad.csv").write_text("a,b,c\n1,2,3\n")
    with pytest.raises(InputError):
        read_sample_csv(tmp_path / "bad.csv")


# -- aggregate statistics ---------------------------------------------------------


def test_single_profile_battery_total(small_pool):
    prof = next(p for p in small_pool if p.battery_capacity == 58.0)
    st_ = aggregate_characteristics(Sample(0, (prof.profile_id,)), small_pool)
    assert st_.total_battery_capacity_gwh == 870.0


def _read_change_points(path: Path, horizon: int) -> np.ndarray:
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    out = np.empty(horizon)
    for k, (step, val) in enumerate(rows):
        stop = int(rows[k + 1][0]) if k + 1 < len(rows) else horizon
        out[int(step):stop] = float(val)
    return out


def test_stats_match_brute_force_over_csv(small_pool, small_pool_dir):
    manifest = yaml.safe_load((small_pool_dir / "manifest.yaml").read_text())
    horizon = manifest["horizon_steps"]
    sample = Sample(0, (1, 4, 7, 10), 15_000_000)
    scale = 15_000_000 / 4
    battery = cons = 0.0
    hourly = np.zeros(horizon // 4)
    for entry in manifest["profiles"]:
        if entry["profile_id"] in sample.profile_ids:
            c = _read_change_points(small_pool_dir / entry["directory"] / "consumption.csv", horizon)
            battery += entry["vehicle"]["battery_capacity"]
            cons += c.sum() * 35040 / horizon
            hourly += c.reshape(-1, 4).sum(axis=1)
    got = aggregate_characteristics(sample, small_pool)
    assert got.total_battery_capacity_gwh == pytest.approx(scale * battery / 1e6, rel=1e-12)
    assert got.annual_driving_consumption_twh == pytest.approx(scale * cons / 1e9, rel=1e-12)
    assert got.peak_scaled_consumption_gw == pytest.approx(scale * hourly.max() / 1e6, rel=1e-12)
    with pytest.raises(InputError):
        aggregate_characteristics(Sample(0, (1, 999)), small_pool)


def test_annual_consumption_corridor(year_pool):
    inside = total = 0
    for n in range(5, 121, 5):
        for s in draw_sample_set(year_pool, n, 10, 2024):
            twh = aggregate_characteristics(s, year_pool).annual_driving_consumption_twh
            total += 1
            inside += 29.0 <= twh <= 38.0
    assert inside / total >= 0.9


def test_spike_arithmetic(small_pool):
    # five profiles, one of them with a single 25 kWh hour; at 15M each profile stands for 3M vehicles
    base = small_pool[0]
    profiles = []
    for i in range(5):
        vals = np.zeros(base.mobility.horizon)
        if i == 0:
            vals[40:44] = 25.0 / 4
        profiles.append(dataclasses.replace(base, profile_id=i, consumption=TimeSeries(vals, "consumption")))
    pool = ProfilePool(profiles, 0, small_pool.config)
    gw = scaled_consumption_gw(Sample(0, tuple(range(5))), pool)
    assert gw[10] == pytest.approx(75.0, rel=1e-12)
    assert np.count_nonzero(gw) == 1


# -- trimming ---------------------------------------------------------------------


def _planted_pool(small_pool, factor: float) -> ProfilePool:
    base = small_pool[0]
    profs = [dataclasses.replace(base, profile_id=i) for i in range(9)]
    profs.append(dataclasses.replace(base, profile_id=9, consumption=TimeSeries(
        base.consumption.values * factor, "consumption")))
    return ProfilePool(profs, 0, small_pool.config)


def test_trim_removes_planted_outlier(small_pool):
    pool = _planted_pool(small_pool, 1.10)
    samples = [Sample(i, (i,)) for i in range(10)]
    kept = trim_samples(samples, pool, 0.05)
    assert [s.sample_id for s in kept] == list(range(9))


def test_trim_identity_cases(small_pool):
    pool = _planted_pool(small_pool, 1.0)
    samples = [Sample(i, (i,)) for i in range(10)]
    assert trim_samples(samples, pool, 0.05) == samples
    outlier = _planted_pool(small_pool, 3.0)
    assert trim_samples(samples, outlier, math.inf) == samples
    with pytest.raises(InputError):
        trim_samples([], pool)


def test_trim_requires_both_criteria():
    from bevpsm.sampling import AggregateStats
    stats = [AggregateStats(100.0, 30.0, 0, 0, 0)] * 4 + [AggregateStats(100.0 * 1.2, 30.0, 0, 0, 0)]
    assert trim_mask(stats) == [True] * 4 + [False]


def test_nested_peaks_mostly_decrease(year_pool):
    assert nested_peak_fraction(year_pool, (5, 20), 50, seed=3) >= 0.8
    assert nested_peak_fraction(year_pool, (5, 20, 100), 50, seed=4) >= 0.8
