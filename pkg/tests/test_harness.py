import csv
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from bevpsm.errors import ConfigurationError, InputError
from bevpsm.harness import (ResultTable, ScenarioConfig, compute_capacity_delta, compute_cost_delta, emit_outputs,
                            experiment_from_dict, load_experiment, results_digest, run_scenario, spike_statistics,
                            sweep)
from bevpsm.harness.sweep import _safe_run, build_table
from bevpsm.sampling import Sample


# -- deltas -----------------------------------------------------------------------


def test_cost_delta_examples():
    assert compute_cost_delta(1e9, 1e9, 15_000_000) == 0.0
    assert compute_cost_delta(1.75e9, 1.0e9, 15_000_000) == pytest.approx(50.0, rel=1e-15)
    assert compute_cost_delta(0.5e9, 2.0e9, 15_000_000) == pytest.approx(-100.0, rel=1e-15)
    # a week's objective difference scaled up to a year
    assert compute_cost_delta(1.0, 0.0, 1, annualize=8760 / 168) == pytest.approx(52.142857142857146)
    with pytest.raises(InputError):
        compute_cost_delta(2.0, 1.0, 0)


def test_capacity_delta_examples():
    ref = {"DE/li_ion/power": 10_000.0, "DE/pv": 5.0}
    assert compute_capacity_delta(dict(ref), ref) == {"DE/li_ion/power": 0.0, "DE/pv": 0.0}
    assert compute_capacity_delta({"DE/li_ion/power": 0.0, "DE/pv": 5.0}, ref)["DE/li_ion/power"] == -10_000.0
    with pytest.raises(InputError):
        compute_capacity_delta({"DE/pv": 1.0}, ref)


def test_spike_statistics(small_pool):
    quiet = spike_statistics(Sample(0, (0,), 15_000_000), small_pool, threshold_gw=1e9)
    assert quiet.hours_above_consumption == 0
    s = spike_statistics(Sample(0, (0, 1, 2, 3, 4), 15_000_000), small_pool)
    assert s.threshold_gw == 100.0
    assert s.peak_consumption_gw > 0
    assert spike_statistics(Sample(0, (0, 1), 15_000_000), small_pool, 7_500_000).threshold_gw == 50.0


# -- single scenarios -------------------------------------------------------------


def test_run_scenario_deterministic(small_pool_dir):
    cfg = ScenarioConfig("desk", "desk", "bidirectional", 1_000_000, 2, 0, (3, 5), str(small_pool_dir))
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a.status == b.status == "optimal"
    assert a.result.objective == b.result.objective
    assert a.result.capacities == b.result.capacities
    assert a.runtime_s > 0


def test_scenario_config_validation(small_pool_dir):
    with pytest.raises(InputError):
        ScenarioConfig("desk", "desk", "smart", 1, 3, 0, (1, 2), str(small_pool_dir))
    with pytest.raises(InputError):
        ScenarioConfig("desk", "desk", "sometimes")
    with pytest.raises(InputError):
        ScenarioConfig("desk", "desk", "smart", 1, 1, 0, (1,), None)


def test_failed_scenario_is_recorded_not_raised(tmp_path):
    bad = ScenarioConfig("desk", "desk", "smart", 1000, 1, 0, (0,), str(tmp_path / "missing"))
    out = _safe_run(bad)
    assert out.status == "error" and out.result is None
    ref = run_scenario(ScenarioConfig("desk", "desk"))
    table = build_table([ref], [out])
    assert len(table.rows) == 1 and table.rows[0]["strategy"] == "none"
    assert table.failures[0]["status"] == "error"


# -- sweeps -----------------------------------------------------------------------


SMALL = {"name": "small", "pool": {"size": 6, "base_seed": 5}, "sizes": [1, 3], "samples_per_size": 2,
         "execution": {"mode": "sequential"}}


@pytest.fixture(scope="module")
def small_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    exp = experiment_from_dict(SMALL)
    table = sweep(exp, out)
    files, warnings = emit_outputs(table, out)
    return exp, table, out, files, warnings


def test_sweep_row_count_and_order(small_sweep):
    exp, table, *_ = small_sweep
    assert not table.failures
    assert len(table.rows) == 1 + 2 * 2 * 2
    assert table.rows[0]["strategy"] == "none"
    assert table.rows[0]["cost_delta_eur_per_bev_yr"] == 0.0


def test_sweep_shares_samples_across_strategies(small_sweep):
    _, table, *_ = small_sweep
    for n in (1, 3):
        for j in range(2):
            ids = {r["strategy"]: r["profile_ids"] for r in table.subset(n_profiles=n, sample_id=j)}
            assert ids["smart"] == ids["bidirectional"]
            assert len(ids["smart"].split(";")) == n


def test_sweep_strategy_ordering_and_metric(small_sweep):
    _, table, *_ = small_sweep
    for n in (1, 3):
        for j in range(2):
            obj = {r["strategy"]: r["objective_eur"] for r in table.subset(n_profiles=n, sample_id=j)}
            assert obj["bidirectional"] <= obj["smart"] * (1 + 1e-9)
    for r in table.scenario_rows():
        assert r["bevs_per_profile"] == Fraction(15_000_000, r["n_profiles"])


def test_results_csv_round_trip(small_sweep, tmp_path):
    _, table, out, *_ = small_sweep
    back = ResultTable.from_csv(out / "results.csv")
    assert back.columns == table.columns
    assert back.rows == table.rows
    assert results_digest(back.to_csv(tmp_path / "again.csv")) == results_digest(out / "results.csv")


def test_deltas_agree_with_independent_csv_diff(small_sweep):
    _, _, out, *_ = small_sweep
    with open(out / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    ref = next(r for r in rows if r["strategy"] == "none")
    caps = [c[4:] for c in rows[0] if c.startswith("cap:")]
    for r in rows:
        if r["strategy"] == "none":
            continue
        for t in caps:
            assert float(r[f"delta:{t}"]) == float(r[f"cap:{t}"]) - float(ref[f"cap:{t}"])
        diff = (float(r["objective_eur"]) - float(ref["objective_eur"])) * (8760 / 168)
        assert float(r["cost_delta_eur_per_bev_yr"]) == pytest.approx(diff / int(r["fleet_size"]), rel=1e-12)


def test_figures_hold_one_point_per_row(small_sweep):
    _, table, out, files, warnings = small_sweep
    assert not warnings
    for strat in ("smart", "bidirectional"):
        n_rows = len(table.subset(strategy=strat))
        root = ET.parse(out / f"cost_delta_vs_profiles_{strat}.svg").getroot()
        circles = [e for e in root.iter() if e.tag.endswith("circle")]
        assert len(circles) == n_rows
        cap = ET.parse(out / f"capacity_delta_vs_profiles_{strat}.svg").getroot()
        for panel in (e for e in cap.iter() if e.get("class") == "panel"):
            assert int(panel.get("data-points")) == n_rows
    with open(out / "summary.csv", newline="") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 4 and all(int(s["n_samples"]) == 2 for s in summary)


def test_missing_strategy_gives_warning(small_sweep, tmp_path):
    _, table, *_ = small_sweep
    only_smart = ResultTable(table.columns, [r for r in table.rows if r["strategy"] != "bidirectional"])
    files, warnings = emit_outputs(only_smart, tmp_path)
    assert len(warnings) == 4 and all("bidirectional" in w for w in warnings)
    assert not any("bidirectional" in f.name for f in files)
    with pytest.raises(InputError):
        emit_outputs(ResultTable(table.columns, []), tmp_path)


def test_experiment_config_checks(tmp_path):
    with pytest.raises(ConfigurationError):
        experiment_from_dict({"sizes": [0]})
    with pytest.raises(ConfigurationError):
        experiment_from_dict({"strategies": ["reckless"]})
    with pytest.raises(ConfigurationError):
        experiment_from_dict({"bogus": 1})
    with pytest.raises(ConfigurationError):
        experiment_from_dict({"solver": {"tolerance": 1}})
    desk = load_experiment("desk")
    assert desk.sizes == [2, 5, 10, 20] and desk.samples_per_size == 10 and desk.mode == "timing"
    full = load_experiment("full")
    assert len(full.sizes) == 24 and len(full.settings) == 4
    assert load_experiment("desk", {"samples_per_size": 3}).samples_per_size == 3
