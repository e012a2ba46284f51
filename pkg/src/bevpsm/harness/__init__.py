from .report import FIGURES, Panel, emit_outputs, scatter_svg, summarize
from .scenario import (REFERENCE, SETTINGS, DeltaRecord, ScenarioConfig, ScenarioOutcome, SpikeStats, annualization,
                       compute_capacity_delta, compute_cost_delta, delta_record, reference_config, run_isolated,
                       run_scenario, spike_statistics, spike_threshold_gw)
from .sweep import (ExperimentConfig, ResultTable, build_table, execute, experiment_from_dict,
                    experiment_from_manifest, load_experiment, prepare_pool, results_digest, scenario_grid, sweep,
                    write_manifest)

__all__ = [
    "FIGURES", "Panel", "emit_outputs", "scatter_svg", "summarize",
    "REFERENCE", "SETTINGS", "DeltaRecord", "ScenarioConfig", "ScenarioOutcome", "SpikeStats", "annualization",
    "compute_capacity_delta", "compute_cost_delta", "delta_record", "reference_config", "run_isolated",
    "run_scenario", "spike_statistics", "spike_threshold_gw",
    "ExperimentConfig", "ResultTable", "build_table", "execute", "experiment_from_dict", "experiment_from_manifest",
    "load_experiment", "prepare_pool", "results_digest", "scenario_grid", "sweep", "write_manifest",
]
