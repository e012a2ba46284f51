"""Experiment sweeps over (setting x fleet size x profile count x sample x strategy).

Results table (``results.csv``) columns, in order::

    setting, strategy, fleet_size, n_profiles, sample_id, bevs_per_profile,
    objective_eur, cost_delta_eur_per_bev_yr, runtime_s, status,
    cap:<tech>..., delta:<tech>...,
    cost_delta_eur, max_residual, profile_ids

Reference rows have strategy ``none``, fleet size and profile count 0, and
zero deltas. ``bevs_per_profile`` is written as an exact fraction. Only rows
that passed feasibility validation are written; failures go to ``failures.csv``.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy
import yaml

from .. import __version__
from ..errors import ConfigurationError
from ..model.config import apply_overrides, data_dir, load_system_config, resolve_system_path
from ..profiles import ProfilePool, build_pool, load_generator_config
from ..sampling import draw_grid, write_sample_csv
from .scenario import (REFERENCE, ScenarioConfig, ScenarioOutcome, annualization, compute_capacity_delta,
                       compute_cost_delta, run_isolated, run_scenario)

LEAD_COLUMNS = ["setting", "strategy", "fleet_size", "n_profiles", "sample_id", "bevs_per_profile",
                "objective_eur", "cost_delta_eur_per_bev_yr", "runtime_s", "status"]
TAIL_COLUMNS = ["cost_delta_eur", "max_residual", "profile_ids"]
INT_COLUMNS = {"fleet_size", "n_profiles", "sample_id"}
STR_COLUMNS = {"setting", "strategy", "status", "profile_ids"}
MODES = ("sequential", "timing", "parallel")


@dataclass
class ExperimentConfig:
    name: str
    settings: list[dict]  # {name, system, overrides}
    pool: dict
    sizes: list[int]
    samples_per_size: int
    strategies: list[str]
    fleet_sizes: list[int]
    master_seed: int
    solver: dict
    execution: dict
    raw: dict = field(default_factory=dict, repr=False)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]

    @property
    def mode(self) -> str:
        return self.execution.get("mode", "sequential")


DEFAULTS = {
    "name": "experiment",
    "settings": [{"name": "desk", "system": "desk", "overrides": {}}],
    "pool": {"directory": None, "size": 40, "base_seed": 1, "profiles_config": None, "workers": 1},
    "sizes": [2, 5, 10, 20],
    "samples_per_size": 10,
    "strategies": ["smart", "bidirectional"],
    "fleet_sizes": [15_000_000],
    "master_seed": 2024,
    "solver": {"tol": 1e-9, "time_limit": 600, "feasibility_tol": 1e-6, "export_mps": False},
    "execution": {"mode": "sequential", "workers": 1},
}


def experiment_from_dict(raw: dict, base: Path | None = None) -> ExperimentConfig:
    doc = copy.deepcopy(DEFAULTS)
    unknown = set(raw) - set(doc)
    if unknown:
        raise ConfigurationError(f"experiment: unknown keys {sorted(unknown)}")
    for k, v in raw.items():
        if isinstance(doc[k], dict) and isinstance(v, dict):
            bad = set(v) - set(doc[k])
            if bad:
                raise ConfigurationError(f"experiment.{k}: unknown keys {sorted(bad)}")
            doc[k].update(v)
        else:
            doc[k] = v
    settings = []
    for s in doc["settings"]:
        if isinstance(s, str):
            s = {"name": s, "system": s}
        if "system" not in s:
            raise ConfigurationError("experiment.settings: each entry needs a system")
        system = s["system"]
        if base is not None and (base / str(system)).exists():
            system = str((base / str(system)).resolve())
        settings.append({"name": str(s.get("name", Path(str(system)).stem)), "system": str(system),
                         "overrides": dict(s.get("overrides") or {})})
    doc["settings"] = settings
    if base is not None:
        for key in ("directory", "profiles_config"):
            v = doc["pool"].get(key)
            if v and not Path(v).is_absolute() and (base / v).exists():
                doc["pool"][key] = str((base / v).resolve())
    sizes = [int(n) for n in doc["sizes"]]
    if not sizes or min(sizes) < 1:
        raise ConfigurationError("experiment.sizes: need positive profile counts")
    if any(s not in ("smart", "bidirectional") for s in doc["strategies"]):
        raise ConfigurationError("experiment.strategies: use smart and/or bidirectional")
    if doc["execution"].get("mode", "sequential") not in MODES:
        raise ConfigurationError(f"experiment.execution.mode must be one of {MODES}")
    if int(doc["samples_per_size"]) < 1 or any(int(f) <= 0 for f in doc["fleet_sizes"]):
        raise ConfigurationError("experiment: samples_per_size and fleet_sizes must be positive")
    return ExperimentConfig(
        name=str(doc["name"]), settings=settings, pool=doc["pool"], sizes=sizes,
        samples_per_size=int(doc["samples_per_size"]), strategies=list(doc["strategies"]),
        fleet_sizes=[int(f) for f in doc["fleet_sizes"]], master_seed=int(doc["master_seed"]),
        solver=doc["solver"], execution=doc["execution"], raw=doc)


def load_experiment(path, overrides: dict | None = None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists() and (data_dir() / f"experiment_{path}.yaml").exists():
        p = data_dir() / f"experiment_{path}.yaml"
    if not p.exists():
        raise ConfigurationError(f"experiment configuration {path!r} not found")
    raw = yaml.safe_load(p.read_text()) or {}
    if "experiment" in raw:
        raw = raw["experiment"]
    if overrides:
        raw = apply_overrides(_with_defaults(raw), overrides)
    return experiment_from_dict(raw, p.parent)


def _with_defaults(raw: dict) -> dict:
    doc = copy.deepcopy(DEFAULTS)
    for k, v in raw.items():
        if isinstance(doc.get(k), dict) and isinstance(v, dict):
            doc[k].update(v)
        else:
            doc[k] = v
    return doc


# -- result table -------------------------------------------------------------


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[dict]
    failures: list[dict] = field(default_factory=list)

    def subset(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]

    def scenario_rows(self) -> list[dict]:
        return [r for r in self.rows if r["strategy"] != REFERENCE]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(r.get(c)) for c in self.columns])
        return path

    @classmethod
    def from_csv(cls, path) -> "ResultTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [{c: _parse(c, v) for c, v in zip(columns, line)} for line in reader]
        return cls(columns, rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(col: str, v: str):
    if v == "":
        return None
    if col in STR_COLUMNS:
        return v
    if col in INT_COLUMNS:
        return int(v)
    if col == "bevs_per_profile":
        return Fraction(v)
    return float(v)


def results_digest(path) -> str:
    """Digest of a results CSV with the runtime column blanked (timings never reproduce)."""
    table = ResultTable.from_csv(path)
    h = hashlib.sha256()
    h.update(",".join(table.columns).encode())
    for r in table.rows:
        h.update(",".join("" if c == "runtime_s" else _fmt(r[c]) for c in table.columns).encode())
    return h.hexdigest()


# -- sweep --------------------------------------------------------------------


def prepare_pool(exp: ExperimentConfig, outdir: Path) -> tuple[ProfilePool, Path]:
    pc = exp.pool
    if pc.get("directory") and (Path(pc["directory"]) / "manifest.yaml").exists():
        d = Path(pc["directory"])
        return ProfilePool.load(d), d
    first = load_system_config(exp.settings[0]["system"], exp.settings[0]["overrides"] or None)
    hours = first.horizon_hours
    for s in exp.settings[1:]:
        if load_system_config(s["system"], s["overrides"] or None).horizon_hours != hours:
            raise ConfigurationError("all settings of one experiment must share the horizon")
    gen = load_generator_config(pc.get("profiles_config"), overrides={
        "horizon_steps": hours * 4, "start_weekday": (first.start_hour // 24) % 7})
    pool = build_pool(int(pc["size"]), int(pc["base_seed"]), gen, workers=int(pc.get("workers") or 1))
    d = Path(pc["directory"]) if pc.get("directory") else outdir / "pool"
    pool.save(d)
    return pool, d


def scenario_grid(exp: ExperimentConfig, pool: ProfilePool, pool_dir: Path, mps_dir: Path | None = None):
    """References first (one per setting), then every BEV scenario; sample draws are shared across strategies."""
    grids = {f: draw_grid(pool, exp.sizes, exp.samples_per_size, exp.master_seed, f) for f in exp.fleet_sizes}
    solver = dict(tol=float(exp.solver.get("tol", 1e-9)),
                  time_limit=None if exp.solver.get("time_limit") is None else float(exp.solver["time_limit"]),
                  feasibility_tol=float(exp.solver.get("feasibility_tol", 1e-6)))
    refs, scen = [], []
    for s in exp.settings:
        ov = tuple(sorted(s["overrides"].items()))
        mps = (lambda tag: str(mps_dir / f"{tag}.mps")) if mps_dir else (lambda tag: None)
        refs.append(ScenarioConfig(s["name"], s["system"], system_overrides=ov, export_mps=mps(f"{s['name']}_reference"),
                                   **solver))
        for f in exp.fleet_sizes:
            for n in exp.sizes:
                for sample in grids[f][n]:
                    for strat in exp.strategies:
                        tag = f"{s['name']}_{strat}_{f}_{n}_{sample.sample_id}"
                        scen.append(ScenarioConfig(
                            s["name"], s["system"], strat, f, n, sample.sample_id, sample.profile_ids, str(pool_dir),
                            ov, export_mps=mps(tag), **solver))
    return refs, scen, grids


def execute(configs, mode: str = "sequential", workers: int = 1) -> list[ScenarioOutcome]:
    """Timing mode runs one scenario at a time in a fresh process; results keep input order."""
    if mode == "timing":
        return [run_isolated(c) for c in configs]
    if mode == "parallel" and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_safe_run, configs))
    return [_safe_run(c) for c in configs]


def _safe_run(cfg: ScenarioConfig) -> ScenarioOutcome:
    try:
        return run_scenario(cfg)
    except Exception as exc:  # recorded as a failed row; the sweep carries on
        return ScenarioOutcome(cfg, None, 0.0, "error", f"{type(exc).__name__}: {exc}")


def sweep(exp: ExperimentConfig, outdir, progress=None) -> ResultTable:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    pool, pool_dir = prepare_pool(exp, out)
    mps_dir = out / "mps" if exp.solver.get("export_mps") else None
    if mps_dir:
        mps_dir.mkdir(exist_ok=True)
    refs, scen, grids = scenario_grid(exp, pool, pool_dir, mps_dir)
    write_sample_csv([s for f in exp.fleet_sizes[:1] for n in exp.sizes for s in grids[f][n]], out / "samples.csv")
    mode, workers = exp.mode, int(exp.execution.get("workers", 1))

    ref_out = execute(refs, "timing" if mode == "timing" else "sequential")
    if progress:
        for o in ref_out:
            progress(o)
    if progress and mode != "parallel":
        outs = []
        for c in scen:
            o = execute([c], mode, workers)[0]
            progress(o)
            outs.append(o)
    else:
        outs = execute(scen, mode, workers)
    return build_table(ref_out, outs)


def build_table(ref_out: list[ScenarioOutcome], outs: list[ScenarioOutcome]) -> ResultTable:
    refs = {o.config.setting: o for o in ref_out}
    techs: list[str] = []
    for o in ref_out + outs:
        if o.result is not None:
            techs += [k for k in o.result.capacities if k not in techs]
    columns = LEAD_COLUMNS + [f"cap:{t}" for t in techs] + [f"delta:{t}" for t in techs] + TAIL_COLUMNS
    rows, failures = [], []
    for o in ref_out + outs:
        c = o.config
        ref = refs.get(c.setting)
        ok = o.status == "optimal" and o.result is not None and o.result.feasibility.passed
        ref_ok = ref is not None and ref.status == "optimal" and ref.result is not None
        if not ok or not ref_ok:
            failures.append({"setting": c.setting, "strategy": c.strategy, "fleet_size": c.fleet_size,
                             "n_profiles": c.n_profiles, "sample_id": c.sample_id, "status": o.status,
                             "message": o.message or ("reference failed" if not ref_ok else "")})
            continue
        res = o.result
        ann = o.extra.get("annualize", 1.0)
        row = {"setting": c.setting, "strategy": c.strategy, "fleet_size": c.fleet_size,
               "n_profiles": c.n_profiles, "sample_id": c.sample_id,
               "objective_eur": res.objective, "runtime_s": o.runtime_s, "status": o.status,
               "max_residual": max(res.feasibility.max_row_residual, res.feasibility.max_bound_violation),
               "profile_ids": ";".join(str(i) for i in c.profile_ids) or None}
        if c.is_reference:
            row.update(bevs_per_profile=None, cost_delta_eur_per_bev_yr=0.0, cost_delta_eur=0.0)
            deltas = {t: 0.0 for t in res.capacities}
        else:
            row.update(bevs_per_profile=Fraction(c.fleet_size, c.n_profiles),
                       cost_delta_eur_per_bev_yr=compute_cost_delta(res, ref.result, c.fleet_size, ann),
                       cost_delta_eur=(res.objective - ref.result.objective) * ann)
            deltas = compute_capacity_delta(res, ref.result)
        for t in techs:
            row[f"cap:{t}"] = res.capacities.get(t)
            row[f"delta:{t}"] = deltas.get(t)
        rows.append(row)
    return ResultTable(columns, rows, failures)


def versions() -> dict:
    return {"bevpsm": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pyyaml": yaml.__version__}


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(exp: ExperimentConfig, outdir, pool: ProfilePool | None = None, files=(), warnings=(),
                   extra: dict | None = None) -> Path:
    out = Path(outdir)
    systems = {}
    for s in exp.settings:
        p = resolve_system_path(s["system"])
        systems[s["name"]] = {"path": str(p), "sha256": file_sha256(p)}
    doc = {
        "kind": "bevpsm-experiment",
        "experiment": exp.raw,
        "config_hash": exp.digest(),
        "seeds": {"master_seed": exp.master_seed, "pool_base_seed": int(exp.pool["base_seed"])},
        "systems": systems,
        "versions": versions(),
        "pool": None if pool is None else {"size": len(pool), "config_digest": pool.config.digest(),
                                           "content_digest": pool.content_digest()},
        "files": {str(Path(f).relative_to(out)): file_sha256(f) for f in files},
        "warnings": list(warnings),
    }
    if extra:
        doc.update(extra)
    path = out / "manifest.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return path


def experiment_from_manifest(path) -> ExperimentConfig:
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict) or doc.get("kind") != "bevpsm-experiment":
        raise ConfigurationError(f"{path}: not an experiment manifest")
    for name, info in (doc.get("systems") or {}).items():
        p = Path(info["path"])
        if p.exists() and file_sha256(p) != info["sha256"]:
            raise ConfigurationError(f"{path}: system file for setting {name!r} changed since the manifest was written")
    return experiment_from_dict(doc["experiment"])
