"""Single scenario runs, deltas to the reference, and spike statistics."""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import InputError
from ..lp import write_mps
from ..model import attach_bev_block, build_reference_model, extract_solution, load_system_config, solve_model
from ..model.results import ScenarioResult
from ..profiles import ProfilePool
from ..sampling import Sample, scale_factor, scaled_consumption_gw

SETTINGS = ("island", "hydrogen", "interconnected", "stylized")
REFERENCE = "none"
REFERENCE_FLEET = 15_000_000
SPIKE_THRESHOLD_GW = 100.0  # at REFERENCE_FLEET, scaled linearly with fleet size


@dataclass(frozen=True)
class ScenarioConfig:
    setting: str  # label; usually the system config's name
    system: str  # bundled system name or path
    strategy: str = REFERENCE  # none | smart | bidirectional
    fleet_size: int = 0
    n_profiles: int = 0
    sample_id: int = 0
    profile_ids: tuple[int, ...] = ()
    pool_dir: str | None = None
    system_overrides: tuple[tuple[str, object], ...] = ()
    tol: float = 1e-9
    time_limit: float | None = 600.0
    feasibility_tol: float = 1e-6
    export_mps: str | None = None  # also write the model here (outside the timed span)

    def __post_init__(self):
        if self.strategy not in (REFERENCE, "smart", "bidirectional"):
            raise InputError(f"unknown strategy {self.strategy!r}")
        if self.strategy != REFERENCE:
            if self.n_profiles != len(self.profile_ids) or not self.profile_ids:
                raise InputError("scenario needs n_profiles matching its profile_ids")
            if self.pool_dir is None:
                raise InputError("scenario needs a pool directory")
            if self.fleet_size < 0:
                raise InputError("fleet size must be >= 0")

    @property
    def is_reference(self) -> bool:
        return self.strategy == REFERENCE

    @property
    def key(self) -> tuple:
        return (self.setting, self.strategy, self.fleet_size, self.n_profiles, self.sample_id)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["profile_ids"] = list(self.profile_ids)
        d["system_overrides"] = dict(self.system_overrides)
        return d


@dataclass
class ScenarioOutcome:
    config: ScenarioConfig
    result: ScenarioResult | None
    runtime_s: float
    status: str
    message: str = ""
    extra: dict = field(default_factory=dict)


def run_scenario(cfg: ScenarioConfig) -> ScenarioOutcome:
    """Load inputs, build, solve and extract; runtime spans data loading through solving."""
    t0 = time.perf_counter()
    system = load_system_config(cfg.system, dict(cfg.system_overrides) or None)
    m = build_reference_model(system)
    if not cfg.is_reference:
        pool = ProfilePool.load(cfg.pool_dir, ids=cfg.profile_ids)
        sample = Sample(cfg.sample_id, cfg.profile_ids, cfg.fleet_size)
        attach_bev_block(m, sample, pool, cfg.fleet_size, cfg.strategy)
    raw = solve_model(m, tol=cfg.tol, time_limit=cfg.time_limit)
    elapsed = time.perf_counter() - t0
    if cfg.export_mps:
        write_mps(m.lp, cfg.export_mps)
    res = extract_solution(m, raw, tol=cfg.feasibility_tol)
    res.runtime_s = elapsed
    status = raw.status
    msg = ""
    if raw.status == "optimal" and not res.feasibility.passed:
        status, msg = "infeasible-solution", str(res.feasibility)
    return ScenarioOutcome(cfg, res, elapsed, status, msg,
                           {"hours": m.hours, "annualize": annualization(system, m.hours)})


def annualization(system, hours: int) -> float:
    """Factor turning a horizon objective into a yearly one."""
    return system.hours_per_year / hours if system.cost_scaling == "horizon" else 1.0


def _isolated(cfg: ScenarioConfig) -> ScenarioOutcome:
    return run_scenario(cfg)


def run_isolated(cfg: ScenarioConfig) -> ScenarioOutcome:
    """Run in a freshly spawned interpreter so no caches survive between timed runs."""
    ctx = mp.get_context("spawn")
    with ctx.Pool(processes=1, maxtasksperchild=1) as p:
        return p.apply(_isolated, (cfg,))


def compute_cost_delta(result: ScenarioResult | float, reference: ScenarioResult | float, fleet_size,
                       annualize: float = 1.0) -> float:
    """``(obj_scenario - obj_reference) / fleet_size``, EUR per BEV; positive means extra cost."""
    if not fleet_size > 0:
        raise InputError("fleet size must be > 0 for a per-BEV cost delta")
    a = result.objective if isinstance(result, ScenarioResult) else float(result)
    b = reference.objective if isinstance(reference, ScenarioResult) else float(reference)
    return (a - b) * annualize / float(fleet_size)


def compute_capacity_delta(result: ScenarioResult | dict, reference: ScenarioResult | dict) -> dict[str, float]:
    a = result.capacities if isinstance(result, ScenarioResult) else result
    b = reference.capacities if isinstance(reference, ScenarioResult) else reference
    if set(a) != set(b):
        raise InputError(f"technology sets differ: {sorted(set(a) ^ set(b))}")
    return {k: a[k] - b[k] for k in b}


@dataclass(frozen=True)
class DeltaRecord:
    cost_delta_eur_per_bev_yr: float
    cost_delta_eur: float
    capacity_delta: dict[str, float]
    bevs_per_profile: Fraction


def delta_record(result: ScenarioResult, reference: ScenarioResult, fleet_size, n_profiles,
                 annualize: float = 1.0) -> DeltaRecord:
    return DeltaRecord(compute_cost_delta(result, reference, fleet_size, annualize),
                       (result.objective - reference.objective) * annualize,
                       compute_capacity_delta(result, reference), scale_factor(fleet_size, n_profiles))


@dataclass(frozen=True)
class SpikeStats:
    threshold_gw: float
    peak_consumption_gw: float
    hours_above_consumption: int
    peak_charging_gw: float | None = None
    hours_above_charging: int | None = None


def spike_threshold_gw(fleet_size) -> float:
    return SPIKE_THRESHOLD_GW * float(fleet_size) / REFERENCE_FLEET


def spike_statistics(sample: Sample, pool: ProfilePool, fleet_size=None, threshold_gw: float | None = None,
                     charging_mw: np.ndarray | None = None) -> SpikeStats:
    """Peak and exceedance count of scaled aggregate driving consumption (and solved charging, if given)."""
    fleet = sample.fleet_size if fleet_size is None else fleet_size
    s = sample.with_fleet(fleet)
    thr = spike_threshold_gw(fleet) if threshold_gw is None else threshold_gw
    cons = scaled_consumption_gw(s, pool)
    peak = float(cons.max(initial=0.0))
    out = dict(threshold_gw=thr, peak_consumption_gw=peak, hours_above_consumption=int((cons > thr).sum()))
    if charging_mw is not None:
        ch = np.asarray(charging_mw) / 1000.0
        out.update(peak_charging_gw=float(ch.max(initial=0.0)), hours_above_charging=int((ch > thr).sum()))
    return SpikeStats(**out)


def reference_config(setting: str, system: str, overrides=(), **kw) -> ScenarioConfig:
    return ScenarioConfig(setting=setting, system=str(system), system_overrides=tuple(overrides), **kw)
