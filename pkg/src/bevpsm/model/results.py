"""Solving an energy model and reading results back through the block registry."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..lp import FeasibilityReport, RawSolution, solve_simplex, to_standard_form, validate_solution
from .build import H2_ASSETS, EnergyModel


@dataclass
class ScenarioResult:
    objective: float
    status: str
    capacities: dict[str, float]  # "node/tech" (MW), "node/storage/power", "node/storage/energy"
    dispatch: dict[str, np.ndarray]  # hourly series keyed like capacities
    bev_charge: np.ndarray  # MW, summed over profiles
    bev_discharge: np.ndarray
    bev_soc: np.ndarray
    feasibility: FeasibilityReport | None
    runtime_s: float = 0.0
    iterations: int = 0
    info: dict = field(default_factory=dict)
    raw: RawSolution | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_model(m: EnergyModel, tol: float = 1e-9, time_limit: float | None = None,
                max_iter: int | None = None) -> RawSolution:
    return solve_simplex(to_standard_form(m.lp), tol=tol, time_limit=time_limit, max_iter=max_iter)


def _vals(m: EnergyModel, x: np.ndarray, block: str) -> np.ndarray:
    b = m.lp.var_block(block)
    return x[b.start:b.stop].reshape(b.shape)


def extract_solution(m: EnergyModel, raw: RawSolution, tol: float = 1e-6) -> ScenarioResult:
    x = np.asarray(raw.x, dtype=float)
    if x.shape != (m.lp.n_vars,):
        raise InputError(f"solution has {x.size} values, model has {m.lp.n_vars} variables")
    caps: dict[str, float] = {}
    disp: dict[str, np.ndarray] = {}
    for n in m.nodes:
        node = m.system.nodes[n]
        if node.generation:
            cap, gen = _vals(m, x, f"cap@{n}"), _vals(m, x, f"gen@{n}")
            for k, g in enumerate(node.generation):
                caps[f"{n}/{g.name}"] = float(cap[k])
                disp[f"{n}/{g.name}"] = gen[k]
        if node.storage:
            P, E = _vals(m, x, f"spow@{n}"), _vals(m, x, f"sene@{n}")
            ch, dis, lev = (_vals(m, x, f"{b}@{n}") for b in ("sch", "sdis", "slev"))
            for k, s in enumerate(node.storage):
                caps[f"{n}/{s.name}/power"] = float(P[k])
                caps[f"{n}/{s.name}/energy"] = float(E[k])
                disp[f"{n}/{s.name}/charge"] = ch[k]
                disp[f"{n}/{s.name}/discharge"] = dis[k]
                disp[f"{n}/{s.name}/level"] = lev[k]
        if node.hydrogen is not None:
            hc = _vals(m, x, f"h2cap@{n}")
            for k, a in enumerate(H2_ASSETS):
                caps[f"{n}/{a}"] = float(hc[k])
            disp[f"{n}/electrolyzer"] = _vals(m, x, f"h2el@{n}")
            disp[f"{n}/h2_turbine"] = _vals(m, x, f"h2turb@{n}")
            disp[f"{n}/cavern/level"] = _vals(m, x, f"h2lev@{n}")
    if m.lp.has_var_block("flow"):
        b = m.lp.var_block("flow")
        f = _vals(m, x, "flow")
        for k, lab in enumerate(b.labels[0]):
            disp[f"flow/{lab}"] = f[k]
    zero = np.zeros(m.hours)
    charge, discharge, soc = zero.copy(), zero.copy(), zero.copy()
    for att in m.bev:
        n = att.node
        charge += _vals(m, x, f"bevc@{n}").sum(axis=0)
        soc += _vals(m, x, f"bevs@{n}").sum(axis=0)
        if m.lp.has_var_block(f"bevv@{n}"):
            discharge += _vals(m, x, f"bevv@{n}").sum(axis=0)
    report = validate_solution(m.lp, raw, tol=tol) if raw.status == "optimal" else None
    return ScenarioResult(
        objective=float(raw.objective), status=raw.status, capacities=caps, dispatch=disp,
        bev_charge=charge, bev_discharge=discharge, bev_soc=soc, feasibility=report,
        iterations=raw.iterations, info=dict(raw.info, solve_time=raw.solve_time), raw=raw)


def balance_residual(m: EnergyModel, x: np.ndarray) -> float:
    """Largest ``|supply - demand| / max(1, demand)`` over all balance rows."""
    act = m.lp.row_activity(x)
    worst = 0.0
    for n in m.nodes:
        rows = m.lp.row_block(f"balance@{n}").indices()
        demand = m.lp.rhs[rows]
        worst = max(worst, float(np.max(np.abs(act[rows] - demand) / np.maximum(1.0, np.abs(demand)))))
    return worst


def timed_solve(m: EnergyModel, **kw) -> tuple[RawSolution, float]:
    t = time.perf_counter()
    raw = solve_model(m, **kw)
    return raw, time.perf_counter() - t
