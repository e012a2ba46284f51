"""Investment-and-dispatch LP over ``H`` consecutive hours.

Block naming (``@node`` suffix everywhere):

=============  ==========================  ======================================
block          dims                        meaning
=============  ==========================  ======================================
cap@N          [tech]                      generation capacity, MW
gen@N          [tech, hour]                generation, MWh/h
spow@N/sene@N  [storage]                   storage power (MW) / energy (MWh)
sch/sdis/slev  [storage, hour]             charge, discharge, level
sspill@N       [storage, hour]             spillage of storages with inflow
h2cap@N        [electrolyzer,cavern,turb]  hydrogen chain capacities
h2el/h2turb    [hour]                      electrolysis input, turbine output
h2lev@N        [hour]                      cavern level, MWh_H2
flow           [A>B, hour]                 directed interconnector flow
bevc/bevv/bevs [profile, hour]             BEV charge, discharge, state of charge
balance@N      [hour]                      energy balance (rows)
=============  ==========================  ======================================

Storage levels wrap around: hour 0 follows hour ``H-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import ConfigurationError, InputError
from ..lp import LpProblem
from .config import HydrogenChain, Node, SystemConfig

H2_ASSETS = ("electrolyzer", "cavern", "h2_turbine")
STRATEGIES = ("smart", "bidirectional")


@dataclass
class BevAttachment:
    node: str
    strategy: str
    labels: tuple[str, ...]
    profile_ids: tuple[int, ...]
    scale: float  # vehicles per profile
    consumption_mwh: np.ndarray  # [profile, hour], scaled
    availability_mw: np.ndarray
    capacity_mwh: np.ndarray


@dataclass
class EnergyModel:
    lp: LpProblem
    system: SystemConfig
    hours: int
    start: int
    nodes: tuple[str, ...]
    bev: list[BevAttachment] = field(default_factory=list)
    h2_demand: dict[str, float] = field(default_factory=dict)  # MWh_H2/h per node
    linked: bool = False

    def hour_labels(self) -> list[str]:
        return [str(h) for h in range(self.hours)]


def _window(series, start: int, hours: int, what: str) -> np.ndarray:
    s = np.asarray(series, dtype=float)
    if s.ndim == 0:
        return np.full(hours, float(s))
    if s.size < start + hours:
        raise ConfigurationError(f"{what}: series has {s.size} hours, need {start + hours}")
    return s[start:start + hours]


def _prev(idx: np.ndarray) -> np.ndarray:
    """Index of the previous hour with cyclic wrap along the last axis."""
    return np.roll(idx, 1, axis=-1)


def build_reference_model(sys: SystemConfig, hours: int | None = None, start: int | None = None,
                          nodes=None, link: bool = True) -> EnergyModel:
    """Reference system without BEVs; multi-node systems are linked through their NTCs."""
    H = sys.horizon_hours if hours is None else int(hours)
    t0 = sys.start_hour if start is None else int(start)
    if H < 2:
        raise InputError("horizon must be at least 2 hours")
    names = tuple(sys.nodes) if nodes is None else tuple(nodes)
    lp = LpProblem(sys.name)
    T = [str(h) for h in range(H)]
    w = sys.cost_weight(H)
    for n in names:
        _add_node(lp, sys.nodes[n], sys, H, t0, T, w)
    m = EnergyModel(lp, sys, H, t0, names)
    if link and len(names) > 1:
        link_nodes(m, sys.ntc)
    for n in names:
        h2 = sys.nodes[n].hydrogen
        if h2 is not None and h2.demand_twh > 0:
            attach_hydrogen_demand(m, h2.demand_twh, node=n)
    return m


def _add_node(lp: LpProblem, node: Node, sys: SystemConfig, H: int, t0: int, T, w: float) -> None:
    n = node.name
    load = _window(node.load, t0, H, f"{n}.load")
    bal = lp.add_constraints(f"balance@{n}", [T], "E", load)

    gens = node.generation
    if gens:
        tn = [g.name for g in gens]
        cap = lp.add_variables(f"cap@{n}", [tn], [g.capacity[0] for g in gens], [g.capacity[1] for g in gens],
                               [w * (g.investment + g.fixed_om) for g in gens])
        mc = np.array([g.marginal_cost(sys.carbon_price) for g in gens])
        gen = lp.add_variables(f"gen@{n}", [tn, T], 0.0, np.inf, np.repeat(mc[:, None], H, axis=1))
        lp.add_terms(bal[None, :], gen, 1.0)
        cf = np.array([_window(g.availability, t0, H, f"{n}.{g.name}.availability") for g in gens])
        rows = lp.add_constraints(f"gencap@{n}", [tn, T], "L", 0.0)
        lp.add_terms(rows, gen, 1.0)
        lp.add_terms(rows, cap[:, None], -cf)

    stor = node.storage
    if stor:
        sn = [s.name for s in stor]
        P = lp.add_variables(f"spow@{n}", [sn], [s.power_bounds[0] for s in stor],
                             [s.power_bounds[1] for s in stor], [w * s.power_cost for s in stor])
        E = lp.add_variables(f"sene@{n}", [sn], [s.energy_bounds[0] for s in stor],
                             [s.energy_bounds[1] for s in stor], [w * s.energy_cost for s in stor])
        ch_ub = np.array([np.inf if s.grid_charging else 0.0 for s in stor])[:, None]
        ch = lp.add_variables(f"sch@{n}", [sn, T], 0.0, np.broadcast_to(ch_ub, (len(stor), H)))
        dis = lp.add_variables(f"sdis@{n}", [sn, T])
        lev = lp.add_variables(f"slev@{n}", [sn, T])
        lp.add_terms(bal[None, :], dis, 1.0)
        lp.add_terms(bal[None, :], ch, -1.0)
        inflow = np.array([np.zeros(H) if s.inflow is None else _window(s.inflow, t0, H, f"{n}.{s.name}.inflow")
                           for s in stor])
        rec = lp.add_constraints(f"srec@{n}", [sn, T], "E", inflow)
        keep = np.array([1.0 - s.self_discharge for s in stor])[:, None]
        lp.add_terms(rec, lev, 1.0)
        lp.add_terms(rec, _prev(lev), -np.broadcast_to(keep, (len(stor), H)))
        lp.add_terms(rec, ch, -np.array([s.charge_efficiency for s in stor])[:, None])
        lp.add_terms(rec, dis, 1.0 / np.array([s.discharge_efficiency for s in stor])[:, None])
        spill_names = [s.name for s in stor if s.inflow is not None]
        if spill_names:
            spill = lp.add_variables(f"sspill@{n}", [spill_names, T])
            k = np.array([sn.index(x) for x in spill_names])
            lp.add_terms(rec[k], spill, 1.0)
        for label, var, capv in (("schcap", ch, P), ("sdiscap", dis, P), ("slevcap", lev, E)):
            rows = lp.add_constraints(f"{label}@{n}", [sn, T], "L", 0.0)
            lp.add_terms(rows, var, 1.0)
            lp.add_terms(rows, capv[:, None], -1.0)

    if node.hydrogen is not None:
        _add_hydrogen(lp, n, node.hydrogen, bal, T, w)


def _add_hydrogen(lp: LpProblem, n: str, h: HydrogenChain, bal, T, w: float) -> None:
    bounds = (h.electrolyzer_bounds, h.cavern_bounds, h.turbine_bounds)
    cap = lp.add_variables(f"h2cap@{n}", [H2_ASSETS], [b[0] for b in bounds], [b[1] for b in bounds],
                           [w * h.electrolyzer_cost, w * h.cavern_cost, w * h.turbine_cost])
    el = lp.add_variables(f"h2el@{n}", [T])
    turb = lp.add_variables(f"h2turb@{n}", [T])
    lev = lp.add_variables(f"h2lev@{n}", [T])
    lp.add_terms(bal, el, -1.0)
    lp.add_terms(bal, turb, 1.0)
    rec = lp.add_constraints(f"h2rec@{n}", [T], "E", 0.0)
    lp.add_terms(rec, lev, 1.0)
    lp.add_terms(rec, _prev(lev), -(1.0 - h.cavern_loss))
    lp.add_terms(rec, el, -h.electrolyzer_efficiency)
    lp.add_terms(rec, turb, 1.0 / h.turbine_efficiency)
    for label, var, k in (("h2elcap", el, 0), ("h2levcap", lev, 1), ("h2turbcap", turb, 2)):
        rows = lp.add_constraints(f"{label}@{n}", [T], "L", 0.0)
        lp.add_terms(rows, var, 1.0)
        lp.add_terms(rows, cap[k], -1.0)


def attach_hydrogen_demand(m: EnergyModel, annual_twh: float, node: str | None = None) -> EnergyModel:
    """Uniform exogenous withdrawal of ``annual_twh * 1e6 / hours_per_year`` MWh_H2 every hour."""
    n = node or m.nodes[0]
    if n not in m.nodes or not m.lp.has_row_block(f"h2rec@{n}"):
        raise ConfigurationError(f"node {n}: no hydrogen chain configured")
    if annual_twh < 0:
        raise InputError("hydrogen demand must be >= 0")
    rate = annual_twh * 1e6 / m.system.hours_per_year
    rows = m.lp.row_block(f"h2rec@{n}").indices()
    m.lp.set_rhs(rows, -rate)
    m.h2_demand[n] = rate
    return m


def link_nodes(m: EnergyModel, ntc: dict[tuple[str, str], float]) -> EnergyModel:
    """Lossless directed flows bounded by the NTC of each ordered node pair."""
    if m.linked:
        raise InputError("model is already linked")
    pairs = [(a, b) for (a, b) in ntc]
    for a, b in pairs:
        if a not in m.nodes or b not in m.nodes:
            raise InputError(f"ntc {a}->{b}: node not present in the model")
    if not pairs:
        m.linked = True
        return m
    lp = m.lp
    T = m.hour_labels()
    f = lp.add_variables("flow", [[f"{a}>{b}" for a, b in pairs], T], 0.0,
                         np.array([[ntc[p]] * m.hours for p in pairs]))
    for k, (a, b) in enumerate(pairs):
        lp.add_terms(lp.row_block(f"balance@{a}").indices(), f[k], -1.0)
        lp.add_terms(lp.row_block(f"balance@{b}").indices(), f[k], 1.0)
    m.linked = True
    return m


def combine_models(models: dict[str, EnergyModel], ntc: dict[tuple[str, str], float]) -> EnergyModel:
    """Merge single-node models built over the same horizon, then link them."""
    ms = list(models.values())
    if not ms:
        raise InputError("no models to combine")
    if len({(x.hours, x.start) for x in ms}) != 1:
        raise InputError("models must share the same horizon")
    names = tuple(n for x in ms for n in x.nodes)
    if len(set(names)) != len(names) or set(names) != set(models):
        raise InputError("node sets of the models are inconsistent")
    nodes_in_ntc = {a for a, _ in ntc} | {b for _, b in ntc}
    if not nodes_in_ntc <= set(names):
        raise InputError("ntc references nodes without a model")
    lp = LpProblem.merge([x.lp for x in ms], name=ms[0].system.name)
    m = EnergyModel(lp, ms[0].system, ms[0].hours, ms[0].start, names,
                    h2_demand={k: v for x in ms for k, v in x.h2_demand.items()})
    return link_nodes(m, ntc)


def attach_bev_block(m: EnergyModel, sample, pool, fleet_size=None, strategy: str = "smart",
                     node: str | None = None) -> EnergyModel:
    """Add one scaled BEV block per sample profile; ``fleet_size`` defaults to the sample's."""
    fleet = sample.fleet_size if fleet_size is None else fleet_size
    profiles = [pool[i] for i in sample.profile_ids]
    scale = Fraction(fleet) / len(profiles)
    return attach_bev_profiles(m, profiles, scale, strategy, node)


def attach_bev_profiles(m: EnergyModel, profiles, scale, strategy: str = "smart",
                        node: str | None = None) -> EnergyModel:
    """Profiles may repeat (clones); each gets its own block rows."""
    if strategy not in STRATEGIES:
        raise InputError(f"unknown charging strategy {strategy!r}; expected one of {STRATEGIES}")
    if scale < 0:
        raise InputError("fleet scale must be >= 0")
    n = node or m.nodes[0]
    if n not in m.nodes:
        raise InputError(f"unknown node {n!r}")
    if m.lp.has_var_block(f"bevc@{n}"):
        raise InputError(f"node {n} already has a BEV block")
    if not profiles:
        raise InputError("no profiles to attach")
    H = m.hours
    d, a, E = [], [], []
    for p in profiles:
        hc, ha = p.hourly_consumption, p.hourly_availability
        if hc.size != H or ha.size != H:
            raise InputError(f"profile {p.profile_id} covers {hc.size} hours, model has {H}")
        d.append(hc)
        a.append(ha)
        E.append(p.battery_capacity)
    k = float(scale) / 1000.0  # kW(h) per vehicle -> MW(h) for the scaled fleet
    d = np.array(d) * k
    a = np.array(a) * k
    E = np.array(E) * k
    labels = tuple(f"{j}_p{p.profile_id}" for j, p in enumerate(profiles))
    lp = m.lp
    T = m.hour_labels()
    eta_c, eta_d = m.system.bev.charge_efficiency, m.system.bev.discharge_efficiency
    c = lp.add_variables(f"bevc@{n}", [labels, T], 0.0, a)
    s = lp.add_variables(f"bevs@{n}", [labels, T], 0.0, np.repeat(E[:, None], H, axis=1))
    rec = lp.add_constraints(f"bevrec@{n}", [labels, T], "E", -d)
    lp.add_terms(rec, s, 1.0)
    lp.add_terms(rec, _prev(s), -1.0)
    lp.add_terms(rec, c, -eta_c)
    bal = lp.row_block(f"balance@{n}").indices()
    lp.add_terms(bal[None, :], c, -1.0)
    if strategy == "bidirectional":
        v = lp.add_variables(f"bevv@{n}", [labels, T], 0.0, a)
        lp.add_terms(rec, v, 1.0 / eta_d)
        lp.add_terms(bal[None, :], v, 1.0)
    m.bev.append(BevAttachment(n, strategy, labels, tuple(p.profile_id for p in profiles), float(scale), d, a, E))
    return m
