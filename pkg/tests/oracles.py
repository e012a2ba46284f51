"""Independent reference computations used by the tests.

Nothing here calls into the simplex code; the LP oracle enumerates vertices
directly and the energy oracles are written out by hand.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np


def random_lp(rng: np.random.Generator, n: int, m: int):
    """Small integer LP, feasible by construction (rows built around an interior point).

    Returns (c, A, sense, b, lb, ub) with sense entries in {"L", "G", "E"}.
    """
    c = rng.integers(-9, 10, size=n).astype(float)
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    lb = rng.integers(-4, 1, size=n).astype(float)
    ub = lb + rng.integers(1, 6, size=n)
    x0 = lb + rng.random(n) * (ub - lb)
    sense = rng.choice(["L", "G", "E"], size=m, p=[0.45, 0.35, 0.2])
    ax = A @ x0
    slack = rng.integers(0, 4, size=m)
    b = np.where(sense == "L", np.ceil(ax) + slack, np.where(sense == "G", np.floor(ax) - slack, 0.0))
    # an equality row needs an integer right-hand side that is still reachable: pin it at a box corner
    eq = np.flatnonzero(sense == "E")
    if eq.size:
        corner = np.where(rng.random(n) < 0.5, lb, ub)
        b[eq] = A[eq] @ corner
        # keep the other rows satisfied at that corner as well
        ac = A @ corner
        b = np.where(sense == "L", np.maximum(b, ac), np.where(sense == "G", np.minimum(b, ac), b))
    return c, A, sense, b, lb, ub


def vertex_enumeration(c, A, sense, b, lb, ub, tol=1e-9):
    """Minimum of c'x over all vertices; returns (objective, x) or (None, None) if infeasible.

    A vertex has k tight rows and k basic variables, the other n - k variables
    sit at a bound; all bound patterns of one basis are solved together.
    """
    m, n = A.shape
    best_obj, best_x = None, None
    for k in range(min(m, n) + 1):
        # equality rows need not be among the k defining rows; the feasibility filter enforces them
        row_sets = list(combinations(range(m), k))
        var_sets = list(combinations(range(n), k))
        combos = list(product((0, 1), repeat=n - k))
        patterns = np.array(combos, dtype=float).reshape(len(combos), n - k)
        for rows in row_sets:
            R = list(rows)
            for basic in var_sets:
                B = list(basic)
                N = [j for j in range(n) if j not in basic]
                xN = lb[N] + patterns * (ub[N] - lb[N])  # (P, n-k)
                if k:
                    M = A[np.ix_(R, B)]
                    if abs(np.linalg.det(M)) < 0.5:  # integer matrix: nonsingular means |det| >= 1
                        continue
                    rhs = b[R][None, :] - xN @ A[np.ix_(R, N)].T
                    xB = np.linalg.solve(M, rhs.T).T
                else:
                    xB = np.zeros((len(patterns), 0))
                X = np.zeros((len(patterns), n))
                X[:, B] = xB
                X[:, N] = xN
                ok = _feasible(X, A, sense, b, lb, ub, tol)
                if not ok.any():
                    continue
                objs = X[ok] @ c
                i = int(np.argmin(objs))
                if best_obj is None or objs[i] < best_obj:
                    best_obj, best_x = float(objs[i]), X[ok][i]
    return best_obj, best_x


def _feasible(X, A, sense, b, lb, ub, tol):
    act = X @ A.T
    scale = np.maximum(1.0, np.abs(b))
    row_ok = np.where(sense == "L", act <= b + tol * scale,
                      np.where(sense == "G", act >= b - tol * scale, np.abs(act - b) <= tol * scale))
    bnd_ok = (X >= lb - tol * np.maximum(1, np.abs(lb))) & (X <= ub + tol * np.maximum(1, np.abs(ub)))
    return row_ok.all(axis=1) & bnd_ok.all(axis=1)


def build_lp(c, A, sense, b, lb, ub):
    from bevpsm.lp import LpProblem

    p = LpProblem("oracle")
    cols = p.add_variables("x", (range(len(c)),), lb=lb, ub=ub, cost=c)
    rows = p.add_constraints("r", (range(len(b)),), sense=sense, rhs=b)
    ii, jj = np.nonzero(A)
    p.add_terms(rows[ii], cols[jj], A[ii, jj])
    return p


def random_problem(rng):
    """Block-structured LpProblem with mixed bounds and costs spanning many magnitudes."""
    from bevpsm.lp import LpProblem

    p = LpProblem(f"rand{int(rng.integers(1000))}")
    n_blocks = int(rng.integers(1, 4))
    cols = []
    for k in range(n_blocks):
        shape = tuple(range(int(rng.integers(1, 5))) for _ in range(int(rng.integers(0, 3))))
        size = int(np.prod([len(s) for s in shape], dtype=int)) if shape else 1
        lb = rng.choice([0.0, -np.inf, -2.5, 1e-7], size=size)
        ub = np.where(rng.random(size) < 0.3, np.inf, lb + rng.choice([0.0, 1.5, 1e6], size=size))
        ub = np.where(np.isinf(lb) & (ub == lb), np.inf, ub)
        cost = rng.normal(size=size) * rng.choice([0.0, 1.0, 1e-9, 1e7], size=size)
        cols.append(p.add_variables(f"v{k}", shape, lb.reshape([len(s) for s in shape]),
                                    ub.reshape([len(s) for s in shape]),
                                    cost.reshape([len(s) for s in shape])).ravel())
    cols = np.concatenate(cols)
    m = int(rng.integers(1, 6))
    rows = p.add_constraints("c", (range(m),), rng.choice(["E", "L", "G"], size=m), rng.normal(size=m) * 10)
    nnz = int(rng.integers(1, 3 * len(cols) + 1))
    p.add_terms(rng.choice(rows, nnz), rng.choice(cols, nnz), rng.normal(size=nnz) / 3)
    return p


def _inv_cdf(rng, probs) -> int:
    u = rng.random() * sum(probs)
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def replay_daily_km(seed, raw: dict, days: int, start_weekday: int = 0) -> list[float]:
    """Re-draw the mobility stream from the raw generator tables and return km driven per day.

    Draw order per day: stop count; then per attempt the stop purposes, the
    departure hour and quarter, and per leg a distance followed by a dwell
    time (none after the final return home). An attempt fails once the
    running clock passes step 95; after 25 failures the day stays at home.
    """
    mob = raw["mobility"]
    rng = np.random.default_rng(seed)
    dests = ["workplace", "shopping", "errands", "escort", "leisure", "home"]
    out = []
    for day in range(days):
        wd = (start_weekday + day) % 7
        dt = "weekday" if wd < 5 else ("saturday" if wd == 5 else "sunday")
        counts = mob["trip_counts"][dt]
        k = int(list(counts)[_inv_cdf(rng, list(counts.values()))])
        total = 0.0
        for _ in range(25 if k else 0):
            choice = mob["destination_choice"][dt]
            names = [d for d in dests if d in choice]
            stops = []
            for i in range(k):
                home_ok = not (i == 0 or i == k - 1 or stops[-1] == "home")
                probs = [choice[d] if (d != "home" or home_ok) else 0.0 for d in names]
                stops.append(names[_inv_cdf(rng, probs)])
            hour = _inv_cdf(rng, mob["departure_hour"][stops[0]])
            clock = hour * 4 + int(rng.integers(4))
            total, ok = 0.0, True
            for i, dest in enumerate(stops + ["home"]):
                edges, probs = mob["distance_km"]["edges"], mob["distance_km"][dest]
                b = _inv_cdf(rng, probs)
                km = edges[b] + rng.random() * (edges[b + 1] - edges[b])
                bands = [(float(lim), float(s)) for lim, s in mob["speed_bands_kmh"]]
                speed = next((s for lim, s in bands if km <= lim), bands[-1][1])
                clock += max(1, int(np.ceil(km / (speed * 0.25) - 1e-9)))
                total += km
                if dest != "home" or i < k:
                    dedges, dprobs = mob["dwell_hours"]["edges"], mob["dwell_hours"][dest]
                    b = _inv_cdf(rng, dprobs)
                    clock += max(1, round((dedges[b] + rng.random() * (dedges[b + 1] - dedges[b])) * 4))
                if clock > 95:
                    ok = False
                    break
            if ok:
                break
        else:
            total = 0.0
        out.append(total)
    return out
