"""Bounded-variable revised primal simplex.

The basis is held as a sparse LU factorization (SuperLU) plus a product-form
eta file, refactorized every ``refactor_every`` pivots. Pricing is Devex with
reduced costs updated from the pivot row; after ``3 * m`` consecutive
degenerate pivots the solver switches to Bland's smallest-index rule until
the objective strictly improves again, which guarantees termination.

Phase 1 minimizes the sum of artificial variables attached to rows whose
slack cannot start basic; phase 2 fixes the artificials at zero.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .standard import StandardLp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
TIME_LIMIT = "time-limit"

_BASIC, _LOWER, _UPPER, _FREE, _FIXED = 0, 1, 2, 3, 4


@dataclass
class RawSolution:
    """Solver output in the variable order of the source problem."""

    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    solve_time: float = 0.0
    duals: np.ndarray | None = None
    slacks: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Factor:
    def __init__(self, A: sp.csc_matrix, basis: np.ndarray):
        self.A = A
        self.basis = basis
        self.etas: list[tuple[int, np.ndarray, np.ndarray, float]] = []
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis].tocsc()
        self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        self.etas = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, idx, vals, piv in self.etas:
            wr = w[r] / piv
            if wr != 0.0:
                w[idx] -= vals * wr
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        for r, idx, vals, piv in reversed(self.etas):
            w[r] = (w[r] - vals @ w[idx]) / piv
        return self.lu.solve(w, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        idx = np.flatnonzero(alpha)
        idx = idx[idx != r]
        self.etas.append((r, idx, alpha[idx].copy(), float(alpha[r])))


def _column(A: sp.csc_matrix, j: int, m: int) -> np.ndarray:
    v = np.zeros(m)
    lo, hi = A.indptr[j], A.indptr[j + 1]
    v[A.indices[lo:hi]] = A.data[lo:hi]
    return v


def solve_simplex(s: StandardLp, tol: float = 1e-9, max_iter: int | None = None,
                  feas_tol: float = 1e-9, refactor_every: int = 64,
                  time_limit: float | None = None, pricing: str = "devex") -> RawSolution:
    """Solve ``s`` to optimality; see module docstring for the algorithm."""
    t0 = time.perf_counter()
    s.validate()
    m, n = s.m, s.n
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    l, u = s.l.astype(float), s.u.astype(float)
    x = np.where(np.isfinite(l), l, np.where(np.isfinite(u), u, 0.0))

    if m == 0:
        return _solve_unconstrained(s, t0)

    # starting basis: slack where its implied value is within bounds, else artificial
    slack_col = s.slack_for_row()
    resid = s.b - s.A @ x
    basis = np.full(m, -1, dtype=np.int64)
    slack_rows = np.flatnonzero(slack_col >= 0)
    cols = slack_col[slack_rows]
    vals = resid[slack_rows] / s.slack_sign[cols - s.n_orig]
    ok = (vals >= l[cols] - feas_tol) & (vals <= u[cols] + feas_tol)
    basis[slack_rows[ok]] = cols[ok]
    x[cols[ok]] = vals[ok]
    art_rows = np.flatnonzero(basis < 0)
    art_sign = np.where(resid[art_rows] >= 0, 1.0, -1.0)
    n_art = len(art_rows)
    art_rows_arr = art_rows
    Art = sp.csc_matrix((art_sign, (art_rows_arr, np.arange(n_art))), shape=(m, n_art))
    A = sp.hstack([s.A, Art], format="csc")
    A.sort_indices()
    AT = A.T.tocsr()
    N = n + n_art
    lo = np.concatenate([l, np.zeros(n_art)])
    hi = np.concatenate([u, np.full(n_art, np.inf)])
    x = np.concatenate([x, np.abs(resid[art_rows_arr])])
    basis[art_rows_arr] = n + np.arange(n_art)

    state = np.where(np.isfinite(lo), _LOWER, np.where(np.isfinite(hi), _UPPER, _FREE))
    state[lo == hi] = _FIXED
    state[basis] = _BASIC

    cost_scale = max(1.0, float(np.abs(s.c).max(initial=0.0)))
    b_scale = max(1.0, float(np.abs(s.b).max(initial=0.0)))
    dtol = tol * cost_scale
    ptol = tol

    solver = _Simplex(A, AT, lo, hi, x, basis, state, refactor_every, ptol, feas_tol, pricing, s.b)
    deadline = None if time_limit is None else t0 + time_limit
    status = OPTIMAL
    iterations = 0
    phase1_iters = 0

    if n_art:
        c1 = np.zeros(N)
        c1[n:] = 1.0
        status, it = solver.run(c1, tol, max_iter, deadline)
        iterations += it
        phase1_iters = it
        infeas = float(solver.x[n:].sum())
        if status == OPTIMAL and infeas > 1e-7 * b_scale:
            status = INFEASIBLE
        if status == OPTIMAL:
            solver.fix_artificials(n)
    if status == OPTIMAL:
        c2 = np.concatenate([s.c, np.zeros(n_art)])
        status, it = solver.run(c2, dtol, max_iter - iterations, deadline)
        iterations += it

    xs = solver.x[:n].copy()
    duals = None
    if status == OPTIMAL:
        c2 = np.concatenate([s.c, np.zeros(n_art)])
        duals = solver.factor.btran(c2[solver.basis])
    objective = float(np.dot(s.c, xs))
    elapsed = time.perf_counter() - t0
    log.debug("simplex %s after %d iterations (%d phase 1) in %.3fs, m=%d n=%d",
              status, iterations, phase1_iters, elapsed, m, n)
    return RawSolution(
        x=xs[: s.n_orig].copy(), objective=objective, status=status, iterations=iterations,
        solve_time=elapsed, duals=duals, slacks=xs[s.n_orig:].copy(),
        info={"phase1_iterations": phase1_iters, "artificials": n_art,
              "bland_pivots": solver.bland_pivots, "refactorizations": solver.n_refactor})


def _solve_unconstrained(s: StandardLp, t0: float) -> RawSolution:
    x = np.zeros(s.n)
    for j in range(s.n):
        if s.c[j] > 0:
            x[j] = s.l[j]
        elif s.c[j] < 0:
            x[j] = s.u[j]
        else:
            x[j] = s.l[j] if np.isfinite(s.l[j]) else (s.u[j] if np.isfinite(s.u[j]) else 0.0)
    if not np.isfinite(x).all():
        return RawSolution(np.zeros(s.n_orig), float("-inf"), UNBOUNDED, solve_time=time.perf_counter() - t0)
    return RawSolution(x[: s.n_orig], float(s.c @ x), OPTIMAL, solve_time=time.perf_counter() - t0,
                       duals=np.zeros(0), slacks=x[s.n_orig:])


class _Simplex:
    def __init__(self, A, AT, lo, hi, x, basis, state, refactor_every, ptol, feas_tol, pricing, b):
        self.A, self.AT = A, AT
        self.lo, self.hi = lo, hi
        self.x = x
        self.basis = basis
        self.state = state
        self.refactor_every = refactor_every
        self.ptol = ptol
        self.feas_tol = feas_tol
        self.pricing = pricing
        self.b = b
        self.m = A.shape[0]
        self.factor = _Factor(A, basis)
        self.n_refactor = 1
        self.bland_pivots = 0

    def fix_artificials(self, n: int) -> None:
        self.hi[n:] = 0.0
        nb = self.state[n:] != _BASIC
        self.state[n:][nb] = _FIXED
        self.x[n:][nb] = 0.0

    def _refactor(self) -> None:
        self.factor.refactor()
        self.n_refactor += 1
        nonbasic = self.state != _BASIC
        xn = np.where(nonbasic, self.x, 0.0)
        self.x[self.basis] = self.factor.ftran(self.b - self.A @ xn)

    def run(self, c: np.ndarray, dtol: float, max_iter: int, deadline: float | None) -> tuple[str, int]:
        A, AT, m = self.A, self.AT, self.m
        lo, hi, x, basis, state = self.lo, self.hi, self.x, self.basis, self.state
        ptol, ftol = self.ptol, self.feas_tol
        devex = self.pricing == "devex"

        self._refactor()
        d = c - AT @ self.factor.btran(c[basis])
        d[basis] = 0.0
        weights = np.ones(A.shape[1])
        since_refactor = 0
        degenerate_run = 0
        bland = False
        clean = True
        it = 0
        while True:
            if since_refactor >= self.refactor_every:
                self._refactor()
                d = c - AT @ self.factor.btran(c[basis])
                d[basis] = 0.0
                since_refactor = 0
                clean = True

            eligible = ((state == _LOWER) & (d < -dtol)) | ((state == _UPPER) & (d > dtol)) | \
                       ((state == _FREE) & (np.abs(d) > dtol))
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                if not clean:
                    # confirm optimality on a fresh factorization
                    self._refactor()
                    d = c - AT @ self.factor.btran(c[basis])
                    d[basis] = 0.0
                    since_refactor = 0
                    clean = True
                    continue
                return OPTIMAL, it
            if it >= max_iter:
                return ITERATION_LIMIT, it
            if deadline is not None and (it & 31) == 0 and time.perf_counter() > deadline:
                return TIME_LIMIT, it

            if bland:
                q = int(cand[0])
            elif devex:
                q = int(cand[np.argmax(d[cand] ** 2 / weights[cand])])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.factor.ftran(_column(A, q, m))
            g = direction * alpha
            xB = x[basis]
            lB, uB = lo[basis], hi[basis]
            flip = hi[q] - lo[q] if state[q] in (_LOWER, _UPPER) else np.inf

            pos = g > ptol
            neg = g < -ptol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.full(m, np.inf)
                ratio[pos] = (xB[pos] - lB[pos]) / g[pos]
                ratio[neg] = (uB[neg] - xB[neg]) / -g[neg]
            ratio = np.maximum(ratio, 0.0)
            if bland:
                theta_r = ratio.min(initial=np.inf)
                if theta_r < np.inf:
                    ties = np.flatnonzero(ratio <= theta_r + 1e-12 * max(1.0, theta_r))
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = -1
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    relaxed = np.full(m, np.inf)
                    relaxed[pos] = (xB[pos] - lB[pos] + ftol) / g[pos]
                    relaxed[neg] = (uB[neg] - xB[neg] + ftol) / -g[neg]
                # a basic variable drifted past its bound makes the bound negative
                theta_max = max(relaxed.min(initial=np.inf), 0.0)
                if theta_max < np.inf:
                    within = np.flatnonzero(ratio <= theta_max)
                    r = int(within[np.argmax(np.abs(g[within]))])
                    theta_r = ratio[r]
                else:
                    r, theta_r = -1, np.inf

            if r < 0 and flip == np.inf:
                return UNBOUNDED, it

            it += 1
            if flip <= theta_r:
                theta = flip
                x[basis] = xB - theta * g
                if state[q] == _LOWER:
                    x[q], state[q] = hi[q], _UPPER
                else:
                    x[q], state[q] = lo[q], _LOWER
                degenerate_run = 0
                bland = False
                clean = False
                continue

            theta = theta_r
            alpha_r = alpha[r]
            # pivot row for reduced-cost and weight updates
            rho = self.factor.btran(_unit(m, r))
            row = AT @ rho
            theta_d = d[q] / alpha_r
            d -= theta_d * row
            leaving = basis[r]
            d[q] = 0.0
            d[leaving] = -theta_d
            if devex:
                wq = max(weights[q], 1.0)
                ratio_w = (row / alpha_r) ** 2 * wq
                np.maximum(weights, ratio_w, out=weights)
                weights[leaving] = max(wq / alpha_r ** 2, 1.0)

            x[basis] = xB - theta * g
            x[q] = x[q] + direction * theta
            if g[r] > 0:
                x[leaving], state[leaving] = lo[leaving], _LOWER
            else:
                x[leaving], state[leaving] = hi[leaving], _UPPER
            if lo[leaving] == hi[leaving]:
                state[leaving] = _FIXED
            basis[r] = q
            state[q] = _BASIC
            self.factor.update(r, alpha)
            since_refactor += 1
            clean = False
            if bland:
                self.bland_pivots += 1

            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 3 * m and not bland:
                    bland = True
                    log.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
            else:
                degenerate_run = 0
                bland = False


def _unit(m: int, r: int) -> np.ndarray:
    e = np.zeros(m)
    e[r] = 1.0
    return e


def dual_bound(s: StandardLp, y: np.ndarray) -> float:
    """Lagrangian lower bound b'y + sum_j min over [l_j, u_j] of d_j x_j, d = c - A'y.

    Any ``y`` gives a valid lower bound on the optimum (possibly -inf).
    """
    d = s.c - s.A.T @ y
    total = float(s.b @ y)
    for dj, lj, uj in zip(d, s.l, s.u):
        if dj > 0:
            if not np.isfinite(lj):
                return float("-inf")
            total += dj * lj
        elif dj < 0:
            if not np.isfinite(uj):
                return float("-inf")
            total += dj * uj
    return total
