"""Independent feasibility and objective checks for a candidate solution."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .problem import LpProblem
from .simplex import RawSolution


@dataclass
class FeasibilityReport:
    max_bound_violation: float
    max_row_residual: float
    max_row_residual_abs: float
    objective_recomputed: float
    objective_reported: float
    objective_gap: float
    worst_row: str | None
    worst_variable: str | None
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: bound violation {self.max_bound_violation:.3e}, "
                f"row residual {self.max_row_residual:.3e} (abs {self.max_row_residual_abs:.3e}), "
                f"objective gap {self.objective_gap:.3e}")


def row_violations(p: LpProblem, x: np.ndarray) -> np.ndarray:
    """Absolute amount by which each row misses its sense and right-hand side."""
    act = p.row_activity(x)
    diff = act - p.rhs
    sense = p.sense
    return np.where(sense == "E", np.abs(diff),
                    np.where(sense == "L", np.maximum(diff, 0.0), np.maximum(-diff, 0.0)))


def validate_solution(p: LpProblem, sol: RawSolution | np.ndarray, tol: float = 1e-6) -> FeasibilityReport:
    """Residuals are scaled by ``max(1, |rhs|, largest |a_ij x_j| in the row)``;
    bound violations by ``max(1, |bound|)``; the objective gap by ``max(1, |objective|)``.
    """
    if isinstance(sol, RawSolution):
        x, reported = np.asarray(sol.x, dtype=float), float(sol.objective)
    else:
        x = np.asarray(sol, dtype=float)
        reported = float(p.cost @ x)
    if x.shape != (p.n_vars,):
        raise ValueError(f"solution has {x.size} values, problem has {p.n_vars} variables")

    lb, ub = p.lb, p.ub
    low = np.where(np.isfinite(lb), np.maximum(lb - x, 0.0) / np.maximum(1.0, np.abs(lb)), 0.0)
    high = np.where(np.isfinite(ub), np.maximum(x - ub, 0.0) / np.maximum(1.0, np.abs(ub)), 0.0)
    bound_viol = np.maximum(low, high)
    if not np.isfinite(x).all():
        bound_viol = np.where(np.isfinite(x), bound_viol, np.inf)

    viol = row_violations(p, x)
    A = p.matrix()
    if A.nnz:
        absA = A.copy()
        absA.data = np.abs(absA.data)
        term_max = _row_max(absA.multiply(np.abs(x)[None, :]).tocsr())
    else:
        term_max = np.zeros(p.n_rows)
    scale = np.maximum(1.0, np.maximum(np.abs(p.rhs), term_max))
    rel = viol / scale

    recomputed = float(np.dot(p.cost, x))
    gap = abs(recomputed - reported) / max(1.0, abs(recomputed))
    worst_row = p.row_name(int(np.argmax(rel))) if rel.size and rel.max() > 0 else None
    worst_var = p.var_name(int(np.argmax(bound_viol))) if bound_viol.size and bound_viol.max() > 0 else None
    mb = float(bound_viol.max(initial=0.0))
    mr = float(rel.max(initial=0.0))
    return FeasibilityReport(
        max_bound_violation=mb, max_row_residual=mr, max_row_residual_abs=float(viol.max(initial=0.0)),
        objective_recomputed=recomputed, objective_reported=reported, objective_gap=gap,
        worst_row=worst_row, worst_variable=worst_var, tol=tol,
        passed=bool(mb <= tol and mr <= tol and gap <= tol))


def _row_max(M) -> np.ndarray:
    out = np.zeros(M.shape[0])
    nz = np.diff(M.indptr) > 0
    if nz.any():
        out[nz] = np.maximum.reduceat(M.data, M.indptr[:-1][nz])
    return out
