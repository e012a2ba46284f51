"""Conversion between :class:`LpProblem` and equality standard form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .problem import LpInputError, LpProblem


@dataclass
class StandardLp:
    """min c'x  s.t.  A x = b,  l <= x <= u.

    Columns ``0..n_orig-1`` are the original variables; the remaining columns
    are slacks. ``slack_row[k]`` is the original row of slack ``n_orig + k``
    and ``slack_sign[k]`` is +1 for a ``<=`` row and -1 for a ``>=`` row.
    """

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    l: np.ndarray
    u: np.ndarray
    n_orig: int
    slack_row: np.ndarray
    slack_sign: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def n_slack(self) -> int:
        return self.n - self.n_orig

    def validate(self) -> None:
        m, n = self.A.shape
        if self.c.shape != (n,) or self.l.shape != (n,) or self.u.shape != (n,) or self.b.shape != (m,):
            raise LpInputError("inconsistent standard-form dimensions")
        if not (np.isfinite(self.A.data).all() and np.isfinite(self.c).all() and np.isfinite(self.b).all()):
            raise LpInputError("non-finite coefficient in standard form")
        if (self.l > self.u).any():
            raise LpInputError("lower bound above upper bound")

    def original_x(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[: self.n_orig]

    def slack_for_row(self) -> np.ndarray:
        """Column index of each row's slack, -1 for equality rows."""
        out = np.full(self.m, -1, dtype=np.int64)
        out[self.slack_row] = self.n_orig + np.arange(self.n_slack)
        return out


def to_standard_form(p: LpProblem) -> StandardLp:
    A = p.matrix()
    if not np.isfinite(A.data).all():
        raise LpInputError("infinite coefficient in constraint matrix")
    if not np.isfinite(p.cost).all() or not np.isfinite(p.rhs).all():
        raise LpInputError("infinite objective or right-hand-side coefficient")
    sense = p.sense
    slack_row = np.flatnonzero(sense != "E")
    slack_sign = np.where(sense[slack_row] == "L", 1.0, -1.0)
    k = slack_row.size
    S = sp.csc_matrix((slack_sign, (slack_row, np.arange(k))), shape=(p.n_rows, k))
    full = sp.hstack([A.tocsc(), S], format="csc")
    full.sort_indices()
    c = np.concatenate([p.cost, np.zeros(k)])
    l = np.concatenate([p.lb, np.zeros(k)])
    u = np.concatenate([p.ub, np.full(k, np.inf)])
    s = StandardLp(c=c, A=full, b=p.rhs.copy(), l=l, u=u, n_orig=p.n_vars,
                   slack_row=slack_row, slack_sign=slack_sign)
    s.validate()
    return s


def from_standard_form(s: StandardLp, template: LpProblem | None = None) -> LpProblem:
    """Rebuild an :class:`LpProblem`; names come from ``template`` when given."""
    A = s.A[:, : s.n_orig].tocsr()
    sense = np.full(s.m, "E", dtype="<U1")
    sense[s.slack_row] = np.where(s.slack_sign > 0, "L", "G")
    p = LpProblem(template.name if template is not None else "standard")
    if template is not None:
        for block in template.columns.ordered():
            sl = slice(block.start, block.stop)
            p.add_variables(block.name, block.labels, s.l[sl].reshape(block.shape),
                            s.u[sl].reshape(block.shape), s.c[sl].reshape(block.shape))
        for block in template.rows.ordered():
            sl = slice(block.start, block.stop)
            p.add_constraints(block.name, block.labels, sense[sl].reshape(block.shape),
                              s.b[sl].reshape(block.shape))
    else:
        p.add_variables("x", [range(s.n_orig)], s.l[: s.n_orig], s.u[: s.n_orig], s.c[: s.n_orig])
        p.add_constraints("r", [range(s.m)], sense, s.b)
    coo = A.tocoo()
    p.add_terms(coo.row, coo.col, coo.data)
    return p
