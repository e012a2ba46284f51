"""Sparse linear program container with a named dimension registry.

Variables and constraints are declared in blocks. A block has a name and one
label tuple per dimension; element ``(i, j, ...)`` of block ``gen@DE`` is the
variable ``gen@DE[solar,12]``. Coefficients are collected as COO triplets and
may target rows of any block, which is how scenario blocks hook into the
energy balance of an existing model.
"""

from __future__ import annotations

import bisect
import copy
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SENSES = ("E", "L", "G")


class LpInputError(ValueError):
    """Raised for malformed problem data (bad bounds, NaN coefficients, unknown names)."""


@dataclass(frozen=True)
class Block:
    name: str
    start: int
    labels: tuple[tuple[str, ...], ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(lab) for lab in self.labels)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.labels else 1

    @property
    def stop(self) -> int:
        return self.start + self.size

    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop).reshape(self.shape)

    def element_name(self, offset: int) -> str:
        if not self.labels:
            return self.name
        pos = np.unravel_index(offset, self.shape)
        return f"{self.name}[{','.join(lab[k] for lab, k in zip(self.labels, pos))}]"


def _labels(dims) -> tuple[tuple[str, ...], ...]:
    out = []
    for dim in dims:
        lab = tuple(str(x) for x in dim)
        for s in lab:
            if not s or any(ch.isspace() or ch in ",];" for ch in s):
                raise LpInputError(f"invalid label {s!r}")
        out.append(lab)
    return tuple(out)


def _check_block_name(name: str) -> None:
    if not name or any(ch.isspace() for ch in name) or "[" in name:
        raise LpInputError(f"invalid block name {name!r}")


class _Registry:
    """Ordered block registry for one axis (columns or rows)."""

    def __init__(self):
        self.blocks: dict[str, Block] = {}
        self._starts: list[int] = []
        self._order: list[Block] = []
        self.size = 0

    def add(self, name: str, dims) -> Block:
        _check_block_name(name)
        if name in self.blocks:
            raise LpInputError(f"block {name!r} already declared")
        block = Block(name, self.size, _labels(dims))
        self.blocks[name] = block
        self._starts.append(block.start)
        self._order.append(block)
        self.size = block.stop
        return block

    def locate(self, index: int) -> Block:
        k = bisect.bisect_right(self._starts, index) - 1
        # zero-size blocks share a start with their successor
        while k >= 0 and self._order[k].size == 0:
            k -= 1
        return self._order[k]

    def name(self, index: int) -> str:
        if not 0 <= index < self.size:
            raise IndexError(index)
        block = self.locate(index)
        return block.element_name(index - block.start)

    def names(self) -> list[str]:
        out: list[str] = []
        for block in self._order:
            if not block.labels:
                out.append(block.name)
                continue
            for combo in itertools.product(*block.labels):
                out.append(f"{block.name}[{','.join(combo)}]")
        return out

    def ordered(self) -> list[Block]:
        return list(self._order)


class LpProblem:
    """min c'x  s.t.  rows of A x (=, <=, >=) rhs,  lb <= x <= ub."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.columns = _Registry()
        self.rows = _Registry()
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._cost: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._coo: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._cache: dict[str, object] = {}

    # -- declaration -----------------------------------------------------

    def add_variables(self, name, dims=(), lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        block = self.columns.add(name, dims)
        shape = block.shape
        lb = np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel().copy()
        ub = np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel().copy()
        cost = np.broadcast_to(np.asarray(cost, dtype=float), shape).ravel().copy()
        if np.isnan(lb).any() or np.isnan(ub).any() or not np.isfinite(cost).all():
            raise LpInputError(f"non-finite bound or cost in block {name!r}")
        if (lb > ub).any():
            raise LpInputError(f"lower bound above upper bound in block {name!r}")
        if (lb == np.inf).any() or (ub == -np.inf).any():
            raise LpInputError(f"infinite bound on wrong side in block {name!r}")
        self._lb.append(lb)
        self._ub.append(ub)
        self._cost.append(cost)
        self._cache.clear()
        return block.indices()

    def add_constraints(self, name, dims=(), sense="E", rhs=0.0) -> np.ndarray:
        block = self.rows.add(name, dims)
        shape = block.shape
        sense_arr = np.broadcast_to(np.asarray(sense, dtype="<U1"), shape).ravel().copy()
        if not np.isin(sense_arr, SENSES).all():
            raise LpInputError(f"unknown constraint sense in block {name!r}")
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), shape).ravel().copy()
        if not np.isfinite(rhs).all():
            raise LpInputError(f"non-finite right-hand side in block {name!r}")
        self._sense.append(sense_arr)
        self._rhs.append(rhs)
        self._cache.clear()
        return block.indices()

    def add_terms(self, rows, cols, vals) -> None:
        """Add coefficients ``A[rows, cols] += vals`` (arrays broadcast together)."""
        rows, cols, vals = np.broadcast_arrays(
            np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=float))
        rows, cols, vals = rows.ravel(), cols.ravel(), vals.ravel()
        if not np.isfinite(vals).all():
            raise LpInputError("non-finite coefficient")
        if rows.size and (rows.min() < 0 or rows.max() >= self.rows.size):
            raise LpInputError("coefficient references an undeclared row")
        if cols.size and (cols.min() < 0 or cols.max() >= self.columns.size):
            raise LpInputError("coefficient references an undeclared variable")
        self._coo.append((rows.copy(), cols.copy(), vals.copy()))
        self._cache.clear()

    def add_cost(self, cols, vals) -> None:
        cols, vals = np.broadcast_arrays(np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=float))
        cost = self.cost.copy()
        np.add.at(cost, cols.ravel(), vals.ravel())
        self._set_flat("cost", cost)

    def set_bounds(self, cols, lb=None, ub=None) -> None:
        cols = np.asarray(cols, dtype=np.int64).ravel()
        lo, hi = self.lb.copy(), self.ub.copy()
        if lb is not None:
            lo[cols] = np.broadcast_to(np.asarray(lb, dtype=float).ravel(), cols.shape)
        if ub is not None:
            hi[cols] = np.broadcast_to(np.asarray(ub, dtype=float).ravel(), cols.shape)
        if (lo > hi).any():
            raise LpInputError("lower bound above upper bound")
        self._set_flat("lb", lo)
        self._set_flat("ub", hi)

    def set_rhs(self, rows, values) -> None:
        rows = np.asarray(rows, dtype=np.int64).ravel()
        rhs = self.rhs.copy()
        rhs[rows] = np.broadcast_to(np.asarray(values, dtype=float).ravel(), rows.shape)
        if not np.isfinite(rhs).all():
            raise LpInputError("non-finite right-hand side")
        self._set_flat("rhs", rhs)

    def _set_flat(self, attr: str, arr: np.ndarray) -> None:
        store = {"lb": "_lb", "ub": "_ub", "cost": "_cost", "rhs": "_rhs"}[attr]
        setattr(self, store, [arr])
        self._cache.clear()

    # -- views -------------------------------------------------------------

    def _flat(self, chunks, dtype=float) -> np.ndarray:
        if not chunks:
            return np.zeros(0, dtype=dtype)
        if len(chunks) > 1:
            chunks[:] = [np.concatenate(chunks)]
        return chunks[0]

    @property
    def n_vars(self) -> int:
        return self.columns.size

    @property
    def n_rows(self) -> int:
        return self.rows.size

    @property
    def lb(self) -> np.ndarray:
        return self._flat(self._lb)

    @property
    def ub(self) -> np.ndarray:
        return self._flat(self._ub)

    @property
    def cost(self) -> np.ndarray:
        return self._flat(self._cost)

    @property
    def rhs(self) -> np.ndarray:
        return self._flat(self._rhs)

    @property
    def sense(self) -> np.ndarray:
        return self._flat(self._sense, dtype="<U1")

    def matrix(self) -> sp.csr_matrix:
        """Constraint matrix with duplicate entries summed and explicit zeros dropped."""
        if "A" not in self._cache:
            if self._coo:
                r = np.concatenate([c[0] for c in self._coo])
                c = np.concatenate([c[1] for c in self._coo])
                v = np.concatenate([c[2] for c in self._coo])
            else:
                r = c = np.zeros(0, dtype=np.int64)
                v = np.zeros(0)
            A = sp.coo_matrix((v, (r, c)), shape=(self.n_rows, self.n_vars)).tocsr()
            A.sum_duplicates()
            A.eliminate_zeros()
            A.sort_indices()
            self._coo = [(np.repeat(np.arange(A.shape[0]), np.diff(A.indptr)),
                          A.indices.astype(np.int64), A.data.copy())] if A.nnz else []
            self._cache["A"] = A
        return self._cache["A"]

    @property
    def nnz(self) -> int:
        return self.matrix().nnz

    def var_name(self, j: int) -> str:
        return self.columns.name(j)

    def row_name(self, i: int) -> str:
        return self.rows.name(i)

    def var_names(self) -> list[str]:
        return self.columns.names()

    def row_names(self) -> list[str]:
        return self.rows.names()

    def var_block(self, name: str) -> Block:
        try:
            return self.columns.blocks[name]
        except KeyError:
            raise KeyError(f"no variable block {name!r}") from None

    def row_block(self, name: str) -> Block:
        try:
            return self.rows.blocks[name]
        except KeyError:
            raise KeyError(f"no constraint block {name!r}") from None

    def has_var_block(self, name: str) -> bool:
        return name in self.columns.blocks

    def has_row_block(self, name: str) -> bool:
        return name in self.rows.blocks

    @classmethod
    def merge(cls, problems, name: str = "model") -> "LpProblem":
        """Stack independent problems side by side; block names must not collide."""
        out = cls(name)
        for p in problems:
            col0, row0 = out.n_vars, out.n_rows
            lb, ub, cost, rhs, sense = p.lb, p.ub, p.cost, p.rhs, p.sense
            for b in p.columns.ordered():
                out.add_variables(b.name, b.labels, lb[b.start:b.stop].reshape(b.shape),
                                  ub[b.start:b.stop].reshape(b.shape), cost[b.start:b.stop].reshape(b.shape))
            for b in p.rows.ordered():
                out.add_constraints(b.name, b.labels, sense[b.start:b.stop].reshape(b.shape),
                                    rhs[b.start:b.stop].reshape(b.shape))
            A = p.matrix().tocoo()
            out.add_terms(A.row + row0, A.col + col0, A.data)
        return out

    def copy(self) -> "LpProblem":
        self.matrix()
        return copy.deepcopy(self)

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.cost, x))

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.matrix() @ np.asarray(x, dtype=float)

    def summary(self) -> str:
        return f"{self.name}: {self.n_vars} variables, {self.n_rows} rows, {self.nnz} nonzeros"

    def __repr__(self) -> str:
        return f"<LpProblem {self.summary()}>"
