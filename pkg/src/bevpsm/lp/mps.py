"""MPS export/import and plain-text solution files.

Rows and columns are written under 8-character codes (``R`` or ``C`` plus
seven base-36 digits) in registry order so the file fits the fixed-format
name fields. Numbers are written with ``repr`` so that a write/read cycle is
exact; readers that split on whitespace (all common solvers) accept this.
The block registry is stored in ``* @`` comment lines, which solvers ignore
and :func:`read_mps` uses to restore names.

Solution files hold one ``name value`` pair per line; ``#`` starts a
comment. Names may be the registry names or the MPS codes.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .problem import LpProblem
from .simplex import OPTIMAL, RawSolution

OBJ_ROW = "COST"
_DIGITS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class MpsFormatError(ValueError):
    pass


class SolutionFileError(ValueError):
    pass


def _code(prefix: str, k: int) -> str:
    out = []
    for _ in range(7):
        k, rem = divmod(k, 36)
        out.append(_DIGITS[rem])
    if k:
        raise ValueError("too many entries for 8-character MPS codes")
    return prefix + "".join(reversed(out))


def col_code(j: int) -> str:
    return _code("C", j)


def row_code(i: int) -> str:
    return _code("R", i)


def _decode(code: str) -> int:
    return int(code[1:], 36)


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0.0"  # never write -0.0
    return repr(v)


def _block_lines(kind: str, blocks) -> list[str]:
    lines = []
    for b in blocks:
        dims = ";".join(",".join(lab) for lab in b.labels)
        lines.append(f"* @{kind} {b.name} {b.start} {len(b.labels)} {dims}".rstrip())
    return lines


def write_mps(p: LpProblem, destination) -> Path:
    """Write ``p`` as MPS; the output is byte-identical for identical problems."""
    path = Path(destination)
    A = p.matrix().tocsc()
    A.sort_indices()
    cost, lb, ub, sense, rhs = p.cost, p.lb, p.ub, p.sense, p.rhs
    out = [f"* bevpsm {p.summary()}"]
    out += _block_lines("col", p.columns.ordered())
    out += _block_lines("row", p.rows.ordered())
    out.append(f"NAME          {p.name}")
    out.append("ROWS")
    out.append(f" N  {OBJ_ROW}")
    out += [f" {s}  {row_code(i)}" for i, s in enumerate(sense)]
    out.append("COLUMNS")
    rcodes = [row_code(i) for i in range(p.n_rows)]
    for j in range(p.n_vars):
        cj = col_code(j)
        lo, hi = A.indptr[j], A.indptr[j + 1]
        if cost[j] != 0.0 or lo == hi:
            out.append(f"    {cj:<8}  {OBJ_ROW:<8}  {_num(cost[j])}")
        for i, v in zip(A.indices[lo:hi], A.data[lo:hi]):
            out.append(f"    {cj:<8}  {rcodes[i]:<8}  {_num(v)}")
    out.append("RHS")
    for i in np.flatnonzero(rhs):
        out.append(f"    {'RHS':<8}  {rcodes[i]:<8}  {_num(rhs[i])}")
    out.append("BOUNDS")
    for j in range(p.n_vars):
        lo, hi, cj = lb[j], ub[j], col_code(j)
        if lo == hi:
            out.append(f" FX {'BND':<8}  {cj:<8}  {_num(lo)}")
            continue
        if lo == -np.inf and hi == np.inf:
            out.append(f" FR {'BND':<8}  {cj:<8}")
            continue
        if lo == -np.inf:
            out.append(f" MI {'BND':<8}  {cj:<8}")
        elif lo != 0.0:
            out.append(f" LO {'BND':<8}  {cj:<8}  {_num(lo)}")
        if hi != np.inf:
            out.append(f" UP {'BND':<8}  {cj:<8}  {_num(hi)}")
    out.append("ENDATA")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out))
        fh.write("\n")
    return path


def _parse_blocks(spec_lines: list[tuple[int, str]]):
    blocks = []
    for lineno, text in spec_lines:
        parts = text.split(" ", 4)
        if len(parts) < 4:
            raise MpsFormatError(f"line {lineno}: malformed block comment")
        _, name, start, ndim = parts[:4]
        ndim = int(ndim)
        dims = parts[4].split(";") if ndim else []
        if len(dims) != ndim:
            raise MpsFormatError(f"line {lineno}: block {name} declares {ndim} dimensions")
        blocks.append((name, int(start), [d.split(",") for d in dims]))
    return blocks


def read_mps(path) -> LpProblem:
    """Parse an MPS file (NAME, ROWS, COLUMNS, RHS, BOUNDS, ENDATA)."""
    section = None
    name = "model"
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    entries: list[tuple[int, str, float]] = []
    costs: dict[int, float] = {}
    rhs: dict[str, float] = {}
    bounds: list[tuple[int, str, int, float | None]] = []
    col_blocks, row_blocks = [], []
    ended = False

    def number(tok, lineno):
        try:
            v = float(tok)
        except ValueError:
            raise MpsFormatError(f"line {lineno}: bad number {tok!r}") from None
        if not np.isfinite(v):
            raise MpsFormatError(f"line {lineno}: non-finite number {tok!r}")
        return v

    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("*"):
                if line.startswith("* @col "):
                    col_blocks.append((lineno, line[2:]))
                elif line.startswith("* @row "):
                    row_blocks.append((lineno, line[2:]))
                continue
            if ended:
                raise MpsFormatError(f"line {lineno}: content after ENDATA")
            if not line[0].isspace():
                head = line.split()
                section = head[0]
                if section == "NAME":
                    name = head[1] if len(head) > 1 else name
                elif section == "ENDATA":
                    ended = True
                elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                    raise MpsFormatError(f"line {lineno}: unsupported section {section!r}")
                continue
            tok = line.split()
            if section == "ROWS":
                if len(tok) != 2 or tok[0] not in ("N", "E", "L", "G"):
                    raise MpsFormatError(f"line {lineno}: bad ROWS entry")
                if tok[0] == "N":
                    if obj_row is None:
                        obj_row = tok[1]
                    continue
                if tok[1] in row_sense:
                    raise MpsFormatError(f"line {lineno}: duplicate row {tok[1]}")
                row_sense[tok[1]] = tok[0]
                row_order.append(tok[1])
            elif section == "COLUMNS":
                if len(tok) not in (3, 5):
                    raise MpsFormatError(f"line {lineno}: bad COLUMNS entry")
                col = tok[0]
                if col not in col_index:
                    col_index[col] = len(col_order)
                    col_order.append(col)
                j = col_index[col]
                for k in range(1, len(tok), 2):
                    r, v = tok[k], number(tok[k + 1], lineno)
                    if r == obj_row:
                        costs[j] = costs.get(j, 0.0) + v
                    elif r in row_sense:
                        entries.append((j, r, v))
                    else:
                        raise MpsFormatError(f"line {lineno}: unknown row {r!r}")
            elif section == "RHS":
                if len(tok) not in (3, 5):
                    raise MpsFormatError(f"line {lineno}: bad RHS entry")
                for k in range(1, len(tok), 2):
                    r = tok[k]
                    if r == obj_row:
                        continue
                    if r not in row_sense:
                        raise MpsFormatError(f"line {lineno}: unknown row {r!r}")
                    rhs[r] = number(tok[k + 1], lineno)
            elif section == "BOUNDS":
                kind = tok[0]
                if kind in ("FR", "MI", "PL"):
                    if len(tok) != 3:
                        raise MpsFormatError(f"line {lineno}: bad {kind} bound")
                    val = None
                elif kind in ("UP", "LO", "FX"):
                    if len(tok) != 4:
                        raise MpsFormatError(f"line {lineno}: bad {kind} bound")
                    val = number(tok[3], lineno)
                else:
                    raise MpsFormatError(f"line {lineno}: unsupported bound type {kind!r}")
                if tok[2] not in col_index:
                    raise MpsFormatError(f"line {lineno}: bound on unknown column {tok[2]!r}")
                bounds.append((lineno, kind, col_index[tok[2]], val))
            else:
                raise MpsFormatError(f"line {lineno}: data outside a section")
    if not ended:
        raise MpsFormatError("missing ENDATA")

    n, m = len(col_order), len(row_order)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    for lineno, kind, j, val in bounds:
        if kind == "UP":
            ub[j] = val
        elif kind == "LO":
            lb[j] = val
        elif kind == "FX":
            lb[j] = ub[j] = val
        elif kind == "FR":
            lb[j], ub[j] = -np.inf, np.inf
        elif kind == "MI":
            lb[j] = -np.inf
        elif kind == "PL":
            ub[j] = np.inf
    cost = np.zeros(n)
    for j, v in costs.items():
        cost[j] = v
    sense = np.array([row_sense[r] for r in row_order], dtype="<U1")
    rhs_arr = np.array([rhs.get(r, 0.0) for r in row_order])
    rpos = {r: i for i, r in enumerate(row_order)}

    p = LpProblem(name)
    if col_blocks and row_blocks and _codes_in_order(col_order, "C") and _codes_in_order(row_order, "R"):
        _restore_blocks(p, _parse_blocks(col_blocks), n, lb, ub, cost, kind="col")
        _restore_blocks(p, _parse_blocks(row_blocks), m, sense, rhs_arr, None, kind="row")
    else:
        p.add_variables("x", [col_order], lb, ub, cost)
        p.add_constraints("r", [row_order], sense, rhs_arr)
    if entries:
        cols = np.array([e[0] for e in entries], dtype=np.int64)
        rows = np.array([rpos[e[1]] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries])
        p.add_terms(rows, cols, vals)
    return p


def _codes_in_order(names: list[str], prefix: str) -> bool:
    try:
        return all(nm[0] == prefix and len(nm) == 8 and _decode(nm) == k for k, nm in enumerate(names))
    except ValueError:
        return False


def _restore_blocks(p, blocks, total, a, b, c, kind):
    pos = 0
    for name, start, dims in blocks:
        if start != pos:
            raise MpsFormatError(f"block {name} starts at {start}, expected {pos}")
        size = int(np.prod([len(d) for d in dims], dtype=np.int64)) if dims else 1
        shape = tuple(len(d) for d in dims)
        sl = slice(pos, pos + size)
        if kind == "col":
            p.add_variables(name, dims, a[sl].reshape(shape), b[sl].reshape(shape), c[sl].reshape(shape))
        else:
            p.add_constraints(name, dims, a[sl].reshape(shape), b[sl].reshape(shape))
        pos += size
    if pos != total:
        raise MpsFormatError(f"block comments cover {pos} {kind}s, file has {total}")


def write_solution(p: LpProblem, sol: RawSolution, destination) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# status {sol.status}", f"# objective {_num(sol.objective)}"]
    lines += [f"{name} {_num(v)}" for name, v in zip(p.var_names(), sol.x)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_external_solution(path, p: LpProblem) -> RawSolution:
    """Read a ``name value`` solution file and map it onto ``p``'s variables."""
    index = {name: j for j, name in enumerate(p.var_names())}
    x = np.full(p.n_vars, np.nan)
    status = OPTIMAL
    objective = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                tok = line[1:].split()
                if len(tok) == 2 and tok[0] == "status":
                    status = tok[1]
                elif len(tok) == 2 and tok[0] == "objective":
                    objective = float(tok[1])
                continue
            tok = line.split("#", 1)[0].split()
            if len(tok) != 2:
                raise SolutionFileError(f"{path}:{lineno}: expected 'name value'")
            name, val = tok
            if name in index:
                j = index[name]
            elif len(name) == 8 and name[0] == "C" and _safe_decode(name) is not None \
                    and _safe_decode(name) < p.n_vars:
                j = _decode(name)
            else:
                raise SolutionFileError(f"{path}:{lineno}: unknown variable {name!r}")
            try:
                x[j] = float(val)
            except ValueError:
                raise SolutionFileError(f"{path}:{lineno}: bad value {val!r}") from None
    missing = np.flatnonzero(np.isnan(x))
    if missing.size:
        names = ", ".join(p.var_name(int(j)) for j in missing[:5])
        more = f" and {missing.size - 5} more" if missing.size > 5 else ""
        raise SolutionFileError(f"{path}: missing variable {names}{more}")
    obj = float(p.cost @ x) if objective is None else objective
    return RawSolution(x=x, objective=obj, status=status)


def _safe_decode(code: str) -> int | None:
    try:
        return _decode(code)
    except ValueError:
        return None


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


__all__ = [
    "MpsFormatError", "SolutionFileError", "col_code", "row_code", "read_mps", "write_mps",
    "read_external_solution", "write_solution", "file_digest",
]
