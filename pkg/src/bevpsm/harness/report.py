"""CSV tables and static SVG scatter plots for a finished sweep.

File names are fixed: ``results.csv``, ``summary.csv``, ``failures.csv`` (only
when something failed) and ``<figure>_<strategy>.svg`` for the figure types
``cost_delta_vs_profiles``, ``capacity_delta_vs_profiles``,
``runtime_vs_profiles`` and ``cost_delta_vs_bevs_per_profile``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..errors import InputError
from .sweep import ResultTable

STRATEGIES = ("smart", "bidirectional")
FIGURES = ("cost_delta_vs_profiles", "capacity_delta_vs_profiles", "runtime_vs_profiles",
           "cost_delta_vs_bevs_per_profile")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
SUMMARY_COLUMNS = ["setting", "strategy", "fleet_size", "n_profiles", "n_samples", "mean_cost_delta",
                   "sd_cost_delta", "min_cost_delta", "max_cost_delta", "median_runtime_s"]


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list  # (label, xs, ys)

    @property
    def n_points(self) -> int:
        return sum(len(xs) for _, xs, _ in self.series)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _num(v: float) -> str:
    return f"{v:.0f}" if abs(v) >= 1000 else f"{v:.4g}"


def scatter_svg(panels: list[Panel], title: str, width: int = 640, panel_height: int = 300) -> str:
    """Stacked scatter panels as one self-contained SVG document."""
    left, right, top, bottom = 80, 20, 40, 50
    height = top + len(panels) * (panel_height + bottom) + 10
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for k, p in enumerate(panels):
        y0 = top + k * (panel_height + bottom)
        pw, ph = width - left - right, panel_height - 30
        xs = [x for _, sx, _ in p.series for x in sx]
        ys = [y for _, _, sy in p.series for y in sy]
        xlo, xhi = (min(xs), max(xs)) if xs else (0.0, 1.0)
        ylo, yhi = (min(ys + [0.0]), max(ys + [0.0])) if ys else (0.0, 1.0)
        if xhi == xlo:
            xlo, xhi = xlo - 1, xhi + 1
        if yhi == ylo:
            ylo, yhi = ylo - 1, yhi + 1
        pad = 0.05 * (yhi - ylo)
        ylo, yhi = ylo - pad, yhi + pad

        def sx(v):
            return left + (v - xlo) / (xhi - xlo) * pw

        def sy(v):
            return y0 + 20 + (1 - (v - ylo) / (yhi - ylo)) * ph

        out.append(f'<g class="panel" data-title="{escape(p.title)}" data-points="{p.n_points}">')
        out.append(f'<text x="{left}" y="{y0 + 12}" font-size="12">{escape(p.title)}</text>')
        out.append(f'<rect x="{left}" y="{y0 + 20}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
        for t in _ticks(xlo, xhi):
            out.append(f'<text x="{sx(t):.1f}" y="{y0 + 20 + ph + 14}" text-anchor="middle">{_num(t)}</text>')
        for t in _ticks(ylo, yhi):
            out.append(f'<line x1="{left}" x2="{left + pw}" y1="{sy(t):.1f}" y2="{sy(t):.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{_num(t)}</text>')
        if ylo < 0 < yhi:
            out.append(f'<line x1="{left}" x2="{left + pw}" y1="{sy(0):.1f}" y2="{sy(0):.1f}" stroke="#888"/>')
        out.append(f'<text x="{left + pw / 2}" y="{y0 + 20 + ph + 30}" text-anchor="middle">{escape(p.xlabel)}</text>')
        out.append(f'<text transform="translate(14,{y0 + 20 + ph / 2}) rotate(-90)" '
                   f'text-anchor="middle">{escape(p.ylabel)}</text>')
        for i, (label, xs_, ys_) in enumerate(p.series):
            color = PALETTE[i % len(PALETTE)]
            out.append(f'<g class="series" data-label="{escape(str(label))}" fill="{color}" fill-opacity="0.7">')
            out += [f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3"/>' for x, y in zip(xs_, ys_)]
            out.append("</g>")
            out.append(f'<text x="{left + pw - 4}" y="{y0 + 34 + 13 * i}" text-anchor="end" '
                       f'fill="{color}">{escape(str(label))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _series(rows: list[dict], x, y) -> list:
    groups: dict[str, tuple[list, list]] = {}
    for r in rows:
        label = f"{r['setting']} {r['fleet_size'] / 1e6:g}M"
        xs, ys = groups.setdefault(label, ([], []))
        xs.append(float(x(r)))
        ys.append(float(y(r)))
    return [(k, *v) for k, v in groups.items()]


def figure_panels(figure: str, rows: list[dict], columns: list[str]) -> list[Panel]:
    n = lambda r: r["n_profiles"]  # noqa: E731
    if figure == "cost_delta_vs_profiles":
        return [Panel("cost delta", "number of profiles", "EUR per BEV per year",
                      _series(rows, n, lambda r: r["cost_delta_eur_per_bev_yr"]))]
    if figure == "runtime_vs_profiles":
        return [Panel("runtime", "number of profiles", "seconds", _series(rows, n, lambda r: r["runtime_s"]))]
    if figure == "cost_delta_vs_bevs_per_profile":
        return [Panel("cost delta", "BEVs per profile", "EUR per BEV per year",
                      _series(rows, lambda r: r["bevs_per_profile"], lambda r: r["cost_delta_eur_per_bev_yr"]))]
    if figure == "capacity_delta_vs_profiles":
        techs = [c[len("delta:"):] for c in columns if c.startswith("delta:")]
        unit = lambda t: "MWh" if t.endswith("/energy") or t.endswith("/cavern") else "MW"  # noqa: E731
        return [Panel(t, "number of profiles", unit(t), _series(rows, n, lambda r, t=t: r[f"delta:{t}"]))
                for t in techs]
    raise InputError(f"unknown figure type {figure!r}")


def summarize(table: ResultTable) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in table.scenario_rows():
        groups.setdefault((r["setting"], r["strategy"], r["fleet_size"], r["n_profiles"]), []).append(r)
    out = []
    for (setting, strat, fleet, n), rows in sorted(groups.items()):
        d = np.array([r["cost_delta_eur_per_bev_yr"] for r in rows])
        out.append({"setting": setting, "strategy": strat, "fleet_size": fleet, "n_profiles": n,
                    "n_samples": len(rows), "mean_cost_delta": float(d.mean()),
                    "sd_cost_delta": float(d.std(ddof=1)) if len(d) > 1 else 0.0,
                    "min_cost_delta": float(d.min()), "max_cost_delta": float(d.max()),
                    "median_runtime_s": float(np.median([r["runtime_s"] for r in rows]))})
    return out


def _write_dicts(path: Path, columns: list[str], rows: list[dict]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if r.get(c) is None else repr(r[c]) if isinstance(r[c], float) else r[c]
                        for c in columns])
    return path


def emit_outputs(table: ResultTable, outdir) -> tuple[list[Path], list[str]]:
    """Write tables and plots; returns (files written, warnings for omitted plots)."""
    if not table.rows:
        raise InputError("result table is empty")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = [table.to_csv(out / "results.csv"), _write_dicts(out / "summary.csv", SUMMARY_COLUMNS, summarize(table))]
    if table.failures:
        cols = ["setting", "strategy", "fleet_size", "n_profiles", "sample_id", "status", "message"]
        files.append(_write_dicts(out / "failures.csv", cols, table.failures))
    warnings = []
    for strat in STRATEGIES:
        rows = table.subset(strategy=strat)
        for fig in FIGURES:
            if not rows:
                warnings.append(f"{fig}_{strat}.svg omitted: no {strat} rows in the table")
                continue
            path = out / f"{fig}_{strat}.svg"
            path.write_text(scatter_svg(figure_panels(fig, rows, table.columns), f"{fig.replace('_', ' ')} ({strat})"))
            files.append(path)
    return files, warnings
