"""Command-line entry point.

Exit codes::

    0  success
    1  unexpected error
    2  usage error (unknown flag, bad argument)
    3  configuration error (missing or malformed config, unknown override key)
    4  input error (missing or malformed data file, pool, sample or solution)
    5  profile generation error
    6  solver error (no optimal solution)
    7  validation failed (residuals above tolerance)

On failure, stderr carries one line ``error[<category>]: <message>``.
``BEVPSM_CONFIG_DIR`` names a directory searched for config files given by
bare name. Every command that writes output also writes a manifest next to
it (``manifest.yaml``; ``generation_manifest.yaml`` for pools and
``report_manifest.yaml`` for reports); ``--from-manifest`` re-runs a command
from such a file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .errors import ConfigurationError, GenerationError, InputError, SolverError
from .harness import (REFERENCE, ResultTable, ScenarioConfig, emit_outputs, experiment_from_manifest,
                      load_experiment, run_scenario, sweep, write_manifest)
from .harness.sweep import file_sha256, versions
from .lp import read_external_solution, read_mps, validate_solution, write_solution
from .lp.mps import MpsFormatError, SolutionFileError
from .lp.problem import LpInputError
from .model import load_system_config
from .profiles import ProfilePool, build_pool, load_generator_config
from .sampling import draw_grid, draw_sample, sample_rng, trim_samples, write_sample_csv

log = logging.getLogger("bevpsm")

EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, EXIT_CONFIG, EXIT_INPUT = 0, 1, 2, 3, 4
EXIT_GENERATION, EXIT_SOLVER, EXIT_VALIDATION = 5, 6, 7
CONFIG_ENV = "BEVPSM_CONFIG_DIR"


class UsageError(Exception):
    pass


class ValidationFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _find_config(value: str | None) -> str | None:
    """Paths win; otherwise look in $BEVPSM_CONFIG_DIR; bundled names pass through unchanged."""
    if value is None or Path(value).exists():
        return value
    root = os.environ.get(CONFIG_ENV)
    if root:
        for cand in (Path(root) / value, Path(root) / f"{value}.yaml"):
            if cand.exists():
                return str(cand)
    return value


def _overrides(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _need(args, *names) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


def _manifest(out: Path, command: str, args: argparse.Namespace, inputs=(), outputs=(), extra=None,
              name: str = "manifest.yaml") -> Path:
    arguments = {k: v for k, v in vars(args).items() if k not in ("func", "from_manifest", "verbose", "quiet")}
    doc = {"kind": f"bevpsm-{command}", "command": command, "arguments": arguments,
           "config_hash": hashlib.sha256(json.dumps(arguments, sort_keys=True, default=str).encode()).hexdigest()[:16],
           "versions": versions(),
           "inputs": {str(p): file_sha256(p) for p in inputs if p and Path(p).is_file()},
           "outputs": {str(Path(p).relative_to(out)): file_sha256(p) for p in outputs}}
    if extra:
        doc.update(extra)
    path = out / name
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return path


# -- commands -----------------------------------------------------------------


def cmd_gen_pool(args) -> int:
    ov = _overrides(args.set)
    if args.system:
        system = load_system_config(_find_config(args.system))
        ov.setdefault("horizon_steps", system.horizon_hours * 4)
        ov.setdefault("start_weekday", (system.start_hour // 24) % 7)
    if args.horizon_hours:
        ov["horizon_steps"] = args.horizon_hours * 4
    cfg = load_generator_config(_find_config(args.config), overrides=ov or None)
    pool = build_pool(args.n, args.seed, cfg, workers=args.workers)
    out = pool.save(args.out)
    _manifest(out, "gen-pool", args, inputs=[args.config], extra={
        "seeds": {"base_seed": args.seed}, "pool_content_digest": pool.content_digest()},
        name="generation_manifest.yaml")  # manifest.yaml is the pool's own index
    log.info("wrote %d profiles to %s", len(pool), out)
    return EXIT_OK


def cmd_sample(args) -> int:
    _need(args, "pool")
    pool = ProfilePool.load(args.pool)
    grid = draw_grid(pool, _int_list(args.sizes), args.samples, args.seed, args.fleet)
    samples = [s for n in grid for s in grid[n]]
    if args.trim is not None:
        kept = []
        for n in grid:
            kept += trim_samples(grid[n], pool, args.trim)
        log.info("trim kept %d of %d samples", len(kept), len(samples))
        samples = kept
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_sample_csv(samples, out / "samples.csv")
    _manifest(out, "sample", args, inputs=[Path(args.pool) / "manifest.yaml"], outputs=[path],
              extra={"seeds": {"master_seed": args.seed}})
    return EXIT_OK


def cmd_run(args) -> int:
    _need(args, "config")
    system = _find_config(args.config)
    ov = tuple(sorted(_overrides(args.set).items()))
    if args.profiles == 0:
        cfg = ScenarioConfig(args.setting or Path(system).stem, system, REFERENCE, system_overrides=ov,
                             tol=args.tol, time_limit=args.time_limit)
    else:
        if not args.pool:
            raise UsageError("run with --profiles > 0 needs --pool")
        if args.profile_ids:
            ids = tuple(_int_list(args.profile_ids))
            if len(ids) != args.profiles:
                raise UsageError("--profile-ids must list exactly --profiles ids")
        else:
            pool = ProfilePool.load(args.pool)
            ids = draw_sample(pool, args.profiles, sample_rng(args.seed, args.profiles, args.sample_id)).profile_ids
        cfg = ScenarioConfig(args.setting or Path(system).stem, system, args.strategy, int(args.fleet), args.profiles,
                             args.sample_id, ids, str(args.pool), ov, tol=args.tol, time_limit=args.time_limit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outcome = run_scenario(replace(cfg, export_mps=str(out / "model.mps")))
    res = outcome.result
    files = [out / "model.mps"]
    if res is not None and res.raw is not None and res.raw.status == "optimal":
        files.append(write_solution(read_mps(out / "model.mps"), res.raw, out / "solution.csv"))
    summary = {"status": outcome.status, "message": outcome.message, "runtime_s": outcome.runtime_s,
               "scenario": cfg.as_dict(),
               "objective_eur": None if res is None else res.objective,
               "capacities": None if res is None else res.capacities,
               "feasibility": None if res is None or res.feasibility is None else res.feasibility.as_dict()}
    (out / "result.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
    files.append(out / "result.yaml")
    _manifest(out, "run", args, inputs=[system], outputs=files, extra={"seeds": {"master_seed": args.seed}})
    print(f"{outcome.status} objective={summary['objective_eur']} runtime_s={outcome.runtime_s:.3f}")
    if outcome.status == "infeasible-solution":
        raise ValidationFailed(outcome.message)
    if outcome.status != "optimal":
        raise SolverError(f"solver status {outcome.status}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.from_manifest:
        exp = experiment_from_manifest(args.from_manifest)
    else:
        if not args.config:
            raise UsageError("sweep needs --config or --from-manifest")
        exp = load_experiment(_find_config(args.config), _overrides(args.set) or None)
    if args.mode:
        exp.execution["mode"] = args.mode
    if args.workers:
        exp.execution["workers"] = args.workers
    out = Path(args.out)

    def progress(o):
        log.info("%s %s %.2fs", "/".join(map(str, o.config.key)), o.status, o.runtime_s)

    table = sweep(exp, out, progress=progress)
    files, warnings = emit_outputs(table, out)
    pool = ProfilePool.load(exp.pool["directory"] or out / "pool")
    write_manifest(exp, out, pool, files + [out / "samples.csv"], warnings)
    print(f"{len(table.rows)} rows, {len(table.failures)} failures -> {out / 'results.csv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    _need(args, "results")
    src = Path(args.results)
    if src.is_dir():
        src = src / "results.csv"
    if not src.exists():
        raise InputError(f"{src}: results file not found")
    table = ResultTable.from_csv(src)
    out = Path(args.out or src.parent)
    files, warnings = emit_outputs(table, out)
    for w in warnings:
        log.warning(w)
    # a separate name so a sweep's own manifest in the same directory survives
    _manifest(out, "report", args, inputs=[src], outputs=files, extra={"warnings": warnings},
              name="report_manifest.yaml")
    return EXIT_OK


def cmd_validate(args) -> int:
    _need(args, "model", "solution")
    lp = read_mps(args.model)
    sol = read_external_solution(args.solution, lp)
    rep = validate_solution(lp, sol, tol=args.tol)
    print(yaml.safe_dump(rep.as_dict(), sort_keys=False).rstrip())
    if not rep.passed:
        raise ValidationFailed(f"residuals above {args.tol}: {rep}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bevpsm", description="BEV profile sampling and capacity expansion experiments")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-pool", help="generate a BEV profile pool")
    g.add_argument("--config", help="generator YAML (default: bundled)")
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--seed", type=int, default=1, help="profile i uses seed + i")
    g.add_argument("--out", required=True)
    g.add_argument("--system", help="take horizon and start weekday from this system config")
    g.add_argument("--horizon-hours", type=int)
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(func=cmd_gen_pool)

    s = sub.add_parser("sample", help="draw profile samples from a pool")
    s.add_argument("--pool")
    s.add_argument("--sizes", default="2,5,10,20")
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--seed", type=int, default=2024)
    s.add_argument("--fleet", type=int, default=15_000_000)
    s.add_argument("--trim", type=float, help="drop samples deviating more than this share from the pool mean")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    r = sub.add_parser("run", help="solve one scenario (--profiles 0 for the reference)")
    r.add_argument("--config", help="system YAML or bundled name")
    r.add_argument("--profiles", type=int, default=0)
    r.add_argument("--pool")
    r.add_argument("--profile-ids", help="comma-separated ids instead of a seeded draw")
    r.add_argument("--sample-id", type=int, default=0)
    r.add_argument("--seed", type=int, default=2024)
    r.add_argument("--strategy", choices=("smart", "bidirectional"), default="smart")
    r.add_argument("--fleet", type=float, default=15_000_000)
    r.add_argument("--setting")
    r.add_argument("--tol", type=float, default=1e-9)
    r.add_argument("--time-limit", type=float, default=600.0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="run an experiment grid")
    w.add_argument("--config", help="experiment YAML or bundled name (desk, full)")
    w.add_argument("--out", required=True)
    w.add_argument("--mode", choices=("sequential", "timing", "parallel"))
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("report", help="re-emit tables and plots from a results CSV")
    o.add_argument("--results", help="results.csv or the sweep directory")
    o.add_argument("--out")
    o.set_defaults(func=cmd_report)

    v = sub.add_parser("validate", help="check a stored solution against its model without solving")
    v.add_argument("--model")
    v.add_argument("--solution")
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=cmd_validate)

    for sp in (g, s, r, w, o, v):
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override")
        sp.add_argument("--from-manifest", help="take arguments from a previous run's manifest.yaml")
    return p


def _apply_manifest(args, parser) -> None:
    doc = yaml.safe_load(Path(args.from_manifest).read_text())
    if not isinstance(doc, dict):
        raise InputError(f"{args.from_manifest}: not a manifest")
    if doc.get("command", "sweep" if doc.get("kind") == "bevpsm-experiment" else None) != args.command:
        raise InputError(f"{args.from_manifest}: manifest is for {doc.get('command')!r}, not {args.command!r}")
    for k, v in (doc.get("arguments") or {}).items():
        if k not in ("out", "command"):
            setattr(args, k, v)
    for path, digest in (doc.get("inputs") or {}).items():
        if Path(path).is_file() and file_sha256(path) != digest:
            raise InputError(f"{path} changed since the manifest was written")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING if args.quiet else logging.DEBUG if args.verbose > 1
                            else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
        if args.from_manifest and args.command != "sweep":
            _apply_manifest(args, parser)
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except ConfigurationError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except GenerationError as exc:
        return _fail("generation", exc, EXIT_GENERATION)
    except SolverError as exc:
        return _fail("solver", exc, EXIT_SOLVER)
    except ValidationFailed as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except (InputError, MpsFormatError, SolutionFileError, LpInputError, FileNotFoundError, yaml.YAMLError) as exc:
        return _fail("input", exc, EXIT_INPUT)
    except Exception as exc:  # noqa: BLE001
        return _fail("unexpected", exc, EXIT_UNEXPECTED)


def _fail(category: str, exc: Exception, code: int) -> int:
    print(f"error[{category}]: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
