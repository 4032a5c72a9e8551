"""Batch experiment front end.

Subcommands read a config file, run the requested engines and write an
RFC-4180 CSV plus a ``<out>.meta.json`` sidecar.  CSV bodies are
deterministic for a fixed (config, seed); timestamps live only in the
sidecar.  Exit codes: 0 success, 1 usage or config error, 2 numerical
failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import instantaneous_prob, mean_functional_time
from .config import RunConfig, parse_config
from .econ import optimize_m
from .errors import ConfigError, NumericalError, RunawayError, UsageError
from .model import hack_probability
from .montecarlo import (
    estimate_cycle_hack_prob,
    estimate_mean_functional_time,
    simulate_replications,
    survival_curve_from_outcomes,
)
from .streams import mix_seed

__all__ = ["entry_point", "main"]

_ENGINES = ("mc", "analytic", "both")
_Z_LIMIT = 4.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="quorumsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "p-mk": "per-cycle hack probability",
        "mean-time": "mean functional time",
        "prob-curve": "probability of not being hacked over a time grid",
        "sweep-m": "mean functional time swept over quorum sizes",
        "sweep-k": "mean functional time swept over hacker counts",
        "optimize": "net-revenue-rate optimum over quorum sizes",
        "validate": "cross-engine agreement checks (exit 3 on disagreement)",
    }
    for name, help_text in commands.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the run configuration")
        cmd.add_argument("--out", required=True, help="path of the CSV to write")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--reps", type=int, default=None, help="override the replication count")
        cmd.add_argument("--workers", type=int, default=None, help="override the worker count")
        cmd.add_argument(
            "--engine",
            choices=_ENGINES,
            default=None,
            help="engine selection (default: both; optimize defaults to analytic)",
        )
        cmd.add_argument(
            "--no-crn",
            action="store_true",
            help="draw each sweep arm from its own decorrelated seed",
        )
    return parser


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise NumericalError(f"refusing to write non-finite CSV value {value!r}")
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_sidecar(out_path: str, meta: dict) -> None:
    meta = dict(meta)
    meta["created_utc"] = datetime.now(timezone.utc).isoformat()
    meta["package_version"] = __version__
    with open(out_path + ".meta.json", "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


class _Run:
    """Resolved settings for one command invocation."""

    def __init__(self, cfg: RunConfig, args, default_engine: str):
        self.cfg = cfg
        self.seed = cfg.seed if args.seed is None else args.seed
        self.reps = cfg.reps if args.reps is None else args.reps
        self.workers = cfg.workers if args.workers is None else args.workers
        self.engine = default_engine if args.engine is None else args.engine
        self.crn = not args.no_crn
        self.out = args.out
        if self.reps < 2:
            raise UsageError("--reps must be at least 2")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.seed < 0:
            raise UsageError("--seed must be a nonnegative 64-bit integer")

    def arm_seed(self, arm_index: int) -> int:
        return self.seed if self.crn else mix_seed(self.seed, arm_index)

    def meta(self, command: str, config_text: str, extra: dict | None = None) -> dict:
        meta = {
            "command": command,
            "engine": self.engine,
            "seed": self.seed,
            "reps": self.reps,
            "workers": self.workers,
            "common_random_numbers": self.crn,
            "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
            "config": self.cfg.echo(),
        }
        if extra:
            meta.update(extra)
        return meta

    def wants(self, engine: str) -> bool:
        return self.engine in (engine, "both")


def _default_t_grid(cfg: RunConfig, mean_time: float, count: int = 64) -> np.ndarray:
    if cfg.t_grid is not None:
        return np.asarray(cfg.t_grid, dtype=float)
    return np.linspace(0.0, 15.0 * mean_time, count)


def _cmd_p_mk(run: _Run, config_text: str) -> int:
    cfg = run.cfg
    model = cfg.build_model()
    header = ["m", "k"]
    row: list = [model.quorum, model.k]
    if run.wants("analytic"):
        header.append("analytic_p")
        row.append(hack_probability(model, cfg.quad_tol))
    if run.wants("mc"):
        est = estimate_cycle_hack_prob(model, run.reps, run.seed, workers=run.workers)
        header += ["mc_p", "mc_stderr"]
        row += [est.mean, est.stderr]
    _write_csv(run.out, header, [row])
    _write_sidecar(run.out, run.meta("p-mk", config_text))
    return 0


def _cmd_mean_time(run: _Run, config_text: str) -> int:
    cfg = run.cfg
    model = cfg.build_model()
    header = ["m", "k"]
    row: list = [model.quorum, model.k]
    if run.wants("analytic"):
        header.append("analytic_ET")
        row.append(mean_functional_time(model, cfg.quad_tol))
    if run.wants("mc"):
        est = estimate_mean_functional_time(model, run.reps, run.seed, workers=run.workers)
        header += ["mc_ET", "mc_stderr"]
        row += [est.mean, est.stderr]
    _write_csv(run.out, header, [row])
    _write_sidecar(run.out, run.meta("mean-time", config_text))
    return 0


def _cmd_prob_curve(run: _Run, config_text: str) -> int:
    cfg = run.cfg
    model = cfg.build_model()
    t_grid = _default_t_grid(cfg, mean_functional_time(model, cfg.quad_tol))
    header = ["t"]
    columns: list[np.ndarray] = [t_grid]
    if run.wants("analytic"):
        analytic = instantaneous_prob(
            model, t_grid, step=cfg.grid_step, horizon=cfg.horizon, tol=cfg.quad_tol
        )
        header.append("analytic_P")
        columns.append(analytic)
    if run.wants("mc"):
        outcomes = simulate_replications(model, run.reps, run.seed, workers=run.workers)
        curve = survival_curve_from_outcomes(outcomes, t_grid, run.seed)
        header += ["mc_P", "mc_stderr"]
        columns.append(np.array([e.mean for e in curve]))
        columns.append(np.array([e.stderr for e in curve]))
    rows = [[col[i] for col in columns] for i in range(t_grid.shape[0])]
    _write_csv(run.out, header, rows)
    _write_sidecar(run.out, run.meta("prob-curve", config_text))
    return 0


def _sweep(run: _Run, config_text: str, command: str) -> int:
    cfg = run.cfg
    if command == "sweep-m":
        if cfg.sweep_m is None:
            raise UsageError("sweep-m needs an m = start:stop entry in [sweep]")
        lo, hi = cfg.sweep_m
        arms = [("m", value) for value in range(lo, hi + 1)]
    else:
        if cfg.sweep_k is None:
            raise UsageError("sweep-k needs a k = start:stop entry in [sweep]")
        lo, hi = cfg.sweep_k
        arms = [("k", value) for value in range(lo, hi + 1)]
    header = [arms[0][0]]
    if run.wants("analytic"):
        header.append("analytic_ET")
    if run.wants("mc"):
        header += ["mc_ET", "mc_stderr"]
    rows = []
    for index, (kind, value) in enumerate(arms):
        model = cfg.build_model(m=value) if kind == "m" else cfg.build_model(k=value)
        row: list = [value]
        if run.wants("analytic"):
            row.append(mean_functional_time(model, cfg.quad_tol))
        if run.wants("mc"):
            est = estimate_mean_functional_time(
                model, run.reps, run.arm_seed(index), workers=run.workers
            )
            row += [est.mean, est.stderr]
        rows.append(row)
    _write_csv(run.out, header, rows)
    _write_sidecar(run.out, run.meta(command, config_text))
    return 0


def _cmd_optimize(run: _Run, config_text: str) -> int:
    cfg = run.cfg
    if cfg.econ is None:
        raise UsageError("optimize needs an [econ] section")
    if cfg.sweep_m is None:
        raise UsageError("optimize needs an m = start:stop entry in [sweep]")
    if run.engine == "both":
        raise UsageError("optimize runs one engine; choose --engine analytic or --engine mc")
    lo, hi = cfg.sweep_m
    model = cfg.build_model(m=lo)
    result = optimize_m(
        model,
        cfg.econ,
        range(lo, hi + 1),
        engine=run.engine,
        n_reps=run.reps,
        seed=run.seed,
        workers=run.workers,
        tol=cfg.quad_tol,
    )
    header = ["m", "ENR", "flag"]
    if run.engine == "mc":
        header.append("stderr")
    rows = []
    for point in result.points:
        flag = 1 if point.m == result.best_m else (2 if point.tied else 0)
        row: list = [point.m, point.value, flag]
        if run.engine == "mc":
            row.append(point.stderr)
        rows.append(row)
    _write_csv(run.out, header, rows)
    extra = {"best_m": result.best_m, "best_value": result.best_value}
    _write_sidecar(run.out, run.meta("optimize", config_text, extra))
    return 0


def _cmd_validate(run: _Run, config_text: str) -> int:
    cfg = run.cfg
    model = cfg.build_model()
    tol = cfg.quad_tol
    analytic_p = hack_probability(model, tol)
    analytic_et = mean_functional_time(model, tol)
    if cfg.t_grid is not None:
        t_grid = np.asarray(cfg.t_grid, dtype=float)
    else:
        t_grid = analytic_et * np.array([0.0, 0.25, 0.5, 1.0, 1.5])
    analytic_curve = instantaneous_prob(
        model, t_grid, step=cfg.grid_step, horizon=cfg.horizon, tol=tol
    )

    p_est = estimate_cycle_hack_prob(model, run.reps, run.seed, workers=run.workers)
    outcomes = simulate_replications(model, run.reps, run.seed, workers=run.workers)
    et_values = np.fromiter((o.functional_time for o in outcomes), dtype=float, count=run.reps)
    et_mean = float(et_values.mean())
    et_stderr = float(et_values.std(ddof=1) / math.sqrt(run.reps))
    curve = survival_curve_from_outcomes(outcomes, t_grid, run.seed)

    rows = []
    failures = 0

    def add_row(name: str, analytic_value: float, mc_value: float, stderr: float):
        nonlocal failures
        diff = mc_value - analytic_value
        z = diff / max(stderr, 1e-300)
        z = max(min(z, 1e15), -1e15)
        ok = abs(z) <= _Z_LIMIT
        if not ok:
            failures += 1
        rows.append([name, analytic_value, mc_value, stderr, z, 1 if ok else 0])

    add_row("p_mk", analytic_p, p_est.mean, p_est.stderr)
    add_row("mean_functional_time", analytic_et, et_mean, et_stderr)
    for t, analytic_value, est in zip(t_grid, analytic_curve, curve):
        add_row(f"P({t:g})", float(analytic_value), est.mean, est.stderr)

    _write_csv(run.out, ["quantity", "analytic", "mc", "stderr", "z_score", "pass"], rows)
    _write_sidecar(run.out, run.meta("validate", config_text, {"failures": failures}))
    return 3 if failures else 0


_COMMANDS = {
    "p-mk": (_cmd_p_mk, "both"),
    "mean-time": (_cmd_mean_time, "both"),
    "prob-curve": (_cmd_prob_curve, "both"),
    "sweep-m": (lambda run, text: _sweep(run, text, "sweep-m"), "both"),
    "sweep-k": (lambda run, text: _sweep(run, text, "sweep-k"), "both"),
    "optimize": (_cmd_optimize, "analytic"),
    "validate": (_cmd_validate, "both"),
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler, default_engine = _COMMANDS[args.command]
        if args.command == "validate" and args.engine not in (None, "both"):
            raise UsageError("validate always runs both engines")
        config_text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(config_text)
        run = _Run(cfg, args, default_engine)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return handler(run, config_text)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, RunawayError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    raise SystemExit(main())
