"""Command-line front end: figure sweeps, optimisers and MC validation.

Every command reads an INI config (see ``microtrap --help``), writes one
CSV into the output directory together with ``errors.log`` (one line per
failed cell), and exits with 0 on success, 1 when a cell or a validation
check fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from dataclasses import replace
from typing import List, Optional, Sequence

from .analytics import laplace_trapping, trapping_probability
from .barrier import barrier_expected_trapping_time, barrier_laplace
from .config import KEY_REFERENCE, ConfigError, RunConfig, load_config, parse_floats, parse_grid
from .errors import MicrotrapError
from .model import (
    SchemeTag,
    estimate_laplace,
    estimate_subsidy_value,
    estimate_trapping_probability,
)
from .optimize import optimal_barrier, optimal_theta, sweep
from .welfare import subsidy_rate, subsidy_value

__all__ = ["main", "build_parser"]

Z_LIMIT = 4.0
_CAUGHT = (MicrotrapError, ArithmeticError, ValueError)


def fmt(v: Optional[float]) -> str:
    """12 significant digits, locale independent; empty for a missing value."""
    if v is None:
        return ""
    return f"{v:.12g}"


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


class _Run:
    """Output directory, error log and exit status shared by one command."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.errors: List[List[str]] = []
        self.outputs: List[str] = []

    def fail(self, x, scheme: str, exc: BaseException) -> None:
        msg = " ".join(str(exc).split())
        self.errors.append([self.command, fmt(x), scheme, type(exc).__name__, msg])

    def write(self, name: str, header, rows) -> str:
        path = os.path.join(self.cfg.output_dir, name)
        _write_csv(path, header, rows)
        self.outputs.append(path)
        return path

    def finish(self) -> int:
        path = os.path.join(self.cfg.output_dir, "errors.log")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.errors)
        if self.cfg.emit_plots:
            for out in self.outputs:
                _plot(out)
        for e in self.errors:
            print(f"error: x={e[1]} scheme={e[2]} {e[3]}: {e[4]}", file=sys.stderr)
        return 1 if self.errors else 0


def _columns(run: _Run, quantity: str, **kw):
    """One sweep column per scheme, each under its own model parameters."""
    cfg = run.cfg
    labels, cols = [], []
    for e in cfg.schemes:
        table = sweep(e.params, [e.scheme], cfg.x_grid, quantity, welfare=cfg.welfare, **kw)
        for err in table.errors:
            run.errors.append([run.command, fmt(err.x), err.scheme, err.kind,
                               " ".join(err.message.split())])
        labels.append(e.label)
        cols.append(table.column(e.label))
    return labels, cols


def _grid_rows(xs, cols):
    return [[fmt(x)] + [fmt(c[i]) for c in cols] for i, x in enumerate(xs)]


# --- commands -----------------------------------------------------------------


def cmd_trap_prob(run: _Run) -> None:
    labels, cols = _columns(run, "psi")
    run.write("trapping_probabilities.csv", ["x"] + labels, _grid_rows(run.cfg.x_grid, cols))


def cmd_laplace(run: _Run, deltas: Optional[List[float]] = None) -> None:
    cfg = run.cfg
    if deltas is None:
        deltas = parse_floats(cfg.section("laplace").get("deltas", "0, 0.125, 0.03125, 0.0078125"))
    if any(d < 0 for d in deltas):
        raise ConfigError("deltas must be >= 0")
    header, cols = ["x"], []
    for d in deltas:
        labels, c = _columns(run, "laplace", delta=d)
        for label, col in zip(labels, c):
            tag = f"delta={fmt(d)}"
            header.append(tag if len(cfg.schemes) == 1 else f"{label} {tag}")
            cols.append(col)
    run.write("laplace_transforms.csv", header, _grid_rows(cfg.x_grid, cols))


def cmd_expected_time(run: _Run) -> None:
    cfg = run.cfg
    sec = cfg.section("expected_time")
    r_values = parse_floats(sec.get("r_values", fmt(cfg.model.r)))
    axis = sec.get("axis", "x").strip().lower()
    header, cols = [], []

    def name(label, r):
        tag = f"r={fmt(r)}"
        return tag if len(cfg.schemes) == 1 else f"{label} {tag}"

    if axis == "x":
        grid = cfg.x_grid
        header.append("x")
        for e in cfg.schemes:
            for r in r_values:
                e2 = e.rebuild(cfg.model, r=r)
                table = sweep(e2.params, [e2.scheme], grid, "expected_time")
                for err in table.errors:
                    run.errors.append([run.command, fmt(err.x), err.scheme, err.kind,
                                       " ".join(err.message.split())])
                header.append(name(e.label, r))
                cols.append(table.column(e2.label))
    elif axis == "barrier":
        if "x" not in sec:
            raise ConfigError("[expected_time] axis = barrier needs x")
        x = float(sec["x"])
        if "barrier_values" in sec:
            grid = parse_floats(sec["barrier_values"])
        else:
            grid = parse_grid(f"{sec.get('b_min', '1')}:{sec.get('b_max', '10')}:"
                              f"{sec.get('b_points', '91')}")
        header.append("barrier")
        for e in cfg.schemes:
            if e.scheme.tag is not SchemeTag.BARRIER:
                raise ConfigError(f"scheme {e.name!r}: axis = barrier needs barrier schemes")
            for r in r_values:
                e2 = e.rebuild(cfg.model, r=r)
                col = []
                for b in grid:
                    try:
                        col.append(barrier_expected_trapping_time(
                            e2.params, e2.scheme.with_barrier(b), x))
                    except _CAUGHT as exc:
                        run.fail(b, e2.label, exc)
                        col.append(None)
                header.append(name(e.label, r))
                cols.append(col)
    else:
        raise ConfigError("[expected_time] axis must be x or barrier")
    run.write("expected_trapping_times.csv", header, _grid_rows(grid, cols))


def cmd_optimize(run: _Run, target: Optional[str] = None) -> None:
    cfg = run.cfg
    sec = cfg.section("optimize")
    target = (target or sec.get("target", "theta")).strip().lower()
    if target not in ("theta", "barrier"):
        raise ConfigError("optimize target must be theta or barrier")
    chosen = sec.get("scheme")
    pool = [e for e in cfg.schemes if e.scheme.tag is not SchemeTag.UNINSURED]
    if chosen:
        pool = [e for e in cfg.schemes if e.name == chosen]
    if not pool:
        raise ConfigError("optimize needs an insured, subsidised or barrier scheme")
    e = pool[0]
    rows = []
    for x in cfg.x_grid:
        try:
            if target == "theta":
                res = optimal_theta(e.params, e.scheme.kappa, e.scheme.theta, x,
                                    mapping=e.scheme.mapping)
                value = res.value
            else:
                res = optimal_barrier(e.params, e.scheme.kappa, e.scheme.theta, x,
                                      mapping=e.scheme.mapping)
                value = None if res.value is None else res.value - x
            rows.append([fmt(x), fmt(value), res.verdict.value])
        except _CAUGHT as exc:
            run.fail(x, e.label, exc)
            rows.append([fmt(x), "", "Error"])
    name = "optimal_theta.csv" if target == "theta" else "optimal_barrier.csv"
    run.write(name, ["x", "value", "verdict"], rows)


def cmd_cost(run: _Run) -> None:
    labels, cols = _columns(run, "cost")
    run.write("cost_of_social_protection.csv", ["x"] + labels, _grid_rows(run.cfg.x_grid, cols))


def _validation_points(cfg: RunConfig, e) -> List[float]:
    sec = cfg.section("validate")
    if "x_values" in sec:
        return parse_floats(sec["x_values"])
    crit = e.scheme.critical_capital(e.params)
    return [crit + d for d in (0.5, 1.0, 2.0, 4.0, 7.0)]


def cmd_validate(run: _Run) -> None:
    """Closed forms against Monte Carlo, plus boundary, monotonicity and continuity checks."""
    cfg = run.cfg
    sec = cfg.section("validate")
    quantities = [q.strip() for q in sec.get("quantities", "psi").split(",") if q.strip()]
    deltas = parse_floats(sec.get("deltas", "0.03125"))
    rows, failures = [], 0

    def record(label, x, quantity, closed, est):
        nonlocal failures
        z = est.z_score(closed)
        ok = abs(z) <= Z_LIMIT
        failures += not ok
        rows.append([label, fmt(x), quantity, fmt(closed), fmt(est.mean), fmt(est.std_err),
                     fmt(z), fmt(est.truncated_fraction), "PASS" if ok else "FAIL"])

    def check(label, x, name, value, ok):
        nonlocal failures
        failures += not ok
        rows.append([label, fmt(x), name, fmt(value), "", "", "", "", "PASS" if ok else "FAIL"])

    for e in cfg.schemes:
        p, s = e.params, e.scheme
        for x in _validation_points(cfg, e):
            try:
                if "psi" in quantities:
                    record(e.label, x, "psi", trapping_probability(p, s, x),
                           estimate_trapping_probability(p, s, x, cfg.sim))
                if "laplace" in quantities:
                    for d in deltas:
                        record(e.label, x, f"laplace delta={fmt(d)}", laplace_trapping(p, s, x, d),
                               estimate_laplace(p, s, x, d, cfg.sim))
                if "subsidy" in quantities and s.tag in (SchemeTag.SUBSIDISED, SchemeTag.BARRIER):
                    rate = subsidy_rate(p, s, cfg.welfare) if s.tag is SchemeTag.SUBSIDISED else None
                    record(e.label, x, "subsidy", subsidy_value(p, s, x, cfg.welfare),
                           estimate_subsidy_value(p, s, x, cfg.welfare.delta, cfg.sim, rate))
            except _CAUGHT as exc:
                run.fail(x, e.label, exc)
                failures += 1

        crit = s.critical_capital(p)
        try:
            v = trapping_probability(p, s, crit)
            check(e.label, crit, "invariant boundary psi=1", v, abs(v - 1.0) < 1e-12)
            grid = [x for x in cfg.x_grid if x >= crit]
            vals = [trapping_probability(p, s, x) for x in grid]
            worst = max([b - a for a, b in zip(vals, vals[1:])] or [0.0])
            check(e.label, crit, "invariant psi non-increasing", worst, worst <= 1e-12)
            if s.tag is SchemeTag.BARRIER and s.barrier > crit:
                b = s.barrier
                for d in deltas:
                    lo = barrier_laplace(p, s, b, d, side="below")
                    hi = barrier_laplace(p, s, b, d, side="above")
                    gap = abs(lo - hi)
                    check(e.label, b, f"invariant continuity at B delta={fmt(d)}", gap,
                          gap < 1e-8 * max(1.0, abs(lo)))
        except _CAUGHT as exc:
            run.fail(crit, e.label, exc)
            failures += 1

    header = ["scheme", "x", "quantity", "closed_form", "mc_mean", "std_err", "z",
              "truncated_fraction", "status"]
    run.write("validation_report.csv", header, rows)
    total = len(rows)
    print(f"validation: {total - failures}/{total} checks passed (|z| <= {Z_LIMIT:g})")
    for row in rows:
        if row[-1] == "FAIL":
            print("FAIL " + ",".join(row[:3]) + f" z={row[6]}")
    if failures:
        run.errors.append([run.command, "", "", "ValidationFailure",
                           f"{failures} of {total} checks failed"])


# --- plotting -----------------------------------------------------------------


def _plot(csv_path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("warning: matplotlib is not installed; skipping plots", file=sys.stderr)
        return
    with open(csv_path, newline="", encoding="utf-8") as fh:
        data = list(csv.reader(fh))
    if len(data) < 2:
        return
    header, body = data[0], data[1:]
    xs = [float(r[0]) for r in body]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for j, name in enumerate(header[1:], start=1):
        pts = [(x, float(r[j])) for x, r in zip(xs, body) if _is_number(r[j])]
        if pts:
            ax.plot(*zip(*pts), label=name)
    ax.set_xlabel(header[0])
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(os.path.splitext(csv_path)[0] + ".png", dpi=120)
    plt.close(fig)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


# --- entry point --------------------------------------------------------------

COMMANDS = {
    "trap-prob": (cmd_trap_prob, "trapping probability per scheme over the x grid"),
    "laplace": (cmd_laplace, "Laplace transform of the trapping time, one column per delta"),
    "expected-time": (cmd_expected_time, "expected trapping time over x or over the barrier"),
    "optimize": (cmd_optimize, "optimal subsidised loading or optimal barrier per x"),
    "cost": (cmd_cost, "cost of social protection per scheme"),
    "validate": (cmd_validate, "Monte Carlo against the closed forms"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microtrap",
        description=__doc__.splitlines()[0],
        epilog="config keys:\n" + KEY_REFERENCE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text,
                           epilog="config keys:\n" + KEY_REFERENCE,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="INI run configuration")
        p.add_argument("--x-grid", help="override the grid: a,b,c or start:stop:points")
        p.add_argument("--seed", type=int, help="override [sim] seed")
        p.add_argument("--paths", type=int, help="override [sim] n_paths")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--plots", action="store_true", help="also render PNG line charts")
        if name == "laplace":
            p.add_argument("--deltas", help="override [laplace] deltas")
        if name == "optimize":
            p.add_argument("--target", choices=("theta", "barrier"),
                           help="override [optimize] target")
    return parser


def _prepare(args) -> RunConfig:
    cfg = load_config(args.config)
    if not cfg.schemes:
        raise ConfigError("the config defines no [scheme ...] sections")
    if args.x_grid:
        cfg.x_grid = parse_grid(args.x_grid)
    if not cfg.x_grid or any(b < a for a, b in zip(cfg.x_grid, cfg.x_grid[1:])):
        raise ConfigError("x grid must be non-empty and ascending")
    try:
        if args.seed is not None:
            cfg.sim = replace(cfg.sim, seed=args.seed)
        if args.paths is not None:
            cfg.sim = replace(cfg.sim, n_paths=args.paths)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.output_dir = args.out
    cfg.emit_plots = args.plots
    os.makedirs(cfg.output_dir, exist_ok=True)
    if not os.access(cfg.output_dir, os.W_OK):
        raise ConfigError(f"output directory {cfg.output_dir!r} is not writable")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _prepare(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    run = _Run(cfg, args.command)
    fn = COMMANDS[args.command][0]
    kwargs = {}
    try:
        if args.command == "laplace" and args.deltas:
            kwargs["deltas"] = parse_floats(args.deltas)
        if args.command == "optimize" and args.target:
            kwargs["target"] = args.target
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fn(run, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run.finish()


if __name__ == "__main__":
    sys.exit(main())
