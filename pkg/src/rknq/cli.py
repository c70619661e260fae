"""Command-line front end: run a built-in problem and write CSV output.

Example::

    rknq --problem sho --method rkn45q10 --tol-local 1e-8 --x-end 200 \\
         --emit errors --output errors.csv
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .controller import (
    NORM_RULES,
    IntegrationError,
    ToleranceSpec,
    Trajectory,
    integrate_fixed,
    integrate_local,
)
from .diagnostics import observed_order
from .problem import DEFAULT_X_END, PROBLEM_NAMES, EvaluationError, second_order_problem
from .quench import QuenchedTrajectory, integrate_quenched, summarize
from .tableau import builtin

log = logging.getLogger("rknq")

SINGLE_METHODS = {"rkn4": "RKN4", "rkn5": "RKN5", "rkn10": "RKN10"}
METHODS = (*SINGLE_METHODS, "rkn45", "rkn45q10")
EMIT = ("trajectory", "errors", "convergence")
DEFAULT_FIXED_H = 0.2
CONVERGENCE_RUNS = 5

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str
    method: str
    tol_local: float = 1e-8
    tol_global: Optional[float] = None
    x_end: Optional[float] = None
    h0: Optional[float] = None
    fixed_h: Optional[float] = None
    emit: str = "errors"
    output: Optional[Path] = None
    norm: Optional[str] = None
    via_transform: bool = False

    def check(self) -> None:
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEM_NAMES)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.emit not in EMIT:
            raise ConfigError(f"unknown output kind {self.emit!r}; choose from {', '.join(EMIT)}")
        if self.norm is not None and self.norm not in NORM_RULES:
            raise ConfigError(f"unknown norm {self.norm!r}")
        single = self.method in SINGLE_METHODS
        if self.fixed_h is not None and not single:
            raise ConfigError("--fixed-h applies to single methods only (rkn4, rkn5, rkn10)")
        if single and self.fixed_h is None and self.emit != "convergence":
            raise ConfigError(f"{self.method} has no error estimator; give --fixed-h")
        if self.emit == "convergence" and not single:
            raise ConfigError("convergence output needs a single method (rkn4, rkn5, rkn10)")
        for label, v in (("--tol-local", self.tol_local), ("--tol-global", self.tol_global),
                         ("--h0", self.h0), ("--fixed-h", self.fixed_h)):
            if v is not None and not (v > 0.0):
                raise ConfigError(f"{label} must be positive")


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.16e}"


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_trajectory(path: Path, t: Trajectory) -> None:
    n = t.w.shape[1]
    header = ["x", *(f"w_{j + 1}" for j in range(n)), *(f"wprime_{j + 1}" for j in range(n))]
    rows = (
        [_fmt(t.x[i]), *map(_fmt, t.w[i]), *map(_fmt, t.wprime[i])]
        for i in range(len(t))
    )
    _write_csv(path, header, rows)


def write_errors(path: Path, t: Trajectory, true_err: Optional[np.ndarray]) -> None:
    quenched = isinstance(t, QuenchedTrajectory)
    header = ["x", "h", "err_local_est", "err_global_est", "err_true", "quench"]
    rows = []
    for i in range(len(t)):
        first = i == 0
        rows.append([
            _fmt(t.x[i]),
            "" if first else _fmt(t.h[i]),
            "" if first else _fmt(t.err_local[i]),
            _fmt(t.global_err_est[i]) if quenched else "",
            "" if true_err is None else _fmt(true_err[i]),
            str(int(quenched and bool(t.quenched[i]))),
        ])
    _write_csv(path, header, rows)


def write_convergence(path: Path, study) -> None:
    rows = []
    for k, (h, e) in enumerate(zip(study.h, study.errors)):
        order = "" if k == 0 or study.orders[k - 1] is None else _fmt(study.orders[k - 1])
        rows.append([_fmt(h), _fmt(e), order])
    _write_csv(path, ["h", "err_global_true", "observed_order"], rows)


def run(cfg: RunConfig, out=None) -> int:
    """Execute one configured run; returns the process exit status."""
    out = sys.stdout if out is None else out
    try:
        cfg.check()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    p = second_order_problem(cfg.problem, via_transform=cfg.via_transform)
    x_end = DEFAULT_X_END[cfg.problem] if cfg.x_end is None else cfg.x_end
    if not x_end > p.x0:
        print(f"error: --x-end must exceed x0={p.x0}", file=sys.stderr)
        return EXIT_USAGE
    norm = cfg.norm or p.norm
    output = cfg.output or Path(f"{cfg.emit}.csv")
    tol = ToleranceSpec(cfg.tol_local, cfg.tol_global or cfg.tol_local, norm)

    try:
        if cfg.emit == "convergence":
            h = cfg.fixed_h or DEFAULT_FIXED_H
            hs = [h / 2**k for k in range(CONVERGENCE_RUNS)]
            study = observed_order(builtin(SINGLE_METHODS[cfg.method]), p, hs, x_end)
            write_convergence(output, study)
            slopes = " ".join("floor" if o is None else f"{o:.3f}" for o in study.orders)
            print(f"{cfg.problem} {cfg.method}: orders {slopes} -> {output}", file=out)
            return EXIT_OK
        if cfg.method in SINGLE_METHODS:
            traj = integrate_fixed(builtin(SINGLE_METHODS[cfg.method]), p, cfg.fixed_h, x_end, norm)
        elif cfg.method == "rkn45":
            traj = integrate_local((builtin("RKN4"), builtin("RKN5")), p, tol, x_end, cfg.h0)
        else:
            triple = (builtin("RKN4"), builtin("RKN5"), builtin("RKN10"))
            traj = integrate_quenched(triple, p, tol, x_end, cfg.h0)
    except (IntegrationError, EvaluationError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    true_err = traj.true_errors(p) if p.reference is not None else None
    if cfg.emit == "trajectory":
        write_trajectory(output, traj)
    else:
        write_errors(output, traj, true_err)
    summary = summarize(traj, p)
    print(f"{cfg.problem} {cfg.method}: {summary.line()} -> {output}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rknq",
        description="Nystrom integration with local error control and global error quenching.",
    )
    ap.add_argument("--problem", required=True, help=f"built-in problem: {', '.join(PROBLEM_NAMES)}")
    ap.add_argument("--method", required=True, help=f"one of {', '.join(METHODS)}")
    ap.add_argument("--tol-local", type=float, default=1e-8)
    ap.add_argument("--tol-global", type=float, default=None, help="defaults to --tol-local")
    ap.add_argument("--x-end", type=float, default=None, help="end of the interval (problem default if omitted)")
    ap.add_argument("--h0", type=float, default=None, help="initial step for adaptive methods")
    ap.add_argument("--fixed-h", type=float, default=None, help="fixed step for single methods")
    ap.add_argument("--emit", default="errors", help=f"output kind: {', '.join(EMIT)}")
    ap.add_argument("--output", type=Path, default=None, help="CSV path (default: <emit>.csv)")
    ap.add_argument("--norm", default=None, help=f"error norm ({', '.join(NORM_RULES)}); problem default if omitted")
    ap.add_argument("--via-transform", action="store_true",
                    help="build f from the first-order form through the chain-rule transformation")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; usage errors are status 1 here
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    cfg = RunConfig(
        problem=args.problem,
        method=args.method.lower(),
        tol_local=args.tol_local,
        tol_global=args.tol_global,
        x_end=args.x_end,
        h0=args.h0,
        fixed_h=args.fixed_h,
        emit=args.emit,
        output=args.output,
        norm=args.norm,
        via_transform=args.via_transform,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
