"""Stepwise global error control by quenching.

A high-order method is run alongside the adaptive pair on the same nodes.
Its solution serves as a proxy for the exact one: when the carried solution
drifts from it by more than the global tolerance, the carried position and
velocity are overwritten with the high-order values at that node. The step
itself is not recomputed, and the high-order chain never sees the
replacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controller import (
    IntegrationError,
    ToleranceSpec,
    Trajectory,
    _adaptive_loop,
    scaled_norm,
)
from .problem import SecondOrderIVP
from .stepper import StepState, step
from .tableau import NystromTableau

__all__ = [
    "ToleranceInfeasibleError",
    "QuenchEvent",
    "QuenchedTrajectory",
    "integrate_quenched",
    "summarize",
    "MAX_CONSECUTIVE_QUENCHES",
]

MAX_CONSECUTIVE_QUENCHES = 50


class ToleranceInfeasibleError(IntegrationError):
    """Every node was quenched for too long; the global tolerance is out of
    reach at the chosen local tolerance."""


@dataclass(frozen=True)
class QuenchEvent:
    node: int
    x: float
    err_before: float
    err_after: float


@dataclass
class QuenchedTrajectory(Trajectory):
    """Trajectory of the carried solution plus the high-order chain.

    ``global_err_est[i]`` is the estimated global error of the carried
    solution at node ``i`` after any quench (zero at quenched nodes);
    the pre-quench value is kept in the matching :class:`QuenchEvent`.
    """

    z_w: np.ndarray = None
    z_wprime: np.ndarray = None
    global_err_est: np.ndarray = None
    quenched: np.ndarray = None
    events: list = field(default_factory=list)

    @property
    def quench_count(self) -> int:
        return int(np.count_nonzero(self.quenched))

    @property
    def max_global_err_est(self) -> float:
        return float(np.max(self.global_err_est))


def integrate_quenched(
    triple: tuple[NystromTableau, NystromTableau, NystromTableau],
    p: SecondOrderIVP,
    tol: ToleranceSpec,
    x_end: float,
    h0: Optional[float] = None,
) -> QuenchedTrajectory:
    """Adaptive pair integration with quenching against a high-order chain.

    ``triple`` is ``(low, high, z)`` with increasing orders. Raises
    :class:`ToleranceInfeasibleError` if 50 consecutive nodes all needed a
    quench, in addition to the errors of
    :func:`~rknq.controller.integrate_local`.
    """
    low, high, zt = triple
    if not low.order < high.order < zt.order:
        raise ValueError("orders must increase along (low, high, z)")
    tol_g = tol.global_
    rule = tol.norm

    z = StepState.initial(p)
    z_ws, z_wps = [z.w], [z.wprime]
    g_err = [0.0]
    flags = [False]
    events: list[QuenchEvent] = []
    run = 0

    def on_accept(node: int, h: float, cand: StepState) -> Optional[StepState]:
        nonlocal z, run
        z_next = step(zt, p, z, h)
        z = StepState(cand.x, z_next.w, z_next.wprime)
        z_ws.append(z.w)
        z_wps.append(z.wprime)
        err = scaled_norm(cand.w - z.w, z.w, rule)
        if not math.isfinite(err):
            err = math.inf
        if err > tol_g:
            events.append(QuenchEvent(node, cand.x, err, 0.0))
            g_err.append(0.0)
            flags.append(True)
            run += 1
            if run >= MAX_CONSECUTIVE_QUENCHES:
                raise ToleranceInfeasibleError(
                    f"{run} consecutive quenches up to x={cand.x!r}; "
                    f"global tolerance {tol_g:g} unattainable at local tolerance {tol.local:g}"
                )
            return StepState(cand.x, z.w.copy(), z.wprime.copy())
        g_err.append(err)
        flags.append(False)
        run = 0
        return None

    base = _adaptive_loop((low, high), p, tol, x_end, h0, on_accept)
    nfev = dict(base.nfev)
    nfev[zt.name] = nfev.get(zt.name, 0) + base.steps * zt.stages
    return QuenchedTrajectory(
        x=base.x,
        w=base.w,
        wprime=base.wprime,
        h=base.h,
        err_local=base.err_local,
        rejected=base.rejected,
        nfev=nfev,
        norm=base.norm,
        z_w=np.array(z_ws),
        z_wprime=np.array(z_wps),
        global_err_est=np.array(g_err),
        quenched=np.array(flags, dtype=bool),
        events=events,
    )


@dataclass(frozen=True)
class Summary:
    nodes: int
    steps: int
    rejected: int
    quench_count: int
    max_global_err_est: float
    max_true_err: Optional[float]
    nfev: dict

    def line(self) -> str:
        true = "n/a" if self.max_true_err is None else f"{self.max_true_err:.3e}"
        est = "n/a" if math.isnan(self.max_global_err_est) else f"{self.max_global_err_est:.3e}"
        fev = " ".join(f"{k}={v}" for k, v in self.nfev.items())
        return (
            f"max_est_global_err={est} max_true_err={true} quenches={self.quench_count} "
            f"steps={self.steps} rejected={self.rejected} fevals[{fev}] total_fevals={sum(self.nfev.values())}"
        )


def summarize(t: Trajectory, p: Optional[SecondOrderIVP] = None) -> Summary:
    """Summary figures for a finished run.

    ``max_true_err`` is filled in when ``p`` carries a reference solution.
    Plain trajectories report no quenches and a NaN global estimate.
    """
    max_true = None
    if p is not None and p.reference is not None:
        max_true = float(np.max(t.true_errors(p)))
    if isinstance(t, QuenchedTrajectory):
        est, count = t.max_global_err_est, t.quench_count
    else:
        est, count = math.nan, 0
    return Summary(
        nodes=len(t),
        steps=t.steps,
        rejected=t.rejected,
        quench_count=count,
        max_global_err_est=est,
        max_true_err=max_true,
        nfev=dict(t.nfev),
    )
