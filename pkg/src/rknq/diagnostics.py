"""Error-propagation instrumentation and empirical convergence orders.

The global position error of a one-step method obeys

    Delta_{i+1} = eps_{i+1} + alpha_i Delta_i,    alpha_i = I + h_i F_y,

where ``F`` is the increment function (``w_next = w + h F``) and ``F_y`` its
Jacobian with respect to position. The velocity is an internal parameter of
``F``: the local error ``eps_{i+1}`` is the error of a step started from the
exact position and the carried velocity, so the relation above is exact up
to the Taylor remainder (which vanishes for linear ``f``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .controller import integrate_fixed
from .problem import SecondOrderIVP
from .stepper import StepState, eval_increment, step
from .tableau import NystromTableau

__all__ = [
    "PropagationRecord",
    "propagation_matrix",
    "verify_recurrence",
    "OrderStudy",
    "observed_order",
    "ROUNDING_FLOOR",
]

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)
ROUNDING_FLOOR = 1e-13


def propagation_matrix(t: NystromTableau, p: SecondOrderIVP, s: StepState, h: float) -> np.ndarray:
    """``I + h * dF/dw`` at ``s`` by central differences (velocity held fixed)."""
    n = s.w.shape[0]
    jac = np.empty((n, n))
    for j in range(n):
        delta = _FD_STEP * max(1.0, abs(s.w[j]))
        wp = s.w.copy()
        wm = s.w.copy()
        wp[j] += delta
        wm[j] -= delta
        fp = eval_increment(t, p, StepState(s.x, wp, s.wprime), h)
        fm = eval_increment(t, p, StepState(s.x, wm, s.wprime), h)
        jac[:, j] = (fp - fm) / (wp[j] - wm[j])
    return np.eye(n) + h * jac


@dataclass(frozen=True)
class PropagationRecord:
    """Terms of the error recurrence for the step into node ``i + 1``."""

    x: float
    alpha: np.ndarray
    eps_local: np.ndarray
    delta_global: np.ndarray
    residual: np.ndarray


def verify_recurrence(
    t: NystromTableau,
    p: SecondOrderIVP,
    h: float,
    x_end: float,
) -> list[PropagationRecord]:
    """Fixed-step run checking the global error recurrence node by node.

    Record ``i`` describes the step from node ``i`` to ``i + 1``:
    ``delta_global`` is ``w_{i+1} - y(x_{i+1})`` and ``residual`` is
    ``delta_global - eps_local - alpha @ Delta_i``.
    """
    if p.reference is None:
        raise ValueError("verify_recurrence needs a reference solution")
    traj = integrate_fixed(t, p, h, x_end)
    records = []
    delta_prev = np.zeros(p.dim)
    for i in range(traj.steps):
        x_i, x_next = float(traj.x[i]), float(traj.x[i + 1])
        h_i = x_next - x_i
        y_i, _ = p.reference(x_i)
        y_next, _ = p.reference(x_next)
        anchored = StepState(x_i, np.asarray(y_i, dtype=float), traj.wprime[i].copy())
        eps = step(t, p, anchored, h_i).w - y_next
        alpha = propagation_matrix(t, p, anchored, h_i)
        delta = traj.w[i + 1] - y_next
        residual = delta - eps - alpha @ delta_prev
        records.append(PropagationRecord(x_next, alpha, eps, delta, residual))
        delta_prev = delta
    return records


@dataclass(frozen=True)
class OrderStudy:
    """Result of a fixed-step convergence study.

    ``orders[k]`` compares runs ``k`` and ``k + 1``; it is ``None`` when
    either error is at the rounding floor (``floored[k]`` is then True).
    """

    h: tuple[float, ...]
    errors: tuple[float, ...]
    orders: tuple[Optional[float], ...]
    floored: tuple[bool, ...]

    @property
    def slopes(self) -> list[float]:
        return [o for o in self.orders if o is not None]


def observed_order(
    t: NystromTableau,
    p: SecondOrderIVP,
    h_list: Sequence[float],
    x_end: float,
) -> OrderStudy:
    """Empirical global order from fixed-step runs at decreasing ``h``.

    The error of each run is ``max|w - y| / max(1, max|y|)`` at ``x_end``:
    relative to the size of the whole solution vector, so a component that
    happens to sit near zero at ``x_end`` cannot dominate the measurement.
    Steps are adjusted to divide the interval exactly, and the slope uses
    the adjusted sizes, so exact halving gives ``log2(e(2h) / e(h))``.
    """
    if p.reference is None:
        raise ValueError("observed_order needs a reference solution")
    if len(h_list) < 2:
        raise ValueError("need at least two step sizes")
    y_end = np.asarray(p.reference(x_end)[0], dtype=float)
    scale = max(1.0, float(np.max(np.abs(y_end))))
    hs, errs = [], []
    for h in h_list:
        traj = integrate_fixed(t, p, h, x_end)
        hs.append(float(traj.h[-1]))
        errs.append(float(np.max(np.abs(traj.w[-1] - y_end))) / scale)
    orders, floored = [], []
    for k in range(len(hs) - 1):
        e1, e2 = errs[k], errs[k + 1]
        if e1 < ROUNDING_FLOOR or e2 < ROUNDING_FLOOR:
            orders.append(None)
            floored.append(True)
        else:
            orders.append(math.log(e1 / e2) / math.log(hs[k] / hs[k + 1]))
            floored.append(False)
    return OrderStudy(tuple(hs), tuple(errs), tuple(orders), tuple(floored))
