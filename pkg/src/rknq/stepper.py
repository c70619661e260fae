"""Single explicit Nystrom steps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import EvaluationError, SecondOrderIVP
from .tableau import NystromTableau

__all__ = ["StepState", "compute_stages", "eval_increment", "step"]


@dataclass(frozen=True, eq=False)
class StepState:
    """Abscissa, position ``w`` and velocity ``wprime`` at one node."""

    x: float
    w: np.ndarray
    wprime: np.ndarray

    @classmethod
    def initial(cls, p: SecondOrderIVP) -> "StepState":
        return cls(p.x0, p.y0.copy(), p.y0prime.copy())

    def copy(self) -> "StepState":
        return StepState(self.x, self.w.copy(), self.wprime.copy())


def compute_stages(t: NystromTableau, p: SecondOrderIVP, s: StepState, h: float) -> np.ndarray:
    """Return the ``(m, n)`` array of stage accelerations ``k``.

    ``f`` is called exactly ``t.stages`` times, in stage order.
    """
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h!r}")
    f = p.f
    x, w, wp = s.x, s.w, s.wprime
    c = t.c
    rows = t._rows
    h2 = h * h
    k = np.empty((t.stages, w.shape[0]))
    for i in range(t.stages):
        ch = c[i] * h
        arg = w + ch * wp
        if i:
            # ascending-stage dot product over the explicit part of row i
            arg = arg + h2 * (rows[i] @ k[:i])
        xi = x + ch
        ki = f(xi, arg)
        k[i] = ki
        if not np.all(np.isfinite(k[i])):
            raise EvaluationError("f returned non-finite values", xi, arg, stage=i + 1)
    return k


def _increment(t: NystromTableau, s: StepState, h: float, k: np.ndarray) -> np.ndarray:
    return s.wprime + h * (t.b @ k)


def eval_increment(t: NystromTableau, p: SecondOrderIVP, s: StepState, h: float) -> np.ndarray:
    """Increment ``F`` with ``w_next = w + h * F``; velocity is held as a parameter."""
    return _increment(t, s, h, compute_stages(t, p, s, h))


def step(t: NystromTableau, p: SecondOrderIVP, s: StepState, h: float) -> StepState:
    """Advance ``s`` by one step of size ``h``."""
    k = compute_stages(t, p, s, h)
    w = s.w + h * _increment(t, s, h, k)
    wprime = s.wprime + h * (t.bhat @ k)
    return StepState(s.x + h, w, wprime)
