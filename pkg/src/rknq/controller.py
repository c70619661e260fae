"""Adaptive integration with an embedded Nystrom pair and local extrapolation.

Both members of the pair step from the same state; the difference of their
positions estimates the local error of the lower-order member, and the
higher-order result is the one carried forward.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .problem import EvaluationError, SecondOrderIVP
from .stepper import StepState, step
from .tableau import NystromTableau

__all__ = [
    "IntegrationError",
    "StepsizeUnderflowError",
    "RejectionStormError",
    "NORM_RULES",
    "ToleranceSpec",
    "StepAttempt",
    "Trajectory",
    "scaled_norm",
    "propose_stepsize",
    "attempt_step",
    "integrate_local",
    "integrate_fixed",
]

log = logging.getLogger(__name__)

SAFETY = 0.9
GROW_MIN = 0.2
GROW_MAX = 5.0
UNDERFLOW_FRACTION = 1e-14
MAX_REJECTIONS = 30
DEFAULT_STEPS = 1000

NORM_RULES = ("mixed", "absolute", "relative")


class IntegrationError(RuntimeError):
    """An integration could not be completed."""


class StepsizeUnderflowError(IntegrationError):
    pass


class RejectionStormError(IntegrationError):
    pass


@dataclass(frozen=True)
class ToleranceSpec:
    """Local and global tolerances plus the error-norm rule.

    ``norm`` is one of ``"mixed"`` (absolute below unit magnitude, relative
    above), ``"absolute"`` or ``"relative"``.
    """

    local: float
    global_: float = math.inf
    norm: str = "mixed"

    def __post_init__(self):
        if not self.local > 0.0:
            raise ValueError(f"local tolerance must be positive, got {self.local!r}")
        if not self.global_ > 0.0:
            raise ValueError(f"global tolerance must be positive, got {self.global_!r}")
        if self.norm not in NORM_RULES:
            raise ValueError(f"unknown norm rule {self.norm!r}; expected one of {NORM_RULES}")


def scaled_norm(delta, w_ref, rule: str = "mixed") -> float:
    """Max-norm of ``delta`` scaled componentwise by the reference magnitude.

    The mixed rule divides by ``max(1, |w_ref_j|)``.
    """
    delta = np.abs(np.asarray(delta, dtype=float))
    if delta.size == 0:
        return 0.0
    if rule == "absolute":
        return float(np.max(delta))
    mag = np.abs(np.asarray(w_ref, dtype=float))
    if delta.shape != mag.shape:
        raise ValueError(f"shape mismatch: {delta.shape} vs {mag.shape}")
    if rule == "mixed":
        return float(np.max(delta / np.maximum(1.0, mag)))
    if rule == "relative":
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(delta == 0.0, 0.0, delta / mag)
        return float(np.max(ratio))
    raise ValueError(f"unknown norm rule {rule!r}")


def propose_stepsize(h: float, err_local: float, tol_local: float) -> float:
    """Next step size from the order-4 local error estimate."""
    if err_local == 0.0:
        return h * GROW_MAX
    factor = SAFETY * (tol_local / err_local) ** 0.2
    return h * min(GROW_MAX, max(GROW_MIN, factor))


@dataclass(frozen=True)
class StepAttempt:
    h: float
    err_local: float
    accepted: bool
    h_next: float


def attempt_step(
    pair: tuple[NystromTableau, NystromTableau],
    p: SecondOrderIVP,
    s: StepState,
    h: float,
    tol: ToleranceSpec,
) -> tuple[StepAttempt, StepState]:
    """Try one step of size ``h``; returns the attempt record and the
    higher-order candidate state."""
    low, high = pair
    try:
        w_low = step(low, p, s, h)
        w_high = step(high, p, s, h)
    except EvaluationError:
        if not p.recoverable:
            raise
        return StepAttempt(h, math.inf, False, h * GROW_MIN), s
    err = scaled_norm(w_high.w - w_low.w, w_high.w, tol.norm)
    if not math.isfinite(err):
        err = math.inf
    accepted = err <= tol.local
    return StepAttempt(h, err, accepted, propose_stepsize(h, err, tol.local)), w_high


@dataclass
class Trajectory:
    """Node sequence of an integration.

    ``h[i]`` is the step that produced node ``i`` (``h[0]`` is 0) and
    ``err_local[i]`` its accepted local error estimate.
    """

    x: np.ndarray
    w: np.ndarray
    wprime: np.ndarray
    h: np.ndarray
    err_local: np.ndarray
    rejected: int = 0
    nfev: dict = field(default_factory=dict)
    norm: str = "mixed"

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def steps(self) -> int:
        return len(self) - 1

    def state(self, i: int) -> StepState:
        return StepState(float(self.x[i]), self.w[i].copy(), self.wprime[i].copy())

    def true_errors(self, p: SecondOrderIVP) -> np.ndarray:
        """Scaled true position error at each node, using ``p.reference``."""
        if p.reference is None:
            raise ValueError("problem has no reference solution")
        out = np.empty(len(self))
        for i, x in enumerate(self.x):
            y, _ = p.reference(float(x))
            out[i] = scaled_norm(self.w[i] - y, y, self.norm)
        return out


# called after each accepted step with (node index, h, candidate state);
# may return a replacement for the carried state
AcceptHook = Callable[[int, float, StepState], Optional[StepState]]


def _adaptive_loop(
    pair: tuple[NystromTableau, NystromTableau],
    p: SecondOrderIVP,
    tol: ToleranceSpec,
    x_end: float,
    h0: Optional[float],
    on_accept: Optional[AcceptHook] = None,
) -> Trajectory:
    low, high = pair
    if high.order != low.order + 1:
        raise ValueError(f"pair orders must differ by one, got {low.order} and {high.order}")
    span = x_end - p.x0
    if not span > 0.0:
        raise ValueError(f"x_end must exceed x0={p.x0}, got {x_end}")
    h = span / DEFAULT_STEPS if h0 is None else float(h0)
    if not h > 0.0:
        raise ValueError(f"initial step must be positive, got {h!r}")
    h_min = UNDERFLOW_FRACTION * span

    s = StepState.initial(p)
    xs, ws, wps, hs, errs = [s.x], [s.w], [s.wprime], [0.0], [0.0]
    rejected = 0
    consecutive = 0
    attempts = 0
    while s.x < x_end:
        # never leave a remainder too short to step over
        last = s.x + h >= x_end - h_min
        if last:
            h = x_end - s.x
        if h < h_min:
            raise StepsizeUnderflowError(f"step size {h:.3e} underflowed at x={s.x!r}")
        attempts += 1
        att, cand = attempt_step(pair, p, s, h, tol)
        if not att.accepted:
            rejected += 1
            consecutive += 1
            if consecutive >= MAX_REJECTIONS:
                raise RejectionStormError(f"{consecutive} consecutive rejections at x={s.x!r}, h={h:.3e}")
            h = att.h_next
            continue
        consecutive = 0
        if last:
            cand = StepState(x_end, cand.w, cand.wprime)
        if on_accept is not None:
            repl = on_accept(len(xs), att.h, cand)
            if repl is not None:
                cand = repl
        s = cand
        xs.append(s.x)
        ws.append(s.w)
        wps.append(s.wprime)
        hs.append(att.h)
        errs.append(att.err_local)
        h = att.h_next

    log.debug("adaptive run: %d steps, %d rejected", len(xs) - 1, rejected)
    return Trajectory(
        x=np.array(xs),
        w=np.array(ws),
        wprime=np.array(wps),
        h=np.array(hs),
        err_local=np.array(errs),
        rejected=rejected,
        nfev={low.name: attempts * low.stages, high.name: attempts * high.stages},
        norm=tol.norm,
    )


def integrate_local(
    pair: tuple[NystromTableau, NystromTableau],
    p: SecondOrderIVP,
    tol: ToleranceSpec,
    x_end: float,
    h0: Optional[float] = None,
) -> Trajectory:
    """Integrate to ``x_end`` under local error control.

    The last step is shortened to land exactly on ``x_end``. Raises
    :class:`StepsizeUnderflowError` when the step drops below
    ``1e-14 * (x_end - x0)`` and :class:`RejectionStormError` after 30
    consecutive rejections.
    """
    return _adaptive_loop(pair, p, tol, x_end, h0)


def integrate_fixed(
    t: NystromTableau,
    p: SecondOrderIVP,
    h: float,
    x_end: float,
    norm: str = "mixed",
) -> Trajectory:
    """Fixed-step integration with a single method.

    Takes ``round((x_end - x0) / h)`` equal steps (at least one), so the
    step actually used is adjusted to divide the interval exactly.
    """
    span = x_end - p.x0
    if not span > 0.0 or not h > 0.0:
        raise ValueError("need x_end > x0 and h > 0")
    n = max(1, int(round(span / h)))
    h_eff = span / n
    s = StepState.initial(p)
    xs, ws, wps = [s.x], [s.w], [s.wprime]
    for i in range(1, n + 1):
        s = step(t, p, s, h_eff)
        # abscissas from the node index, not accumulated sums
        x = x_end if i == n else p.x0 + i * h_eff
        s = StepState(x, s.w, s.wprime)
        xs.append(x)
        ws.append(s.w)
        wps.append(s.wprime)
    hs = np.full(n + 1, h_eff)
    hs[0] = 0.0
    return Trajectory(
        x=np.array(xs),
        w=np.array(ws),
        wprime=np.array(wps),
        h=hs,
        err_local=np.full(n + 1, np.nan),
        nfev={t.name: n * t.stages},
        norm=norm,
    )
