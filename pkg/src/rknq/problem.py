"""Initial-value problems and the first-to-second-order transformation.

A first-order problem ``y' = g(x, y)`` becomes ``y'' = f(x, y)`` with

    f_j(x, y) = sum_i dg_j/dy_i (x, y) * g_i(x, y),    y'(x0) = g(x0, y0).

User-supplied evaluators must be pure functions; problem objects are never
mutated after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "EvaluationError",
    "SecondOrderIVP",
    "FirstOrderIVP",
    "fd_jacobian",
    "transform",
    "PROBLEM_NAMES",
    "first_order_problem",
    "second_order_problem",
    "EXP_RATE",
    "DEFAULT_X_END",
]

Evaluator = Callable[[float, np.ndarray], np.ndarray]

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class EvaluationError(ArithmeticError):
    """An evaluator returned non-finite values.

    ``x`` and ``y`` record the evaluation point; ``stage`` is set when the
    failure happened inside a Nystrom stage.
    """

    def __init__(self, message: str, x: float, y, stage: Optional[int] = None):
        super().__init__(message)
        self.x = x
        self.y = np.array(y, dtype=float, copy=True)
        self.stage = stage

    def __str__(self) -> str:
        where = f"x={self.x!r}, y={self.y.tolist()!r}"
        if self.stage is not None:
            where = f"stage {self.stage}, " + where
        return f"{self.args[0]} ({where})"


def _as_vector(v, n: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or (n is not None and arr.shape[0] != n):
        raise ValueError(f"expected a vector of length {n}, got shape {arr.shape}")
    return arr


def _check_finite(values, what: str, x, y) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"{what} returned non-finite values", x, y)
    return values


@dataclass(frozen=True, eq=False)
class SecondOrderIVP:
    """``y'' = f(x, y)``, ``y(x0) = y0``, ``y'(x0) = y0prime``.

    ``reference``, when given, maps ``x`` to the exact ``(y, y')``.
    ``norm`` is the default error-norm rule for this problem (see
    :func:`rknq.controller.scaled_norm`). With ``recoverable=True`` an
    adaptive step whose stages hit non-finite values is rejected and retried
    with a smaller step instead of aborting the run.
    """

    f: Evaluator
    x0: float
    y0: np.ndarray
    y0prime: np.ndarray
    reference: Optional[Callable[[float], tuple[np.ndarray, np.ndarray]]] = None
    name: str = ""
    norm: str = "mixed"
    recoverable: bool = False

    def __post_init__(self):
        y0 = _as_vector(self.y0)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y0prime", _as_vector(self.y0prime, y0.shape[0]))
        object.__setattr__(self, "x0", float(self.x0))
        acc = _check_finite(self.f(self.x0, y0.copy()), "f", self.x0, y0)
        if acc.shape != y0.shape:
            raise ValueError(f"f returned shape {acc.shape}, expected {y0.shape}")
        if self.reference is not None:
            ry, ryp = self.reference(self.x0)
            for got, want, label in ((ry, y0, "y0"), (ryp, self.y0prime, "y0prime")):
                got = np.asarray(got, dtype=float)
                if np.any(np.abs(got - want) > 1e-12 * np.maximum(1.0, np.abs(want))):
                    raise ValueError(f"reference({self.x0}) disagrees with {label}")

    @property
    def dim(self) -> int:
        return self.y0.shape[0]


@dataclass(frozen=True, eq=False)
class FirstOrderIVP:
    """``y' = g(x, y)``, ``y(x0) = y0``.

    ``jacobian(x, y)`` returns the matrix ``J[j, i] = dg_j/dy_i``. Set
    ``autonomous=False`` when ``g`` depends explicitly on ``x``; the
    transformation then adds ``dg/dx`` (by central differences).
    """

    g: Evaluator
    x0: float
    y0: np.ndarray
    jacobian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    reference: Optional[Callable[[float], np.ndarray]] = None
    autonomous: bool = True
    name: str = ""
    norm: str = "mixed"

    def __post_init__(self):
        y0 = _as_vector(self.y0)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "x0", float(self.x0))
        slope = _check_finite(self.g(self.x0, y0.copy()), "g", self.x0, y0)
        if slope.shape != y0.shape:
            raise ValueError(f"g returned shape {slope.shape}, expected {y0.shape}")
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian(self.x0, y0.copy()), dtype=float).reshape(self.dim, self.dim)
            fd = fd_jacobian(self.g, self.x0, y0)
            if np.max(np.abs(jac - fd)) > 1e-6:
                raise ValueError("analytic jacobian disagrees with finite differences at (x0, y0)")

    @property
    def dim(self) -> int:
        return self.y0.shape[0]


def fd_jacobian(g: Evaluator, x: float, y) -> np.ndarray:
    """Central-difference Jacobian ``J[j, i] ~ dg_j/dy_i`` at ``(x, y)``.

    Column ``i`` uses the step ``eps**(1/3) * max(1, |y_i|)``.
    """
    y = _as_vector(y)
    n = y.shape[0]
    jac = np.empty((n, n))
    for i in range(n):
        delta = _FD_STEP * max(1.0, abs(y[i]))
        yp = y.copy()
        ym = y.copy()
        yp[i] += delta
        ym[i] -= delta
        gp = _check_finite(g(x, yp), "g", x, yp)
        gm = _check_finite(g(x, ym), "g", x, ym)
        # actual spacing after rounding of y +/- delta
        jac[:, i] = (gp - gm) / (yp[i] - ym[i])
    return jac


def _fd_dx(g: Evaluator, x: float, y: np.ndarray) -> np.ndarray:
    delta = _FD_STEP * max(1.0, abs(x))
    xp, xm = x + delta, x - delta
    gp = _check_finite(g(xp, y), "g", xp, y)
    gm = _check_finite(g(xm, y), "g", xm, y)
    return (gp - gm) / (xp - xm)


def transform(p: FirstOrderIVP) -> SecondOrderIVP:
    """Rewrite ``y' = g(x, y)`` as ``y'' = f(x, y)``.

    Uses ``p.jacobian`` when supplied, otherwise :func:`fd_jacobian`.
    """
    g = p.g
    jac_fn = p.jacobian
    autonomous = p.autonomous
    n = p.dim

    def f(x, y):
        slope = _check_finite(g(x, y), "g", x, y)
        if jac_fn is None:
            jac = fd_jacobian(g, x, y)
        else:
            jac = _check_finite(jac_fn(x, y), "jacobian", x, y).reshape(n, n)
        acc = jac @ slope
        if not autonomous:
            acc = acc + _fd_dx(g, x, y)
        return acc

    reference = None
    if p.reference is not None:
        ref = p.reference

        def reference(x):
            y = _as_vector(ref(x), n)
            return y, np.asarray(g(x, y), dtype=float)

    y0prime = _check_finite(g(p.x0, p.y0.copy()), "g", p.x0, p.y0)
    return SecondOrderIVP(
        f=f,
        x0=p.x0,
        y0=p.y0.copy(),
        y0prime=y0prime,
        reference=reference,
        name=p.name,
        norm=p.norm,
    )


# -- built-in problems -------------------------------------------------------

EXP_RATE = math.log(1000.0) / 100.0


def _exp1000_first() -> FirstOrderIVP:
    lam = EXP_RATE
    return FirstOrderIVP(
        g=lambda x, y: lam * y,
        x0=0.0,
        y0=[1.0],
        jacobian=lambda x, y: np.array([[lam]]),
        reference=lambda x: np.array([math.exp(lam * x)]),
        name="exp1000",
        norm="absolute",
    )


def _exp1000_second() -> SecondOrderIVP:
    lam = EXP_RATE
    lam2 = lam * lam

    def reference(x):
        e = math.exp(lam * x)
        return np.array([e]), np.array([lam * e])

    return SecondOrderIVP(
        f=lambda x, y: lam2 * y,
        x0=0.0,
        y0=[1.0],
        y0prime=[lam],
        reference=reference,
        name="exp1000",
        norm="absolute",
    )


def _sho_first() -> FirstOrderIVP:
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return FirstOrderIVP(
        g=lambda x, y: np.array([y[1], -y[0]]),
        x0=0.0,
        y0=[0.0, 1000.0],
        jacobian=lambda x, y: rot,
        reference=lambda x: np.array([1000.0 * math.sin(x), 1000.0 * math.cos(x)]),
        name="sho",
    )


def _sho_second() -> SecondOrderIVP:
    def reference(x):
        s, c = math.sin(x), math.cos(x)
        return np.array([1000.0 * s, 1000.0 * c]), np.array([1000.0 * c, -1000.0 * s])

    return SecondOrderIVP(
        f=lambda x, y: -y,
        x0=0.0,
        y0=[0.0, 1000.0],
        y0prime=[1000.0, 0.0],
        reference=reference,
        name="sho",
    )


def _free_first() -> FirstOrderIVP:
    # constant slope: straight-line motion, f == 0 after transformation
    slope = np.array([2.5, -1.0])
    return FirstOrderIVP(
        g=lambda x, y: slope.copy(),
        x0=0.0,
        y0=[1.0, 3.0],
        jacobian=lambda x, y: np.zeros((2, 2)),
        reference=lambda x: np.array([1.0, 3.0]) + x * slope,
        name="free",
    )


def _free_second() -> SecondOrderIVP:
    y0 = np.array([1.0, 3.0])
    v0 = np.array([2.5, -1.0])
    return SecondOrderIVP(
        f=lambda x, y: np.zeros(2),
        x0=0.0,
        y0=y0,
        y0prime=v0,
        reference=lambda x: (y0 + x * v0, v0.copy()),
        name="free",
    )


_FIRST = {"exp1000": _exp1000_first, "sho": _sho_first, "free": _free_first}
_SECOND = {"exp1000": _exp1000_second, "sho": _sho_second, "free": _free_second}

PROBLEM_NAMES = tuple(_SECOND)

# default integration interval end per problem
DEFAULT_X_END = {"exp1000": 100.0, "sho": 200.0, "free": 10.0}


def _lookup(table, name):
    try:
        return table[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEM_NAMES)}") from None


def first_order_problem(name: str) -> FirstOrderIVP:
    """Built-in problem in its original ``y' = g(x, y)`` form."""
    return _lookup(_FIRST, name)


def second_order_problem(name: str, *, via_transform: bool = False) -> SecondOrderIVP:
    """Built-in problem in ``y'' = f(x, y)`` form.

    By default the closed-form acceleration is used; ``via_transform=True``
    builds it with :func:`transform` from the first-order form instead.
    """
    if via_transform:
        return transform(first_order_problem(name))
    return _lookup(_SECOND, name)
