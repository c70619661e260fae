"""Explicit Runge-Kutta-Nystrom coefficient sets.

A tableau holds ``(c, a, b, bhat)`` for the update::

    k_p    = f(x + c_p h, w + c_p h w' + h^2 sum_q a_pq k_q)
    w_new  = w + h w' + h^2 sum_p b_p k_p
    w'_new = w' + h sum_p bhat_p k_p

Three methods ship with the package: ``RKN4`` (3 stages), ``RKN5`` (4 stages)
and ``RKN10`` (17 stages).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "NystromTableau",
    "CheckResult",
    "ValidationReport",
    "UnknownMethodError",
    "BUILTIN_NAMES",
    "builtin",
    "validate",
    "from_runge_kutta",
]

CONSISTENCY_TOL = 1e-13

# stage counts the built-ins are required to have
_EXPECTED_STAGES = {"RKN4": 3, "RKN5": 4}


class UnknownMethodError(KeyError):
    """Raised by :func:`builtin` for a name outside ``BUILTIN_NAMES``."""


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NystromTableau:
    """Coefficients of one explicit Nystrom method.

    Arrays are stored read-only so a tableau can be shared freely.
    """

    name: str
    order: int
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    bhat: np.ndarray
    # per-row slices of ``a`` below the diagonal, cached for the stepper
    _rows: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen(self.c, 1))
        object.__setattr__(self, "a", _frozen(self.a, 2))
        object.__setattr__(self, "b", _frozen(self.b, 1))
        object.__setattr__(self, "bhat", _frozen(self.bhat, 1))
        if self.order < 1:
            raise ValueError("order must be a positive integer")
        m = self.c.shape[0]
        if m < 1:
            raise ValueError("a tableau needs at least one stage")
        if self.a.shape != (m, m) or self.b.shape != (m,) or self.bhat.shape != (m,):
            raise ValueError(
                f"inconsistent shapes: c {self.c.shape}, a {self.a.shape}, "
                f"b {self.b.shape}, bhat {self.bhat.shape}"
            )
        rows = tuple(np.ascontiguousarray(self.a[p, :p]) for p in range(m))
        object.__setattr__(self, "_rows", rows)

    @property
    def stages(self) -> int:
        return self.c.shape[0]

    def __repr__(self) -> str:
        return f"NystromTableau(name={self.name!r}, order={self.order}, stages={self.stages})"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    informational: bool = False


@dataclass(frozen=True)
class ValidationReport:
    tableau: str
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        """True when every non-informational check passed."""
        return all(ch.passed for ch in self.checks if not ch.informational)

    def __getitem__(self, name: str) -> CheckResult:
        for ch in self.checks:
            if ch.name == name:
                return ch
        raise KeyError(name)

    def __str__(self) -> str:
        lines = [f"{self.tableau}: {'ok' if self.ok else 'FAILED'}"]
        for ch in self.checks:
            tag = "info" if ch.informational else ("pass" if ch.passed else "FAIL")
            lines.append(f"  [{tag}] {ch.name}: residual {ch.residual:.3e}")
        return "\n".join(lines)


def validate(t: NystromTableau) -> ValidationReport:
    """Check the structural conditions of ``t``.

    Failures are reported in the returned record, never raised.
    """
    m = t.stages
    upper = np.triu(t.a)  # includes the diagonal: a_pq must vanish for p <= q
    explicit_res = float(np.max(np.abs(upper))) if m else 0.0
    shape_ok = t.a.shape == (m, m) and t.b.shape == (m,) and t.bhat.shape == (m,)
    bhat_res = abs(float(np.sum(t.bhat)) - 1.0)
    b_res = abs(float(np.sum(t.b)) - 0.5)
    checks = [
        CheckResult("shapes", shape_ok, 0.0 if shape_ok else 1.0),
        CheckResult("explicit", explicit_res == 0.0, explicit_res),
        CheckResult("sum_bhat_is_1", bhat_res <= CONSISTENCY_TOL, bhat_res),
        CheckResult("sum_b_is_half", b_res <= CONSISTENCY_TOL, b_res),
    ]
    expected = _EXPECTED_STAGES.get(t.name)
    if expected is not None:
        checks.append(CheckResult("stage_count", m == expected, float(abs(m - expected))))
    simp_res = float(np.max(np.abs(t.b - t.bhat * (1.0 - t.c))))
    checks.append(CheckResult("b_eq_bhat_1_minus_c", simp_res <= CONSISTENCY_TOL, simp_res, True))
    return ValidationReport(t.name, tuple(checks))


def from_runge_kutta(
    name: str,
    order: int,
    c: Sequence,
    a: Sequence[Sequence] | Mapping[int, Mapping[int, object]],
    b: Sequence,
) -> NystromTableau:
    """Build the Nystrom method equivalent to an explicit RK method.

    Applying the RK scheme ``(c, A, b)`` to the first-order system
    ``(y, y')' = (y', f(x, y))`` and eliminating the velocity stages gives a
    Nystrom method with coupling ``A @ A``, position weights ``b @ A`` and
    velocity weights ``b``. The order is that of the RK scheme. Arithmetic is
    carried out in exact rationals; entries may be strings, ints or Fractions.

    ``a`` may be a dense square nested sequence or a sparse mapping
    ``{row: {col: value}}``.
    """
    cs = [Fraction(v) for v in c]
    m = len(cs)
    A = [[Fraction(0)] * m for _ in range(m)]
    if isinstance(a, Mapping):
        for i, row in a.items():
            for j, v in row.items():
                A[i][j] = Fraction(v)
    else:
        for i, row in enumerate(a):
            for j, v in enumerate(row):
                A[i][j] = Fraction(v)
    bs = [Fraction(v) for v in b]
    A2 = [[sum((A[i][k] * A[k][j] for k in range(m)), Fraction(0)) for j in range(m)] for i in range(m)]
    bA = [sum((bs[k] * A[k][j] for k in range(m)), Fraction(0)) for j in range(m)]
    return NystromTableau(
        name=name,
        order=order,
        c=[float(v) for v in cs],
        a=[[float(v) for v in row] for row in A2],
        b=[float(v) for v in bA],
        bhat=[float(v) for v in bs],
    )


def _rational(name, order, c, a, b, bhat) -> NystromTableau:
    F = Fraction
    return NystromTableau(
        name=name,
        order=order,
        c=[float(F(v)) for v in c],
        a=[[float(F(v)) for v in row] for row in a],
        b=[float(F(v)) for v in b],
        bhat=[float(F(v)) for v in bhat],
    )


def _rkn4() -> NystromTableau:
    # Nystrom's three-stage fourth-order method (Hairer, Norsett & Wanner, II.14)
    return _rational(
        "RKN4",
        4,
        c=["0", "1/2", "1"],
        a=[
            ["0", "0", "0"],
            ["1/8", "0", "0"],
            ["0", "1/2", "0"],
        ],
        b=["1/6", "1/3", "0"],
        bhat=["1/6", "2/3", "1/6"],
    )


def _rkn5() -> NystromTableau:
    # Nystrom's four-stage fifth-order method (Hairer, Norsett & Wanner, II.14)
    return _rational(
        "RKN5",
        5,
        c=["0", "1/5", "2/3", "1"],
        a=[
            ["0", "0", "0", "0"],
            ["1/50", "0", "0", "0"],
            ["-1/27", "7/27", "0", "0"],
            ["3/10", "-2/35", "9/35", "0"],
        ],
        b=["14/336", "100/336", "54/336", "0"],
        bhat=["14/336", "125/336", "162/336", "35/336"],
    )


# Feagin's explicit 17-stage order-10 RK weights (the 10th-order member of his
# 10(8) pair), as published to 20 decimals. Sparse rows: {row: {col: a_ij}}.
_FEAGIN10_C = (
    "0",
    "0.1",
    "0.53935784080298178753",
    "0.8090367612044726813",
    "0.3090367612044726813",
    "0.98107419021979526825",
    "0.83333333333333333333",
    "0.35401736585680237633",
    "0.88252766196473234643",
    "0.64261575824032254816",
    "0.35738424175967745184",
    "0.11747233803526765357",
    "0.83333333333333333333",
    "0.3090367612044726813",
    "0.53935784080298178753",
    "0.1",
    "1",
)
_FEAGIN10_A = {
    1: {
        0: "0.1",
    },
    2: {
        0: "-0.91517656137529144052",
        1: "1.45453440217827322805",
    },
    3: {
        0: "0.20225919030111817032",
        2: "0.60677757090335451097",
    },
    4: {
        0: "0.18402471470864357515",
        2: "0.19796683122719236907",
        3: "-0.07295478473136326292",
    },
    5: {
        0: "0.08790073402066813373",
        3: "0.41045970252026064532",
        4: "0.4827137536788664892",
    },
    6: {
        0: "0.08597005049024603022",
        3: "0.33088596304072218395",
        4: "0.48966295730945019284",
        5: "-0.07318563750708507368",
    },
    7: {
        0: "0.12093044912533372066",
        4: "0.26012467575829562281",
        5: "0.03254026215490913302",
        6: "-0.05957802118173610016",
    },
    8: {
        0: "0.11085437958039148351",
        5: "-0.06057614882550055876",
        6: "0.3217637056017783901",
        7: "0.51048572560806303158",
    },
    9: {
        0: "0.11205441475287900483",
        5: "-0.14494277590286591567",
        6: "-0.33326971909625670659",
        7: "0.49926922955688006135",
        8: "0.50950460892968610424",
    },
    10: {
        0: "0.11397678396418598614",
        5: "-0.07688133642033569386",
        6: "0.23952736032439064911",
        7: "0.39777466236809463905",
        8: "0.01075589568736074556",
        9: "-0.32776912416401887415",
    },
    11: {
        0: "0.07983145282801960464",
        5: "-0.05203296868006030765",
        6: "-0.05769541461685488817",
        7: "0.19478191571210416498",
        8: "0.14538492318832506973",
        9: "-0.07829427103516707776",
        10: "-0.11450329936109891218",
    },
    12: {
        0: "0.98511561016485728012",
        3: "0.33088596304072218395",
        4: "0.48966295730945019284",
        5: "-1.37896486574843567582",
        6: "-0.86116419502763566667",
        7: "5.78428813637537220023",
        8: "3.2880776198510356689",
        9: "-2.38633905093136384013",
        10: "-3.25479342483643918655",
        11: "-2.16343541686422982354",
    },
    13: {
        0: "0.89508029577163289105",
        2: "0.19796683122719236907",
        3: "-0.07295478473136326292",
        5: "-0.85123623966200761974",
        6: "0.39832011231853330172",
        7: "3.63937263181035606029",
        8: "1.54822877039830322365",
        9: "-2.12221714704053716026",
        10: "-1.58350398545326172713",
        11: "-1.71561608285936264922",
        12: "-0.02440364057501274521",
    },
    14: {
        0: "-0.91517656137529144052",
        1: "1.45453440217827322805",
        4: "-0.77733364364496823354",
        6: "-0.09108956621551760696",
        12: "0.09108956621551760696",
        13: "0.77733364364496823354",
    },
    15: {
        0: "0.1",
        2: "-0.15717866579977116337",
        14: "0.15717866579977116337",
    },
    16: {
        0: "0.18178130070009528389",
        1: "0.675",
        2: "0.34275815984718983994",
        4: "0.25911121454832274451",
        5: "-0.35827896671795208905",
        6: "-1.04594895940883306095",
        7: "0.93032784541562698329",
        8: "1.77950959431708102446",
        9: "0.1",
        10: "-0.28254756953904408161",
        11: "-0.15932735011997254917",
        12: "-0.14551589464700151086",
        13: "-0.25911121454832274451",
        14: "-0.34275815984718983994",
        15: "-0.675",
    },
}
_FEAGIN10_B = (
    "0.03333333333333333333",
    "0.025",
    "0.03333333333333333333",
    "0",
    "0.05",
    "0",
    "0.04",
    "0",
    "0.18923747814892349016",
    "0.27742918851774317651",
    "0.27742918851774317651",
    "0.18923747814892349016",
    "-0.04",
    "-0.05",
    "-0.03333333333333333333",
    "-0.025",
    "0.03333333333333333333",
)


def _rkn10() -> NystromTableau:
    return from_runge_kutta("RKN10", 10, _FEAGIN10_C, _FEAGIN10_A, _FEAGIN10_B)


_FACTORIES = {"RKN4": _rkn4, "RKN5": _rkn5, "RKN10": _rkn10}
_CACHE: dict[str, NystromTableau] = {}

BUILTIN_NAMES = tuple(_FACTORIES)


def builtin(name: str) -> NystromTableau:
    """Return a built-in tableau by name (case-insensitive)."""
    key = name.upper()
    if key not in _FACTORIES:
        raise UnknownMethodError(f"unknown method {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    if key not in _CACHE:
        _CACHE[key] = _FACTORIES[key]()
    return _CACHE[key]
