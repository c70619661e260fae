import math

import numpy as np
import pytest
import sympy as sp

from rknq.diagnostics import observed_order, propagation_matrix, verify_recurrence
from rknq.problem import SecondOrderIVP
from rknq.stepper import StepState


def _linear(mu):
    return SecondOrderIVP(f=lambda x, y: mu * y, x0=0.0, y0=[1.0], y0prime=[0.5])


@pytest.mark.parametrize("name", ["rkn4", "rkn5", "rkn10"])
def test_alpha_tends_to_identity(name, sho, request):
    t = request.getfixturevalue(name)
    s = StepState.initial(sho)
    gaps = [np.max(np.abs(propagation_matrix(t, sho, s, h) - np.eye(2))) for h in (1e-1, 1e-2, 1e-3)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-5


def test_alpha_identity_without_force(rkn10, free):
    a = propagation_matrix(rkn10, free, StepState.initial(free), 2.0)
    np.testing.assert_allclose(a, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("mu, h", [(-1.0, 0.3), (2.0, 0.1), (-25.0, 0.05)])
def test_alpha_symbolic_rkn4(rkn4, mu, h):
    w, wp, hh, m = sp.symbols("w wp h mu")
    # one-dimensional RKN4 increment for f = mu * y
    k1 = m * w
    k2 = m * (w + hh / 2 * wp + hh**2 * sp.Rational(1, 8) * k1)
    F = wp + hh * (k1 / 6 + k2 / 3)
    expected = 1 + hh * sp.diff(F, w)
    assert sp.simplify(expected - (1 + hh**2 * m / 2 + hh**4 * m**2 / 24)) == 0
    value = float(expected.subs({hh: h, m: mu}))
    p = _linear(mu)
    got = propagation_matrix(rkn4, p, StepState.initial(p), h)
    assert got[0, 0] == pytest.approx(value, rel=1e-8)


@pytest.mark.parametrize("name", ["rkn4", "rkn5"])
def test_recurrence_exp1000(name, exp1000, request):
    recs = verify_recurrence(request.getfixturevalue(name), exp1000, 1.0, 20.0)
    delta = max(np.max(np.abs(r.delta_global)) for r in recs)
    resid = max(np.max(np.abs(r.residual)) for r in recs)
    assert delta > 0
    assert resid <= 1e-3 * delta
    np.testing.assert_array_equal(recs[0].delta_global, recs[0].eps_local)


def test_recurrence_sho(rkn4, sho):
    recs = verify_recurrence(rkn4, sho, 0.05, 10.0)
    delta = max(np.max(np.abs(r.delta_global)) for r in recs)
    resid = max(np.max(np.abs(r.residual)) for r in recs)
    assert resid <= 1e-3 * delta


def test_recurrence_free_is_exact(rkn5, free):
    for r in verify_recurrence(rkn5, free, 0.5, 10.0):
        assert np.max(np.abs(r.delta_global)) <= 1e-13
        assert np.max(np.abs(r.eps_local)) <= 1e-13


def test_recurrence_needs_reference(rkn4):
    with pytest.raises(ValueError):
        verify_recurrence(rkn4, _linear(-1.0), 0.1, 1.0)


@pytest.mark.parametrize("name, order", [("rkn4", 4), ("rkn5", 5)])
def test_observed_order(name, order, sho, request):
    hs = [0.2 / 2**k for k in range(5)]
    study = observed_order(request.getfixturevalue(name), sho, hs, 2 * math.pi)
    assert not any(study.floored)
    for o in study.orders:
        assert abs(o - order) <= 0.3


def test_observed_order_rkn10(rkn10, sho):
    hs = [2 * math.pi / n for n in (8, 16, 32)]
    study = observed_order(rkn10, sho, hs, 2 * math.pi)
    assert study.slopes
    for o in study.slopes:
        assert abs(o - 10) <= 1.0


def test_observed_order_flags_rounding_floor(rkn4, free):
    study = observed_order(rkn4, free, [0.5, 0.25, 0.125], 10.0)
    assert all(study.floored)
    assert study.slopes == []


def test_observed_order_arguments(rkn4, sho):
    with pytest.raises(ValueError):
        observed_order(rkn4, sho, [0.1], 1.0)
