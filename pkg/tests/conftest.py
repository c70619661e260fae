import numpy as np
import pytest

from rknq.problem import SecondOrderIVP, second_order_problem
from rknq.tableau import builtin


class CountingF:
    """Wraps an acceleration and counts calls."""

    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x, y):
        self.calls += 1
        return self.f(x, y)


def counted(p: SecondOrderIVP) -> tuple[SecondOrderIVP, CountingF]:
    cf = CountingF(p.f)
    q = SecondOrderIVP(cf, p.x0, p.y0, p.y0prime, p.reference, p.name, p.norm)
    cf.calls = 0  # construction evaluates f once
    return q, cf


@pytest.fixture(scope="session")
def rkn4():
    return builtin("RKN4")


@pytest.fixture(scope="session")
def rkn5():
    return builtin("RKN5")


@pytest.fixture(scope="session")
def rkn10():
    return builtin("RKN10")


@pytest.fixture(scope="session")
def pair(rkn4, rkn5):
    return rkn4, rkn5


@pytest.fixture(scope="session")
def triple(rkn4, rkn5, rkn10):
    return rkn4, rkn5, rkn10


@pytest.fixture
def sho():
    return second_order_problem("sho")


@pytest.fixture
def exp1000():
    return second_order_problem("exp1000")


@pytest.fixture
def free():
    return second_order_problem("free")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
