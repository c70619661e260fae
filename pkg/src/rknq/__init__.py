"""Runge-Kutta-Nystrom integration with stepwise global error control."""

from .controller import (
    IntegrationError,
    RejectionStormError,
    StepsizeUnderflowError,
    ToleranceSpec,
    Trajectory,
    integrate_fixed,
    integrate_local,
    scaled_norm,
)
from .problem import (
    EvaluationError,
    FirstOrderIVP,
    SecondOrderIVP,
    fd_jacobian,
    first_order_problem,
    second_order_problem,
    transform,
)
from .quench import QuenchedTrajectory, ToleranceInfeasibleError, integrate_quenched, summarize
from .stepper import StepState, step
from .tableau import NystromTableau, builtin, validate

__version__ = "0.1.0"


def rkn45q10():
    """The (RKN4, RKN5, RKN10) triple."""
    return builtin("RKN4"), builtin("RKN5"), builtin("RKN10")
