"""Exact Schrodinger solutions exp(iS/hbar) from harmonic Hamilton-Jacobi actions.

Pick a harmonic action S, define the potential that makes S a Hamilton-Jacobi
solution, and check numerically that exp(iS/hbar) then solves the
Schrodinger equation exactly.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BoundaryLeak,
    ConfigParse,
    DimensionMismatch,
    EmptyInterior,
    GridTooSmall,
    HJExactError,
    InconsistentGrids,
    JobFailure,
    NonFinite,
    QuadratureTooCoarse,
    SingularPoint,
)
from .model import (  # noqa: F401
    AnalyticPoly2D,
    Composite,
    ConstantForce1D,
    Free1D,
    GeneralLinear1D,
    GrowingForce1D,
    LogCentral2D,
    PhysConsts,
    PolynomialAction1D,
    RepulsiveOscillator2D,
    eval_action,
)
from .timecoef import TimeCoefficient  # noqa: F401
