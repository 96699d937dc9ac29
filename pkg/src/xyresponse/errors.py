"""Exception hierarchy.

Two families matter to callers: :class:`InvalidParameters` (bad input, a
``ValueError``) and :class:`NumericalFailure` (a well-posed computation that
could not reach its tolerance). The CLI maps them to exit codes 2 and 3.
"""


class XYResponseError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameters(XYResponseError, ValueError):
    """A parameter point or configuration violates a documented invariant."""


class NumericalFailure(XYResponseError, ArithmeticError):
    """A numerical stage failed to reach its tolerance."""

    stage = "numerics"


class QuadratureFailure(NumericalFailure):
    stage = "quadrature"


class ConvergenceFailure(NumericalFailure):
    stage = "asymptotic-limit"


class PfaffianDegeneracy(NumericalFailure):
    stage = "pfaffian"


class PositivityViolation(NumericalFailure):
    stage = "density-matrix"


class DegenerateAngle(NumericalFailure):
    stage = "pointer-angle"


class OptimizerNotConverged(NumericalFailure):
    stage = "optimizer"


class BudgetExceeded(XYResponseError):
    """The exact-diagonalization problem does not fit the memory budget."""


# scaling_analysis
class NonUniformGrid(InvalidParameters):
    pass


class NoInteriorExtremum(NumericalFailure):
    stage = "extremum"


class DegenerateFit(NumericalFailure):
    stage = "fit"


class NonPositiveValue(InvalidParameters):
    pass


class DivisionByZeroSlope(NumericalFailure):
    stage = "critical-exponent"


class InsufficientOverlap(NumericalFailure):
    stage = "collapse"
