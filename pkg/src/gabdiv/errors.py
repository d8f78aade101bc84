"""Exception hierarchy shared by all gabdiv modules."""


class GabdivError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(GabdivError):
    """Two measures do not live on the same alphabet."""


class InvalidMeasure(GabdivError):
    """A density/weight vector violates the measure invariants."""


class UnsupportedSupport(GabdivError):
    """A zero atom meets an operation that needs strict positivity."""


class NonFiniteResult(GabdivError):
    """A computation produced nan (e.g. a 0 * inf product) or overflowed."""


class BadParams(GabdivError):
    """Constructor or hyperparameter constraints violated."""


class FactorizationViolated(GabdivError):
    """psi(xy) = g(psi(x)) + h(psi(y)) fails on the values encountered."""


class Infeasible(GabdivError):
    """No probability vector satisfies the linear constraints."""


class NotConverged(GabdivError):
    """An iterative solver ran out of iterations before reaching tolerance."""


class StepFailed(GabdivError):
    """A fixed-point step left the admissible region and damping ran out."""
