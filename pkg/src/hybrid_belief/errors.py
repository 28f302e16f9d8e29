"""Exception types shared across the package.

Every error raised by public operations derives from HybridBeliefError so
callers can catch the whole family at an API boundary (the CLI maps them to
exit codes).
"""


class HybridBeliefError(Exception):
    """Base class for all errors raised by this package."""


class DegeneratePoint(HybridBeliefError):
    """A geometric query collapsed to a point (zero range)."""


class NonConvergence(HybridBeliefError):
    """Gauss-Newton kept making significant progress past the iteration cap."""


class SingularHessian(HybridBeliefError):
    """A normal-equation or covariance Cholesky factorization failed."""


class InvalidClass(HybridBeliefError):
    """Class label outside [1, n_classes]."""


class BoundaryObservation(HybridBeliefError):
    """Simplex observation touches the boundary where the density is undefined."""


class TensorTooLarge(HybridBeliefError):
    """Dependent prior table would exceed the size guard."""


class DuplicateHypothesis(HybridBeliefError):
    """The same class assignment appears twice in a subset."""


class UnknownObject(HybridBeliefError):
    """Object id outside [0, n_objects)."""


class DuplicateObservation(HybridBeliefError):
    """Two observations of the same object in one batch."""


class WrongPriorKind(HybridBeliefError):
    """Operation requires an independent (factorized) class prior."""


class NotRetained(HybridBeliefError):
    """Class assignment is not in the retained set."""


class AlreadyRetained(HybridBeliefError):
    """Class assignment is already in the retained set."""


class CapacityExceeded(HybridBeliefError):
    """Retained set would exceed its capacity."""


class TooManyHypotheses(HybridBeliefError):
    """Brute-force enumeration would exceed the hypothesis-count guard."""


class InfeasiblePlacement(HybridBeliefError):
    """Scenario generation could not place objects under the constraints."""
