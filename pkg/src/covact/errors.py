"""Exception types shared across the package."""


class CovactError(Exception):
    """Base class for all package errors."""


class InvalidInput(CovactError, ValueError):
    """Malformed or inconsistent input: bad dimensions, NaNs, out-of-range values."""


class NotPositiveDefinite(CovactError):
    """A matrix required to be Hermitian positive definite is not."""


class NotConverged(CovactError):
    """An iterative solver hit its iteration budget.

    Carries the best iterate found so far in ``z`` and its residual.
    """

    def __init__(self, message, z=None, residual=None):
        super().__init__(message)
        self.z = z
        self.residual = residual


class StepRejected(CovactError):
    """A rank-one update would lose positive definiteness; treated as corruption."""


class DomainError(CovactError, ValueError):
    """Argument lies outside a function's branch domain."""


class TooLarge(CovactError):
    """Exact enumeration refused: the instance exceeds the combinatorial budget."""


class NoAdversary(CovactError):
    """The witness has no sparse part, so no adversarial fading vector exists."""


class EmptyLevelSet(CovactError):
    """The requested level is below the objective minimum; the level set is empty."""


class SetupFailed(CovactError):
    """Experiment preconditions could not be established (e.g. codebook search)."""
