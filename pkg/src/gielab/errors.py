"""Exception types shared across the package."""


class GielabError(Exception):
    """Base class for all package errors."""


class InvalidCM(GielabError):
    """Matrix is not a valid covariance matrix for the requested operation."""


class NotPure(GielabError):
    """Operation requires a pure-state covariance matrix."""


class InvalidDecomposition(GielabError):
    """Separable decomposition does not satisfy its positivity constraint."""


class DegenerateDistribution(GielabError):
    """Outcome distribution is singular; mutual information undefined."""


class NonConvergence(GielabError):
    """Raised only where an optimizer result cannot be reported at all.

    Optimizer entry points normally report non-convergence through a flag on
    the result object instead of raising.
    """
