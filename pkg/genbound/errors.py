"""Exception hierarchy.

Infinite divergences are not errors: they travel as ``math.inf`` and the
bound layer reports them as vacuous.
"""


class GenboundError(Exception):
    """Base class for every error raised by genbound."""


class ConfigError(GenboundError):
    """Invalid scenario configuration or setting."""


class UnknownFamilyError(ConfigError):
    """A registry id (divergence, norm, loss, algorithm) does not exist."""


class EnumerationLimitError(GenboundError):
    """An exact enumeration would exceed a documented guard."""

    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: size {size} exceeds limit {limit}")


class NormalizationError(GenboundError):
    """A probability vector is negative or does not sum to one."""


class IncompleteKernelError(GenboundError):
    """A kernel has no row for a dataset tuple of positive mass."""


class UndefinedConditionalError(GenboundError):
    """Conditioning on a dataset tuple of zero mass."""


class IndexRangeError(GenboundError):
    """An index such as i in L̄_i is outside its range."""


class AbsoluteContinuityError(GenboundError):
    """A signed measure charges points outside the base support."""


class BoundarySubgradientError(GenboundError):
    """The subgradient diverges at a zero density ratio."""


class DivergentSeriesError(GenboundError):
    """The smoothed dual-norm series does not converge."""

    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(f"derivative series diverges: sigma*sqrt(d) = {ratio:g} >= 1")


class QuadratureError(GenboundError):
    """Quadrature could not reach the requested tolerance."""


class WindowViolationError(GenboundError):
    """SGD iterates left the window where derivative bounds are certified."""
