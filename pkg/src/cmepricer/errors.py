"""Exception types raised by the pricing engine."""


class CmePricerError(ValueError):
    """Base class for all errors raised by this package."""


class NonPsdInput(CmePricerError):
    """A matrix presented as positive semidefinite is numerically not."""


class InvalidTolerance(CmePricerError):
    """Factorization tolerance is negative."""


class DimensionMismatch(CmePricerError):
    """Array shapes are inconsistent with each other or with a kernel."""


class DegenerateSample(CmePricerError):
    """Sample data carries no usable information (e.g. all points equal)."""


class SingularSystem(CmePricerError):
    """A linear system that should be regular could not be solved."""


class InvalidParams(CmePricerError):
    """Model parameters outside their admissible ranges."""


class InvalidMaturity(CmePricerError):
    """Maturity must be strictly positive."""


class IndexOutOfRange(CmePricerError):
    """Grid index outside the experiment layout."""


class InvalidContract(CmePricerError):
    """Contract terms outside their admissible ranges."""


class InvalidInput(CmePricerError):
    """Generic invalid argument."""


class PriceOutOfBounds(CmePricerError):
    """Option price violates no-arbitrage bounds; no implied vol exists."""


class MissingReference(CmePricerError):
    """A reference implied volatility is required but not available."""


class NotApplicable(CmePricerError):
    """Requested computation is not valid for this configuration."""


class EmptyInput(CmePricerError):
    """An aggregation was requested over an empty collection."""


class InvalidCount(CmePricerError):
    """A grid size or count parameter is too small."""
