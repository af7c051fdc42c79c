"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class DegenerateObservableError(DomainError):
    """The effective measurement axis has (numerically) zero length.

    Happens when the axis is parallel to the momentum of an ultra
    relativistic particle: the transverse part is contracted away and no
    direction survives to normalize.
    """


class UndersampledTestError(RuntimeError):
    """Too few test rounds landed on some basis pair to run the Bell test."""
