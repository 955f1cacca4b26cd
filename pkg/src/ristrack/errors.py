"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class OutOfFieldError(DomainError):
    """Target lies behind the surface (z <= 0)."""


class ShapeError(ValueError):
    pass


class DegeneratePatternError(DomainError):
    pass
