"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnsupportedError(DomainError):
    """The operation is not defined for this parameter combination (e.g. surface weights for p < 1)."""


class NoStationaryPointError(DomainError):
    """The Legendre target is infeasible: beta <= exp(p * alpha)."""


class InvariantError(RuntimeError):
    """An internal numerical invariant failed; indicates a bug, not bad input."""
