"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegeneratePairError(DomainError):
    """Two windings are equivalent (or energy-degenerate where a beat is required)."""


class CapacityError(DomainError):
    """Problem size exceeds what a brute-force routine is allowed to build."""


class IndeterminatePhaseError(DomainError):
    """A relative phase cannot be recovered because a bond carries no weight."""


class IntegratorAccuracyError(RuntimeError):
    """A propagated density matrix lost positivity beyond tolerance."""


class NonFiniteGradientError(RuntimeError):
    """The optimizer produced a NaN or infinite gradient."""
