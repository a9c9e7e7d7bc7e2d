"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ComputationError(RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""
