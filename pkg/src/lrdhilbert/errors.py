"""Exception types raised across the package."""


class LRDError(Exception):
    """Base class for all package errors."""


class DimensionError(LRDError, ValueError):
    """Array shapes do not agree with the grid."""


class DomainError(LRDError, ValueError):
    """An argument lies outside the domain where a formula is valid."""


class ModelError(LRDError, ValueError):
    """A model ingredient (kernel, symbol) violates its invariants."""


class ConfigError(LRDError, ValueError):
    """A run configuration is invalid.

    ``errors`` holds every validation message found, not just the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
