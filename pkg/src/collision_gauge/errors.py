"""Exception types.

The CLI maps these onto exit codes: configuration and domain problems
exit with 2, numerical failures with 3, and I/O errors (plain OSError)
with 4.
"""


class CollisionGaugeError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CollisionGaugeError):
    """Missing, malformed, or inconsistent configuration input."""


class DomainError(CollisionGaugeError, ValueError):
    """An argument lies outside the physically meaningful domain."""


class UnsupportedConfigurationError(CollisionGaugeError):
    """A physically meaningful configuration this code does not model."""


class NumericsError(CollisionGaugeError):
    """A quadrature or solver failed to reach its accuracy target."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
