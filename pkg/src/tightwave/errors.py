"""Exception hierarchy.

Each family maps onto one CLI exit code, see :mod:`tightwave.harness.run`.
"""


class TightwaveError(Exception):
    """Base class for all package errors."""


class DomainError(TightwaveError, ValueError):
    """An argument lies outside the declared domain of an operation."""


class NumericError(TightwaveError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


class WindowOverflowError(NumericError):
    """Mass leaked out of a grid window beyond the configured budget."""

    def __init__(self, message, clipped_mass=None, iteration=None):
        super().__init__(message)
        self.clipped_mass = clipped_mass
        self.iteration = iteration


class InvalidCurveError(NumericError):
    """A tail curve violates monotonicity, range or edge conditions."""


class ValidationFailure(TightwaveError):
    """A model input fails an assumption check (e.g. degenerate offspring law)."""


class DegenerateOffspringError(ValidationFailure, ValueError):
    """Offspring law with p_1 = 1 (or p_0 > 0)."""


class InfeasibleParametersError(ValidationFailure):
    """No Lyapunov parameter set satisfies the constraint system."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class ResourceError(TightwaveError, RuntimeError):
    """A simulation exceeded its population, step or size budget."""


class ConfigError(TightwaveError, ValueError):
    """Malformed or inconsistent run configuration."""
