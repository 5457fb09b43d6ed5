"""Exception hierarchy.

Domain/config problems (bad input) and numerical failures (the computation
could not deliver its contract) are kept apart so the CLI can map them to
distinct exit codes.
"""


class BCSError(Exception):
    """Base class for all package errors."""


class DomainError(BCSError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(DomainError):
    """Invalid sweep or CLI configuration."""


class NumericalError(BCSError, ArithmeticError):
    """A numerical routine failed to meet its contract."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ResolutionError(NumericalError):
    """The momentum grid is too coarse for the energy scale being resolved."""


class NoTransition(NumericalError):
    """K_T + lambda V has no negative eigenvalue at any accessible temperature."""


class CutoffError(NumericalError):
    """A mode or momentum cutoff did not reach its convergence threshold."""
