"""Exception hierarchy shared by all solver modules."""
from __future__ import annotations


class PanveinError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(PanveinError, ValueError):
    """Non-finite or otherwise malformed input to a numerical kernel."""


class BracketError(PanveinError):
    """Root finder was handed an interval without a sign change."""


class NonConvergenceError(PanveinError):
    """Iterative solver exhausted its iteration budget.

    The last residual norm is kept so callers can decide whether to retry
    with continuation or a different method.
    """

    def __init__(self, message: str, residual_norm: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class IntegrationFailureError(PanveinError):
    """Non-finite state produced during an ODE/PDE march."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class DivergenceError(PanveinError):
    """Fixed-point iteration is growing instead of contracting.

    ``certificate`` carries the contraction certificate of the attempted
    scenario so the caller can see why the hypothesis failed.
    """

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SingularMatrixError(PanveinError):
    """A matrix that the method must invert is (numerically) singular."""


class ConditioningError(PanveinError):
    """Eigen-structure too close to defective for the block decomposition."""


class DegenerateQuadraticError(PanveinError):
    """Stability quadratic degenerated to a linear equation.

    The surviving root is attached so callers can still inspect it.
    """

    def __init__(self, message: str, root: complex | None = None):
        super().__init__(message)
        self.root = root


class ParameterRegimeError(PanveinError):
    """Parameters outside the regime in which the operation is defined."""


class StepSizeError(PanveinError):
    """Explicit time step violates the CFL stability bound."""


class DomainError(PanveinError, ValueError):
    """Spatial coordinate outside [0, L]."""


class ProfileValidityError(PanveinError, ValueError):
    """A secretion profile evaluated to a non-positive value."""


class ModeError(PanveinError):
    """Operation called outside its supported mode (e.g. non-constant sigma)."""


class ValidationError(PanveinError, ValueError):
    """Scenario configuration violates an invariant."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class StrictParseError(ValidationError):
    """Unknown key or unparsable line in a scenario config file."""
