"""Exception types shared across the package."""

from __future__ import annotations


class KerrlepError(Exception):
    """Base class for all package-specific errors."""


class InvalidSpaceError(KerrlepError, ValueError):
    """Truncated Fock space is too small to be meaningful (dim < 2)."""


class TruncationError(KerrlepError, ValueError):
    """The requested construction does not fit in the truncated space.

    Carries ``required_dim``, the smallest dimension that would satisfy the
    tail-weight bound, when that number is known.
    """

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


class InvalidStateError(KerrlepError, ValueError):
    """A matrix violates density-matrix invariants beyond tolerance."""


class NumericFailureError(KerrlepError, RuntimeError):
    """A dense eigensolver or linear solve did not converge."""


class NoExceptionalPointError(KerrlepError, ValueError):
    """No eigenvalue coalescence exists for these parameters (kappa = 0)."""


class UndefinedPhaseError(KerrlepError, ValueError):
    """Phase difference requested for a matrix with vanishing coherences."""


class ProjectionError(KerrlepError, ValueError):
    """Cat-subspace projection discarded too much weight to be trusted."""


class StiffnessError(KerrlepError, RuntimeError):
    """Adaptive step size underflowed; the problem is too stiff as posed."""


class IntegrationFailureError(KerrlepError, RuntimeError):
    """An integration invariant (trace, positivity) drifted beyond bounds."""


class ConvergenceError(KerrlepError, RuntimeError):
    """Steady-state search did not reach the residual target in time."""


class RegimeError(KerrlepError, ValueError):
    """Parameters are outside the validated weak-dissipation regime."""


class ConfigError(KerrlepError, ValueError):
    """One or more run-configuration fields are invalid.

    ``violations`` lists every problem found, not only the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
