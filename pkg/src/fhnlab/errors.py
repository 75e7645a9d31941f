"""Exception hierarchy shared across the package.

All numerical failure modes raise a subclass of :class:`FHNLabError` so that
drivers can distinguish configuration mistakes from runtime breakdowns.
"""


class FHNLabError(Exception):
    """Base class for all package errors."""


class RegimeViolation(FHNLabError, ValueError):
    """Parameters outside the oscillatory regime of the kinetics."""


class QuadratureFailure(FHNLabError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SingularityAtFold(FHNLabError):
    """Slow-flow integrand evaluated exactly at a fold point."""


class ShootingFailure(FHNLabError):
    """Layer heteroclinic not found within the iteration budget."""


class AiryDomainError(FHNLabError, ValueError):
    """Argument outside the supported half-plane of the dispersion kernel."""


class BranchJump(FHNLabError):
    """Consecutive spectral-curve samples are not continuous (grid too coarse)."""


class NewtonFailure(FHNLabError):
    """Damped Newton iteration exhausted its budget."""


class NewtonDivergence(NewtonFailure):
    """Newton iteration for a wave train diverged (line-search floor hit)."""


class JacobianSingular(FHNLabError):
    """Bordered Newton system singular beyond the translation kernel."""


class NoRelaxation(FHNLabError):
    """Time relaxation toward a wave train stalled above threshold."""


class StepFailure(FHNLabError):
    """Continuation step failed below the minimum step size."""


class SolvabilityFailure(FHNLabError):
    """Fredholm compatibility inner product vanished (degenerate wave train)."""


class TrackingAmbiguity(FHNLabError):
    """Two eigenvalues approached within the branch-matching radius."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates or []


class BlowUp(FHNLabError):
    """Simulated field exceeded the configured max-norm bound."""


class DomainMismatch(FHNLabError, ValueError):
    """Wave-train period does not embed in the simulation grid."""


class InsufficientData(FHNLabError, ValueError):
    """Not enough post-transient samples for a fit."""


class ConfigError(FHNLabError, ValueError):
    """Experiment configuration violates the schema."""


class ScenarioError(FHNLabError):
    """A scenario failed at runtime; wraps the underlying module error."""
