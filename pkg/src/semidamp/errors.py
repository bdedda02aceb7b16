"""Exception types shared across the workbench."""


class SemidampError(Exception):
    """Base class for all workbench errors."""


class StepBlowup(SemidampError):
    """Flow integration left the overflow guard region."""


class ToleranceExceeded(SemidampError):
    """Energy drift along an orbit exceeded the requested tolerance."""


class EmptyShell(SemidampError):
    """No phase-space points found on the requested energy shell."""


class ResolutionError(SemidampError):
    """Grid spacing too coarse to resolve oscillation at the given h."""


class SymbolDecayError(SemidampError):
    """Symbol does not decay enough in xi for the quadrature window."""


class SingularSystem(SemidampError):
    """Shifted linear system could not be factorized or solved accurately."""


class PowerIterationStall(SemidampError):
    """Power iteration failed to converge within the iteration budget."""


class NoConvergence(SemidampError):
    """Limiting-absorption increments are not decreasing."""


class PreconditionViolated(SemidampError):
    """An operator precondition (positivity, hermiticity, ...) failed."""


class DiagonalizationFailed(SemidampError):
    """Eigendecomposition residual too large for propagation."""


class TailNotNegligible(SemidampError):
    """Time-integral truncated while the integrand is still significant."""


class TruncationError(SemidampError):
    """Channel truncation error bound exceeds the requested tolerance."""


class FrontReachedBoundary(SemidampError):
    """Transport front would leave the truncated channel before time t."""


class ConfigError(SemidampError):
    """Configuration file failed schema validation."""


class GateFailure(SemidampError):
    """A named numerical gate failed during a run."""


class DissipativeBoundViolation(GateFailure):
    """A solve violated the contraction bound ||(H-z)^-1|| <= 1/Im z."""
