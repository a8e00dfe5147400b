"""Exception hierarchy shared by the library and the CLI."""


class SpinCavityError(Exception):
    """Base class for all library errors."""


class ValidationError(SpinCavityError, ValueError):
    """Bad input: parameters outside their physical domain, malformed config."""


class NumericalError(SpinCavityError, RuntimeError):
    """A numerical procedure failed to produce a trustworthy answer."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TrackingError(NumericalError):
    """Adiabatic level continuation lost the level; retry on a finer grid."""


class BracketingError(NumericalError):
    """No interior minimum of the pair gap inside the scanned window."""


class ReductionError(NumericalError):
    """A third level intrudes on the quasi-degenerate pair."""


class ProjectionMismatchError(ReductionError):
    """P0 P P0 is singular on the pair subspace."""


class DarkTransitionError(NumericalError):
    """Zero transverse coupling, the characteristic time is infinite."""


class StiffnessError(NumericalError):
    """Step size underflow; use the rate-equation mode for strong dephasing."""


class AccuracyError(NumericalError):
    """Requested tolerance could not be met within the step budget."""


class ScanEmptyError(NumericalError):
    """Every transition in the catalog is radiatively dark."""
