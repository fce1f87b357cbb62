"""Exception hierarchy shared by all modules."""


class QBatteryError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class DomainError(QBatteryError, ValueError):
    """Argument outside the domain of a function."""


class DivergenceError(QBatteryError):
    """Divergent integral or non-finite ODE state."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StiffnessError(QBatteryError):
    """Adaptive integrator step size underflowed."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class EvaluationError(QBatteryError):
    """Objective returned a non-finite value."""


class UnsupportedError(QBatteryError):
    """Requested regime has no implementation (e.g. dissipation in a closed form)."""


class RegimeError(QBatteryError):
    """Closed form used outside its validity window."""


class SweepError(QBatteryError):
    """Every point of a sweep failed."""


class FitError(QBatteryError):
    """Degenerate power-law fit."""


class CutoffError(QBatteryError):
    """Fock truncation too small for the requested evolution."""

    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class IntegratorError(QBatteryError):
    """Integrator failed an internal consistency check (e.g. norm drift)."""
