"""Exception types raised across the package."""


class AnharmError(Exception):
    """Base class for all package errors."""


class SpecError(AnharmError, ValueError):
    """An oscillator definition violates a structural constraint."""


class IllConditionedPolynomial(AnharmError, ArithmeticError):
    """Stationarity polynomial coefficients span too many decades for double precision."""


class ConsistencyError(AnharmError, ArithmeticError):
    """A computed quantity failed an identity that must hold at a stationary point."""


class DegenerateStationaryPoint(AnharmError, ArithmeticError):
    """The stationary point is a fold; derivatives with respect to coefficients do not exist."""


class NoAdmissibleState(AnharmError):
    """No stationary point survived classification and filtering."""

    def __init__(self, message="no admissible oscillation state"):
        super().__init__(message)


class BranchRejected(AnharmError):
    """Raised while deriving branch parameters; ``reason`` is the rejection tag."""

    def __init__(self, reason, message=None):
        super().__init__(message or reason)
        self.reason = reason


class ConfigError(AnharmError):
    """Invalid run configuration; ``key_path`` names the offending entry."""

    def __init__(self, key_path, message):
        super().__init__(f"{key_path} {message}" if key_path else message)
        self.key_path = key_path
