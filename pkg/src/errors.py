"""
Exception hierarchy shared by the dynamics, thermo, measures and analysis packages.
"""
from typing import Optional


class InverseMFError(Exception):
    """Base class for toolkit failures."""


class StructuralError(InverseMFError, ValueError):
    """Model file cannot be parsed or has inconsistent shapes."""


class InvalidModelError(InverseMFError):
    """A model that failed validate_model was passed downstream."""

    def __init__(self, message: str, failed_checks: Optional[list] = None):
        super().__init__(message)
        self.failed_checks = failed_checks or []


class HorizonTooShortError(InverseMFError, ValueError):
    """The sampled path is too short for the requested depth."""

    def __init__(self, message: str, required: int):
        super().__init__(f"{message} (required horizon >= {required})")
        self.required = required


class InadmissibleWordError(InverseMFError, ValueError):
    """Word violates alphabet bounds or admissibility along the path."""


class NotMixingWithinCapError(InverseMFError):
    """No positive admissibility product was found within the cap."""


class NoConnectorError(InverseMFError):
    """No admissible bridge of the requested length exists."""


class NumericalGuardError(InverseMFError):
    """Cylinder diameter fell below the depth guard."""


class BracketFailureError(InverseMFError):
    """Root bracket expansion passed the configured limit."""


class NormalizationBreaksAssumptionError(InverseMFError):
    """Shifting the potential to zero pressure breaks the mean-negativity condition."""


class NonConvergenceError(InverseMFError):
    """Dual power iteration did not reach the residual bound."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NoAtomFoundError(InverseMFError):
    """No positive-weight atom within the lookahead."""


class EmptySelectionError(InverseMFError):
    """No word matched the Birkhoff-ratio selection."""


class ScaleBelowFloorError(InverseMFError, ValueError):
    """A scale lies below the truncation-residual floor."""


class ResourceGuardError(InverseMFError):
    """Estimated cylinder count exceeds the memory guard."""

    def __init__(self, message: str, required: int, cap: int):
        super().__init__(f"{message}: estimated {required:.3e} cylinder accumulations exceed cap {cap:.3e}")
        self.required = required
        self.cap = cap
