"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class TorusPhaseError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(TorusPhaseError, ValueError):
    """Invalid physical or numerical input.

    ``field`` names the offending parameter so front ends can point at it.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ShapeDomainError(ValidationError):
    """Torus radii outside the ring-torus domain 0 < a < c."""


class ProtocolError(ValidationError):
    """Rotation protocol violates Omega(0) = 0 or its winding normalization."""


class NumericsError(TorusPhaseError, ArithmeticError):
    """A numerical kernel failed to meet its accuracy contract."""


class QuadratureError(NumericsError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative change {achieved:.3e})")
        self.achieved = achieved


class IntegrationError(NumericsError):
    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


class EigenError(NumericsError):
    pass
