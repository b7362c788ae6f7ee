"""Hannay angles and Berry phases for loops on a rotating ring torus."""

from __future__ import annotations

__version__ = "0.1.0"

from .classical_phase import (  # noqa: E402
    HannayResult,
    RotationAxis,
    anholonomy_integral,
    hannay_angle_analytic,
    hannay_angle_numeric,
    knot_hannay_angle_halved,
)
from .dynamics_sim import RotationProtocol, ProtocolSchedule, SimResult, simulate  # noqa: E402
from .errors import (  # noqa: E402
    EigenError,
    IntegrationError,
    NumericsError,
    ProtocolError,
    QuadratureError,
    ShapeDomainError,
    TorusPhaseError,
    ValidationError,
)
from .geometry import LoopSpec, TorusShape  # noqa: E402
from .quantum_phase import (  # noqa: E402
    BerryResult,
    KnotQuantumProblem,
    QuantumConfig,
    berry_phase_analytic,
    berry_phase_numeric,
    hannay_from_berry,
    knot_spectrum,
)

__all__ = [
    "__version__",
    "TorusShape",
    "LoopSpec",
    "RotationAxis",
    "HannayResult",
    "anholonomy_integral",
    "hannay_angle_analytic",
    "hannay_angle_numeric",
    "knot_hannay_angle_halved",
    "RotationProtocol",
    "ProtocolSchedule",
    "SimResult",
    "simulate",
    "QuantumConfig",
    "KnotQuantumProblem",
    "BerryResult",
    "berry_phase_analytic",
    "berry_phase_numeric",
    "hannay_from_berry",
    "knot_spectrum",
    "TorusPhaseError",
    "ValidationError",
    "ShapeDomainError",
    "ProtocolError",
    "NumericsError",
    "QuadratureError",
    "IntegrationError",
    "EigenError",
]
