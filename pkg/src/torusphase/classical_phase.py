"""Hannay angles from the loop line integral of ``(w x r) . dr``.

The numeric route never uses Stokes' theorem: the anholonomy is the line
integral itself, and the angle follows from

    angle = -(4 pi^2 / L^2) * sum_i n_i * \\oint (e_i x r) . dr

for winding counts ``n_i`` about the coordinate axes (or ``turns`` about a
single unit axis). Closed forms for the three loop families are provided
alongside for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import ValidationError
from .geometry import LoopSpec, TorusShape
from .numerics import DEFAULT_QUADRATURE, QuadratureConfig, integrate_periodic

__all__ = [
    "RotationAxis",
    "HannayResult",
    "anholonomy_integral",
    "hannay_angle_analytic",
    "hannay_angle_numeric",
    "knot_hannay_angle_halved",
    "displacement_from_areas",
]

TWO_PI = geo.TWO_PI
_BASIS = np.eye(3)


@dataclass(frozen=True)
class RotationAxis:
    """How the torus revolves during one adiabatic cycle.

    Either ``turns`` full revolutions about the unit vector ``axis``, or, when
    ``windings`` is set, ``n1, n2, n3`` revolutions about x, y and z applied in
    sequence. ``vector`` is the winding-weighted axis that the Hannay angle
    depends on linearly.
    """

    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    windings: tuple | None = None
    turns: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "axis", geo.require_unit(np.asarray(self.axis, dtype=float)))
        if self.windings is not None:
            w = tuple(self.windings)
            if len(w) == 2:
                w = w + (0,)
            if len(w) != 3 or not all(math.isfinite(x) for x in w):
                raise ValidationError("windings must be (n1, n2) or (n1, n2, n3)", "windings")
            object.__setattr__(self, "windings", w)

    @classmethod
    def about(cls, axis="z", turns: float = 1.0) -> "RotationAxis":
        return cls(axis=geo.unit_axis(axis), turns=turns)

    @classmethod
    def from_windings(cls, n1=0, n2=0, n3=0) -> "RotationAxis":
        return cls(windings=(n1, n2, n3))

    @property
    def vector(self) -> np.ndarray:
        if self.windings is not None:
            return np.asarray(self.windings, dtype=float)
        return self.turns * self.axis


@dataclass
class HannayResult:
    length: float
    areas: np.ndarray
    anholonomy_integral: float
    displacement: float
    angle: float
    rotation: np.ndarray

    def as_dict(self) -> dict:
        return {
            "length": self.length,
            "areas": [float(x) for x in self.areas],
            "anholonomy": self.anholonomy_integral,
            "displacement": self.displacement,
            "angle": self.angle,
        }


def anholonomy_integral(
    loop: LoopSpec, shape: TorusShape, axis, cfg: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """``\\oint (axis x r) . dr`` per unit angular speed."""
    w = geo.require_unit(axis)

    def integrand(u):
        r, dr = geo.curve(loop, shape, u)
        return np.einsum("ij,ij->i", np.cross(w, r), dr)

    return integrate_periodic(integrand, TWO_PI, cfg, geo.roundoff_floor(loop, shape))


def displacement_from_areas(areas, axis, length: float) -> float:
    """Arc-length shift ``-4 pi (A . w) / L`` after one revolution about ``axis``."""
    if not length > 0:
        raise ValidationError("loop length must be positive", "length")
    w = geo.require_unit(axis)
    return -4.0 * math.pi * float(np.dot(areas, w)) / length


def _knot_prefactor_length(shape: TorusShape, loop: LoopSpec, approx_length: bool, cfg) -> float:
    if approx_length:
        return geo.knot_length_approx(shape, loop.p, loop.q)
    return geo.arc_length(loop, shape, cfg)


def hannay_angle_analytic(
    loop: LoopSpec,
    shape: TorusShape,
    rot: RotationAxis,
    approx_length: bool = False,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Closed-form Hannay angle for each loop family.

    toroidal: ``-8 pi^2 A n3 / L^2`` with ``A = pi R^2``, ``L = 2 pi R`` (always ``-2 pi n3``);
    poloidal: ``-(8 pi^2 Abar / L^2)(n1 sin phi0 - n2 cos phi0)`` with ``Abar = pi a^2``;
    knot:     ``-(4 pi^2 / L^2) p (2c^2 + a^2) pi n3``.

    The knot form only covers rotation about z; for windings about x or y use
    :func:`hannay_angle_numeric`. ``approx_length`` swaps the quadrature knot
    length for :func:`geometry.knot_length_approx`.
    """
    n1, n2, n3 = rot.vector
    c, a = shape.c, shape.a
    if loop.kind == "toroidal":
        radius = c + a * math.cos(loop.theta0)
        area, length = math.pi * radius**2, TWO_PI * radius
        angle = -8.0 * math.pi**2 * area * n3 / length**2
    elif loop.kind == "poloidal":
        area, length = math.pi * a**2, TWO_PI * a
        angle = -8.0 * math.pi**2 * area / length**2 * (n1 * math.sin(loop.phi0) - n2 * math.cos(loop.phi0))
    else:
        length = _knot_prefactor_length(shape, loop, approx_length, cfg)
        angle = -4.0 * math.pi**2 / length**2 * loop.p * (2 * c * c + a * a) * math.pi * n3
    return loop.orientation * angle


def knot_hannay_angle_halved(
    shape: TorusShape, p: int, q: int, approx_length: bool = False, cfg: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Knot Hannay angle with prefactor ``-2 pi^2 / L^2``: ``-(2 pi^2 / L^2) p (2c^2 + a^2) pi``.

    Exactly half of :func:`hannay_angle_analytic` for a knot. Its thin-torus
    limit is ``-pi/p``, the magnitude reached by the semiclassical Berry slope
    of :func:`quantum_phase.berry_phase_analytic`, which is why the
    Berry-Hannay comparison for knots is made against this form.
    """
    loop = LoopSpec.knot(p, q)
    length = _knot_prefactor_length(shape, loop, approx_length, cfg)
    return -2.0 * math.pi**2 / length**2 * p * (2 * shape.c**2 + shape.a**2) * math.pi


def hannay_angle_numeric(
    loop: LoopSpec, shape: TorusShape, rot: RotationAxis, cfg: QuadratureConfig = DEFAULT_QUADRATURE
) -> HannayResult:
    length = geo.arc_length(loop, shape, cfg)
    areas = geo.projected_areas(loop, shape, cfg)
    weights = rot.vector
    total = 0.0
    for n_i, e_i in zip(weights, _BASIS):
        if n_i:
            total += n_i * anholonomy_integral(loop, shape, e_i, cfg)
    displacement = -TWO_PI * total / length
    angle = TWO_PI * displacement / length
    return HannayResult(length, areas, total, displacement, angle, weights)
