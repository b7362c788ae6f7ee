"""Ring-torus embedding and the three loop families drawn on it.

Every loop is a closed curve ``r(u)`` with ``u`` in ``[0, 2*pi)``:

* toroidal: ``theta = theta0`` fixed, ``phi = u``
* poloidal: ``phi = phi0`` fixed, ``theta = u``
* (p, q) knot: ``phi = p*u``, ``theta = q*u``

on the surface ``((c + a cos theta) cos phi, (c + a cos theta) sin phi, a sin theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeDomainError, ValidationError
from .numerics import DEFAULT_QUADRATURE, QuadratureConfig, integrate_periodic

TWO_PI = 2.0 * math.pi

LOOP_KINDS = ("toroidal", "poloidal", "knot")
ROUNDOFF_REL = 1e-13

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


def unit_axis(axis) -> np.ndarray:
    """Return a unit 3-vector from ``'x'|'y'|'z'`` or any nonzero 3-vector."""
    if isinstance(axis, str):
        try:
            return _AXES[axis.lower()].copy()
        except KeyError:
            raise ValidationError(f"unknown axis {axis!r}", "axis") from None
    v = np.asarray(axis, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValidationError("axis must be a finite 3-vector", "axis")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValidationError("axis must be nonzero", "axis")
    return v / norm


def require_unit(axis: np.ndarray, name: str = "axis") -> np.ndarray:
    v = np.asarray(axis, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValidationError(f"{name} must be a unit 3-vector", name)
    return v


@dataclass(frozen=True)
class TorusShape:
    c: float
    a: float

    def __post_init__(self):
        c, a = float(self.c), float(self.a)
        if not (math.isfinite(c) and math.isfinite(a)) or c <= 0 or a <= 0:
            raise ShapeDomainError("torus radii must be positive and finite", "a" if c > 0 else "c")
        if a >= c:
            raise ShapeDomainError(f"ring torus needs a < c (got c={c}, a={a})", "a")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)

    @property
    def sigma(self) -> float:
        return self.c / self.a


@dataclass(frozen=True)
class LoopSpec:
    """Which closed curve on the torus.

    ``origin`` shifts the parameter origin and ``orientation=-1`` traverses the
    curve backwards; both default to the plain parameterization.
    """

    kind: str
    theta0: float = 0.0
    phi0: float = 0.0
    p: int = 1
    q: int = 1
    origin: float = 0.0
    orientation: int = 1

    def __post_init__(self):
        if self.kind not in LOOP_KINDS:
            raise ValidationError(f"loop kind must be one of {LOOP_KINDS}", "loop")
        for name in ("theta0", "phi0", "origin"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValidationError(f"{name} must be finite", name)
            object.__setattr__(self, name, val % TWO_PI)
        if self.orientation not in (1, -1):
            raise ValidationError("orientation must be +1 or -1", "orientation")
        if self.kind == "knot":
            p, q = self.p, self.q
            if int(p) != p or int(q) != q or p < 1 or q < 1:
                raise ValidationError("knot winding numbers must be positive integers", "p" if p < 1 else "q")
            if math.gcd(int(p), int(q)) != 1:
                raise ValidationError(f"gcd(p, q) must be 1 (got p={p}, q={q})", "q")
            object.__setattr__(self, "p", int(p))
            object.__setattr__(self, "q", int(q))

    @classmethod
    def toroidal(cls, theta0: float = 0.0, **kw) -> "LoopSpec":
        return cls("toroidal", theta0=theta0, **kw)

    @classmethod
    def poloidal(cls, phi0: float = 0.0, **kw) -> "LoopSpec":
        return cls("poloidal", phi0=phi0, **kw)

    @classmethod
    def knot(cls, p: int, q: int, **kw) -> "LoopSpec":
        return cls("knot", p=p, q=q, **kw)

    @property
    def omega(self) -> float:
        """Poloidal-to-toroidal winding ratio q/p of a knot."""
        return self.q / self.p

    def reversed(self) -> "LoopSpec":
        return LoopSpec(self.kind, self.theta0, self.phi0, self.p, self.q, self.origin, -self.orientation)

    def shifted(self, u0: float) -> "LoopSpec":
        return LoopSpec(self.kind, self.theta0, self.phi0, self.p, self.q, self.origin + u0, self.orientation)


@dataclass(frozen=True)
class CurvePoint:
    u: float
    position: np.ndarray = field(repr=False)
    tangent: np.ndarray = field(repr=False)
    speed: float = 0.0


def _raw_curve(loop: LoopSpec, shape: TorusShape, w):
    c, a = shape.c, shape.a
    w = np.asarray(w, dtype=float)
    if loop.kind == "toroidal":
        rho = c + a * math.cos(loop.theta0)
        cw, sw = np.cos(w), np.sin(w)
        z = np.full_like(w, a * math.sin(loop.theta0))
        r = np.stack([rho * cw, rho * sw, z], axis=-1)
        dr = np.stack([-rho * sw, rho * cw, np.zeros_like(w)], axis=-1)
    elif loop.kind == "poloidal":
        cp, sp = math.cos(loop.phi0), math.sin(loop.phi0)
        ct, st = np.cos(w), np.sin(w)
        rho = c + a * ct
        r = np.stack([rho * cp, rho * sp, a * st], axis=-1)
        dr = np.stack([-a * st * cp, -a * st * sp, a * ct], axis=-1)
    else:
        p, q = loop.p, loop.q
        cq, sq = np.cos(q * w), np.sin(q * w)
        cpw, spw = np.cos(p * w), np.sin(p * w)
        rho = c + a * cq
        r = np.stack([rho * cpw, rho * spw, a * sq], axis=-1)
        dr = np.stack(
            [-a * q * sq * cpw - p * rho * spw, -a * q * sq * spw + p * rho * cpw, a * q * cq],
            axis=-1,
        )
    return r, dr


def curve(loop: LoopSpec, shape: TorusShape, u):
    """Position and parameter derivative ``dr/du``; ``u`` may be an array."""
    w = np.mod(loop.origin + loop.orientation * np.asarray(u, dtype=float), TWO_PI)
    r, dr = _raw_curve(loop, shape, w)
    if loop.orientation < 0:
        dr = -dr
    return r, dr


def position(loop: LoopSpec, shape: TorusShape, u) -> np.ndarray:
    return curve(loop, shape, u)[0]


def speed(loop: LoopSpec, shape: TorusShape, u):
    """``|dr/du|``."""
    return np.linalg.norm(curve(loop, shape, u)[1], axis=-1)


def unit_tangent(loop: LoopSpec, shape: TorusShape, u) -> np.ndarray:
    _, dr = curve(loop, shape, u)
    return dr / np.linalg.norm(dr, axis=-1, keepdims=True)


def curve_point(loop: LoopSpec, shape: TorusShape, u: float) -> CurvePoint:
    r, dr = curve(loop, shape, u)
    sp = float(np.linalg.norm(dr))
    return CurvePoint(float(np.mod(u, TWO_PI)), r, dr / sp, sp)


def surface_residual(shape: TorusShape, points: np.ndarray) -> np.ndarray:
    """``(sqrt(x^2+y^2) - c)^2 + z^2 - a^2``; zero on the torus."""
    pts = np.asarray(points, dtype=float)
    rho = np.hypot(pts[..., 0], pts[..., 1])
    return (rho - shape.c) ** 2 + pts[..., 2] ** 2 - shape.a**2


def magnitude_bound(loop: LoopSpec, shape: TorusShape) -> float:
    """Upper bound on ``max|r| * L``; the size of a loop line integral with unit factors."""
    c, a = shape.c, shape.a
    if loop.kind == "toroidal":
        length = TWO_PI * (c + a)
    elif loop.kind == "poloidal":
        length = TWO_PI * a
    else:
        length = TWO_PI * (loop.p * (c + a) + loop.q * a)
    return (c + a) * length


def roundoff_floor(loop: LoopSpec, shape: TorusShape) -> float:
    """Absolute quadrature allowance for line integrals that vanish identically."""
    return ROUNDOFF_REL * magnitude_bound(loop, shape)


def arc_length(loop: LoopSpec, shape: TorusShape, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    if loop.kind == "toroidal":
        return TWO_PI * (shape.c + shape.a * math.cos(loop.theta0))
    if loop.kind == "poloidal":
        return TWO_PI * shape.a
    return integrate_periodic(lambda u: speed(loop, shape, u), TWO_PI, cfg)


def knot_length_approx(shape: TorusShape, p: int, q: int) -> float:
    """Knot length from the mean of the extreme values of the speed integrand."""
    n = shape.sigma
    return math.pi * shape.a * (math.sqrt(q * q + p * p * (n + 1) ** 2) + math.sqrt(q * q + p * p * (n - 1) ** 2))


def projected_areas(loop: LoopSpec, shape: TorusShape, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Signed projected-area vector ``(1/2) \\oint r x dr`` onto the yz, zx, xy planes."""

    def integrand(u):
        r, dr = curve(loop, shape, u)
        return 0.5 * np.cross(r, dr).T

    return np.asarray(integrate_periodic(integrand, TWO_PI, cfg, roundoff_floor(loop, shape)))


def metric_factor(shape: TorusShape, p: int, q: int, phi):
    """``f(phi) = a^2 w^2 + (c + a cos(w phi))^2`` with ``w = q/p``.

    ``phi`` is the toroidal angle of the knot (period ``2*pi*p``);
    ``f = (ds/dphi)^2``.
    """
    w = q / p
    return shape.a**2 * w**2 + (shape.c + shape.a * np.cos(w * np.asarray(phi, dtype=float))) ** 2


def metric_factor_derivatives(shape: TorusShape, p: int, q: int, phi):
    """Closed-form ``(f, f', f'')`` with respect to the toroidal angle."""
    w = q / p
    c, a = shape.c, shape.a
    x = w * np.asarray(phi, dtype=float)
    f = a * a * w * w + (c + a * np.cos(x)) ** 2
    df = -2.0 * a * w * (c + a * np.cos(x)) * np.sin(x)
    d2f = -2.0 * a * w * w * (c * np.cos(x) + a * np.cos(2.0 * x))
    return f, df, d2f
