"""Rotating-frame Newtonian dynamics of a bead on a loop of a revolving torus.

In the frame co-rotating with the torus the tangential equation of motion is

    s'' = t . (|W|^2 r - (W . r) W - W' x r)

(the Coriolis force is normal to the path and drops out). A run with the
rotation switched on is paired with a baseline run from the same initial
state with ``W = 0``; the difference of final arc positions is the
anholonomy shift.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from . import geometry as geo
from .classical_phase import RotationAxis, hannay_angle_analytic
from .errors import ProtocolError, ValidationError
from .geometry import LoopSpec, TorusShape
from .numerics import DEFAULT_QUADRATURE, OdeConfig, QuadratureConfig, Trajectory, integrate_periodic, solve_ode

__all__ = [
    "RotationProtocol",
    "ProtocolSchedule",
    "SimState",
    "SimResult",
    "ArcLengthMap",
    "arc_length_map",
    "euler_force",
    "simulate",
    "averaged_shift_prediction",
    "epsilon_of",
    "analytic_angle_for",
]

TWO_PI = geo.TWO_PI
PROFILES = ("sin2", "trapezoid")
ADIABATIC_WARN_EPSILON = 0.1


@dataclass(frozen=True)
class RotationProtocol:
    """Angular velocity ``W(t) = omega(t) * axis`` on ``[0, duration]``.

    ``sin2``: ``omega = peak sin^2(pi t / T)``, winding ``peak T / 2``.
    ``trapezoid``: linear ramps over ``ramp_fraction * T`` at both ends,
    winding ``peak T (1 - ramp_fraction)``.
    ``omega_start`` is an additive offset; anything but zero is rejected,
    because the loop-averaged shift needs ``W(0) = 0``.
    """

    axis: np.ndarray
    peak: float
    duration: float
    profile: str = "sin2"
    target_winding: float = TWO_PI
    ramp_fraction: float = 0.25
    omega_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axis", geo.unit_axis(self.axis))
        if self.profile not in PROFILES:
            raise ValidationError(f"protocol profile must be one of {PROFILES}", "protocol")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValidationError("protocol duration must be positive", "duration")
        if not (self.peak >= 0 and math.isfinite(self.peak)):
            raise ValidationError("peak angular speed must be non-negative", "omega-max")
        if not 0 < self.ramp_fraction <= 0.5:
            raise ValidationError("ramp_fraction must lie in (0, 0.5]", "ramp_fraction")
        if self.omega_start != 0.0:
            raise ProtocolError("rotation must start from rest: omega(0) = 0 is required", "omega-start-nonzero")
        achieved = self.winding()
        if abs(achieved - self.target_winding) > 1e-10 * max(1.0, abs(self.target_winding)):
            raise ProtocolError(
                f"protocol integrates to {achieved:.12g}, not the target winding {self.target_winding:.12g}",
                "winding",
            )

    @staticmethod
    def _shape_factor(profile: str, ramp_fraction: float) -> float:
        return 0.5 if profile == "sin2" else 1.0 - ramp_fraction

    @classmethod
    def for_winding(cls, axis, peak: float, winding: float = TWO_PI, profile: str = "sin2", ramp_fraction: float = 0.25):
        if not peak > 0:
            raise ValidationError("peak angular speed must be positive", "omega-max")
        if not winding > 0:
            raise ValidationError("winding must be positive", "winding")
        factor = cls._shape_factor(profile, ramp_fraction) if profile in PROFILES else 1.0
        return cls(axis, peak, winding / (peak * factor), profile, winding, ramp_fraction)

    @classmethod
    def still(cls, duration: float, axis="z") -> "RotationProtocol":
        return cls(axis, 0.0, duration, "sin2", 0.0)

    def winding(self) -> float:
        """``\\int_0^T omega dt`` in closed form."""
        return self.peak * self.duration * self._shape_factor(self.profile, self.ramp_fraction)

    def omega(self, t: float) -> float:
        T = self.duration
        if t <= 0.0 or t >= T or self.peak == 0.0:
            return 0.0
        if self.profile == "sin2":
            return self.peak * math.sin(math.pi * t / T) ** 2
        ramp = self.ramp_fraction * T
        if t < ramp:
            return self.peak * t / ramp
        if t > T - ramp:
            return self.peak * (T - t) / ramp
        return self.peak

    def omega_dot(self, t: float) -> float:
        T = self.duration
        if t < 0.0 or t > T or self.peak == 0.0:
            return 0.0
        if self.profile == "sin2":
            return self.peak * math.pi / T * math.sin(2.0 * math.pi * t / T)
        ramp = self.ramp_fraction * T
        if t < ramp:
            return self.peak / ramp
        if t > T - ramp:
            return -self.peak / ramp
        return 0.0

    def kinks(self) -> list[float]:
        if self.profile == "trapezoid":
            r = self.ramp_fraction * self.duration
            return [r, self.duration - r]
        return []


class ProtocolSchedule:
    """Protocols run back to back (e.g. n1 turns about x, then n2 about y)."""

    def __init__(self, protocols: Sequence[RotationProtocol]):
        if not protocols:
            raise ValidationError("empty protocol schedule", "protocol")
        self.protocols = list(protocols)
        self.starts = np.concatenate([[0.0], np.cumsum([p.duration for p in self.protocols])])

    @property
    def duration(self) -> float:
        return float(self.starts[-1])

    @property
    def peak(self) -> float:
        return max(p.peak for p in self.protocols)

    def _locate(self, t: float):
        k = int(np.searchsorted(self.starts, t, side="right")) - 1
        k = min(max(k, 0), len(self.protocols) - 1)
        return self.protocols[k], t - self.starts[k]

    def omega_vec(self, t: float) -> np.ndarray:
        p, tau = self._locate(t)
        return p.omega(tau) * p.axis

    def omega_dot_vec(self, t: float) -> np.ndarray:
        p, tau = self._locate(t)
        return p.omega_dot(tau) * p.axis

    def rotation_vector(self) -> np.ndarray:
        """Sum of ``winding / 2pi * axis``: the number of turns about each axis."""
        return sum(p.target_winding / TWO_PI * p.axis for p in self.protocols)


def _as_schedule(proto) -> ProtocolSchedule:
    if isinstance(proto, ProtocolSchedule):
        return proto
    if isinstance(proto, RotationProtocol):
        return ProtocolSchedule([proto])
    return ProtocolSchedule(list(proto))


@dataclass(frozen=True)
class SimState:
    s: float
    p: float
    t: float


@dataclass
class SimResult:
    final: SimState
    baseline_final: SimState
    shift: float
    angle: float
    adiabaticity: float
    length: float
    trajectory: Trajectory | None = field(default=None, repr=False)
    omegas: np.ndarray | None = field(default=None, repr=False)

    def trajectory_rows(self):
        """Rows ``(t, s, p, omega)`` of the rotated run."""
        if self.trajectory is None:
            return []
        tr = self.trajectory
        return [(float(t), float(y[0]), float(y[1]), float(w)) for t, y, w in zip(tr.t, tr.y, self.omegas)]


class ArcLengthMap:
    """Monotone map between curve parameter ``u`` and arc length ``s``.

    Toroidal and poloidal loops have constant speed, so the map is linear.
    For knots ``s(u)`` is tabulated at ``nodes`` points by spectral
    integration of the (smooth, periodic) speed, and ``u(s)`` is a cubic
    Hermite interpolant using the exact slopes ``1/|dr/du|``; both are
    extended periodically beyond one circuit.
    """

    def __init__(self, loop: LoopSpec, shape: TorusShape, nodes: int = 8192):
        self.loop, self.shape = loop, shape
        self.length = geo.arc_length(loop, shape)
        self.linear = loop.kind != "knot"
        if self.linear:
            return
        u = np.linspace(0.0, TWO_PI, nodes, endpoint=False)
        sp = geo.speed(loop, shape, u)
        coef = np.fft.fft(sp) / nodes
        k = np.fft.fftfreq(nodes, d=1.0 / nodes)
        mean = coef[0].real
        integ = np.zeros_like(coef)
        nz = k != 0
        integ[nz] = coef[nz] / (1j * k[nz])
        wiggle = np.fft.ifft(integ * nodes).real
        s_nodes = mean * u + wiggle - wiggle[0]
        self._u = np.append(u, TWO_PI)
        self._s = np.append(s_nodes, self.length)
        self._s_of_u = CubicHermiteSpline(self._u, self._s, np.append(sp, sp[0]))
        self._u_of_s = CubicHermiteSpline(self._s, self._u, 1.0 / np.append(sp, sp[0]))

    def u_of_s(self, s):
        L = self.length
        if self.linear:
            return np.asarray(s) * (TWO_PI / L)
        turns = np.floor(np.asarray(s) / L)
        return self._u_of_s(np.asarray(s) - turns * L) + TWO_PI * turns

    def s_of_u(self, u):
        if self.linear:
            return np.asarray(u) * (self.length / TWO_PI)
        turns = np.floor(np.asarray(u) / TWO_PI)
        return self._s_of_u(np.asarray(u) - turns * TWO_PI) + self.length * turns


@functools.lru_cache(maxsize=32)
def arc_length_map(loop: LoopSpec, shape: TorusShape) -> ArcLengthMap:
    return ArcLengthMap(loop, shape)


def epsilon_of(peak: float, length: float, p0: float) -> float:
    """Adiabaticity ``peak * L / (2 pi |p0|)``: loop revolution rate over circuit rate."""
    return peak * length / (TWO_PI * abs(p0))


def euler_force(loop: LoopSpec, shape: TorusShape, s: float, omega, omega_dot) -> float:
    """Tangential Euler plus centrifugal acceleration at arc position ``s``."""
    amap = arc_length_map(loop, shape)
    u = float(amap.u_of_s(s))
    r, dr = geo.curve(loop, shape, u)
    t = dr / np.linalg.norm(dr)
    W = np.asarray(omega, dtype=float)
    Wd = np.asarray(omega_dot, dtype=float)
    accel = np.dot(W, W) * r - np.dot(W, r) * W - np.cross(Wd, r)
    return float(np.dot(t, accel))


def _scalar_frame(loop: LoopSpec, shape: TorusShape):
    # math-only position/tangent for the inner time-stepping loop
    c, a = shape.c, shape.a
    o, sgn = loop.origin, loop.orientation
    if loop.kind == "toroidal":
        rho = c + a * math.cos(loop.theta0)
        z0 = a * math.sin(loop.theta0)

        def frame(u):
            w = o + sgn * u
            cw, sw = math.cos(w), math.sin(w)
            return (rho * cw, rho * sw, z0), (-sgn * sw, sgn * cw, 0.0)

    elif loop.kind == "poloidal":
        cp, sp = math.cos(loop.phi0), math.sin(loop.phi0)

        def frame(u):
            w = o + sgn * u
            ct, st = math.cos(w), math.sin(w)
            rho = c + a * ct
            return (rho * cp, rho * sp, a * st), (-sgn * st * cp, -sgn * st * sp, sgn * ct)

    else:
        p, q = loop.p, loop.q

        def frame(u):
            w = o + sgn * u
            cq, sq = math.cos(q * w), math.sin(q * w)
            cpw, spw = math.cos(p * w), math.sin(p * w)
            rho = c + a * cq
            dx = -a * q * sq * cpw - p * rho * spw
            dy = -a * q * sq * spw + p * rho * cpw
            dz = a * q * cq
            n = sgn / math.sqrt(dx * dx + dy * dy + dz * dz)
            return (rho * cpw, rho * spw, a * sq), (dx * n, dy * n, dz * n)

    return frame


def _make_rhs(loop: LoopSpec, shape: TorusShape, sched: ProtocolSchedule):
    amap = arc_length_map(loop, shape)
    frame = _scalar_frame(loop, shape)
    if amap.linear:
        k = TWO_PI / amap.length

        def u_of_s(s):
            return s * k

    else:
        u_of_s = amap.u_of_s

    def rhs(t, y):
        s, v = y
        W = sched.omega_vec(t)
        Wd = sched.omega_dot_vec(t)
        (x, yy, z), (tx, ty, tz) = frame(float(u_of_s(s)))
        w1, w2, w3 = W
        d1, d2, d3 = Wd
        ww = w1 * w1 + w2 * w2 + w3 * w3
        wr = w1 * x + w2 * yy + w3 * z
        a1 = ww * x - wr * w1 - (d2 * z - d3 * yy)
        a2 = ww * yy - wr * w2 - (d3 * x - d1 * z)
        a3 = ww * z - wr * w3 - (d1 * yy - d2 * x)
        return np.array([v, tx * a1 + ty * a2 + tz * a3])

    return rhs


def _free_rhs(t, y):
    return np.array([y[1], 0.0])


def simulate(
    loop: LoopSpec,
    shape: TorusShape,
    proto,
    p0: float,
    cfg: OdeConfig | None = None,
    s0: float = 0.0,
    steps_per_circuit: int = 64,
    keep_trajectory: bool = False,
) -> SimResult:
    """Integrate the rotating-frame dynamics and extract the anholonomy shift.

    ``proto`` is a :class:`RotationProtocol`, a :class:`ProtocolSchedule` or a
    sequence of protocols run one after another. Without ``cfg`` the step is
    ``circuit time / steps_per_circuit``. ``p0`` may be negative (reverse
    traversal) but not zero.
    """
    if not (math.isfinite(p0) and p0 != 0.0):
        raise ValidationError("initial speed p0 must be finite and nonzero", "p0")
    sched = _as_schedule(proto)
    amap = arc_length_map(loop, shape)
    L = amap.length
    eps = epsilon_of(sched.peak, L, p0)
    if eps > ADIABATIC_WARN_EPSILON:
        warnings.warn(f"adiabaticity {eps:.3g} exceeds {ADIABATIC_WARN_EPSILON}; loop averaging is unreliable", stacklevel=2)
    T = sched.duration
    if cfg is None:
        step = L / abs(p0) / steps_per_circuit
        n = math.ceil(T / step)
        cfg = OdeConfig(T / n, T, record_stride=max(1, n // 4000))
    elif abs(cfg.t_end - T) > 1e-12 * T:
        raise ValidationError(f"cfg.t_end={cfg.t_end} must equal the protocol duration {T}", "t_end")
    if cfg.n_steps < 1000 and sched.peak > 0:
        warnings.warn("fewer than 1e3 steps over the protocol; adiabatic averaging may be under-resolved", stacklevel=2)

    y0 = (s0, p0)
    rotated = solve_ode(_make_rhs(loop, shape, sched), y0, cfg)
    baseline = solve_ode(_free_rhs, y0, cfg)
    fin, base = rotated.final, baseline.final
    shift = float(fin[0] - base[0])
    omegas = None
    if keep_trajectory:
        omegas = np.array([np.linalg.norm(sched.omega_vec(t)) for t in rotated.t])
    return SimResult(
        final=SimState(float(fin[0]), float(fin[1]), T),
        baseline_final=SimState(float(base[0]), float(base[1]), T),
        shift=shift,
        angle=TWO_PI * shift / L,
        adiabaticity=eps,
        length=L,
        trajectory=rotated if keep_trajectory else None,
        omegas=omegas,
    )


def _loop_average(loop, shape, integrand_dr, weighting: str, cfg) -> float:
    # integrand_dr(r, dr) is the force projected on dr (i.e. F * |dr/du|);
    # force terms are at most quadratic in r, hence the floor
    floor = geo.roundoff_floor(loop, shape) * max(1.0, shape.c + shape.a)
    if weighting == "arc":
        L = geo.arc_length(loop, shape, cfg)

        def f(u):
            r, dr = geo.curve(loop, shape, u)
            return integrand_dr(r, dr)

        return integrate_periodic(f, TWO_PI, cfg, floor) / L
    if weighting == "parameter":

        def f(u):
            r, dr = geo.curve(loop, shape, u)
            return integrand_dr(r, dr) / np.linalg.norm(dr, axis=-1)

        return integrate_periodic(f, TWO_PI, cfg, floor) / TWO_PI
    raise ValidationError("weighting must be 'arc' or 'parameter'", "weighting")


def averaged_shift_prediction(
    loop: LoopSpec,
    shape: TorusShape,
    proto,
    weighting: str = "arc",
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Loop-averaged shift ``\\int_0^T dt' <(T - t') F(t', s)>_s``.

    The force splits as ``omega^2 g(s) + omega' h(s)`` per protocol segment.
    Both profiles are averaged over the loop by quadrature (``weighting="arc"``
    averages in arc length, ``"parameter"`` uniformly in ``u``); the time
    kernel of the ``omega'`` term reduces to ``\\int omega dt`` because every
    segment starts and ends at rest.
    """
    sched = _as_schedule(proto)
    T = sched.duration
    total = 0.0
    for prot, start in zip(sched.protocols, sched.starts[:-1]):
        if prot.peak == 0.0:
            continue
        w = prot.axis
        h_avg = _loop_average(loop, shape, lambda r, dr: -np.einsum("ij,ij->i", np.cross(w, r), dr), weighting, cfg)
        g_avg = _loop_average(
            loop, shape, lambda r, dr: np.einsum("ij,ij->i", r - np.outer(r @ w, w), dr), weighting, cfg
        )
        kernel_dot = prot.winding() - (T - start) * prot.omega(0.0)
        kernel_sq, _ = quad(
            lambda t: (T - start - t) * prot.omega(t) ** 2,
            0.0,
            prot.duration,
            points=prot.kinks() or None,
            limit=200,
            epsabs=1e-13,
        )
        total += h_avg * kernel_dot + g_avg * kernel_sq
    return total


def analytic_angle_for(loop: LoopSpec, shape: TorusShape, proto) -> float:
    """Closed-form Hannay angle for the net rotation of a protocol schedule."""
    sched = _as_schedule(proto)
    return hannay_angle_analytic(loop, shape, RotationAxis(windings=tuple(sched.rotation_vector())))
