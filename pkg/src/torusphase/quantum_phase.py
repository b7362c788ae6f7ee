"""Semiclassical Berry phases and the knot's Mathieu-type spectrum.

Berry phases use rotor eigenfunctions ``exp(2 pi i n s / L) / sqrt(L)`` whose
arc coordinate is dragged by the revolving torus at the rate

    ds/dX = (L / 2 pi) * kappa(u),   kappa = (w x t) . r_hat,

so that over one revolution ``gamma_n = -2 pi n <kappa>_s``. The closed forms
kept in :func:`berry_phase_analytic` are the per-family thin-torus results;
for poloidal loops and knots they differ from the quadrature, and the
difference is reported rather than hidden.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .classical_phase import RotationAxis, hannay_angle_analytic, knot_hannay_angle_halved
from .errors import ValidationError
from .geometry import LoopSpec, TorusShape
from .numerics import (
    DEFAULT_QUADRATURE,
    EigenProblem,
    QuadratureConfig,
    generalized_eigs,
    integrate_periodic,
    periodic_second_difference,
)

__all__ = [
    "QuantumConfig",
    "KnotQuantumProblem",
    "SpectrumResult",
    "BerryResult",
    "coupling_factor",
    "berry_phase_analytic",
    "berry_phase_numeric",
    "quantum_potential",
    "knot_potential",
    "knot_eigenproblem",
    "knot_spectrum",
    "knot_energy_thin",
    "hannay_from_berry",
]

TWO_PI = geo.TWO_PI
DEGENERACY_FLAG = 1e-4
THIN_TORUS_WARN_SIGMA = 10.0


@dataclass(frozen=True)
class QuantumConfig:
    hbar: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValidationError("hbar must be positive", "hbar")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("quantum number n must be a positive integer", "n")


def _as_rotation(rot) -> RotationAxis:
    if isinstance(rot, RotationAxis):
        return rot
    return RotationAxis.about(rot)


def coupling_factor(loop: LoopSpec, shape: TorusShape, u, axis) -> np.ndarray:
    """``(axis x t) . r_hat`` at parameter ``u``.

    Toroidal about z this is ``-(c + a cos theta0) / |r|``; poloidal about a
    horizontal axis ``(a + c cos theta)(w2 cos phi0 - w1 sin phi0) / |r|``; the
    knot about z gives ``-p rho^2 / (|dr/du| |r|)`` with ``rho = c + a cos(q u)``.
    """
    w = geo.require_unit(geo.unit_axis(axis) if isinstance(axis, str) else axis)
    r, dr = geo.curve(loop, shape, u)
    t = dr / np.linalg.norm(dr, axis=-1, keepdims=True)
    rhat = r / np.linalg.norm(r, axis=-1, keepdims=True)
    return np.sum(np.cross(w, t) * rhat, axis=-1)


def berry_phase_analytic(
    loop: LoopSpec,
    shape: TorusShape,
    qc: QuantumConfig = QuantumConfig(),
    rot=None,
    expanded: bool = False,
) -> float:
    """Closed-form semiclassical Berry phase.

    toroidal: ``(4 pi n A / L^2)(L / sqrt(c^2 + a^2 + 2ca cos theta0))``, or with
    ``expanded=True`` its thin-torus expansion
    ``(8 pi^2 n A / L^2)(1 - a^2 sin^2 theta0 / (2 (c + a cos theta0)^2))``;
    poloidal: ``-(4 pi n Abar / L^2)(n1 sin phi0 - n2 cos phi0)(2 pi c / a)``;
    knot: ``-(2 pi n / (2 pi p c)^2)(2 pi p)(pi c^2) = -pi n / p`` (disc of radius c,
    length ``2 pi p c``), meaningful only for ``c >> a``.
    """
    rot = _as_rotation(rot if rot is not None else "z")
    n1, n2, n3 = rot.vector
    n = qc.n
    c, a = shape.c, shape.a
    if loop.kind == "toroidal":
        radius = c + a * math.cos(loop.theta0)
        area, length = math.pi * radius**2, TWO_PI * radius
        if expanded:
            corr = 1.0 - 0.5 * a**2 * math.sin(loop.theta0) ** 2 / radius**2
            gamma = 8.0 * math.pi**2 * n * area / length**2 * corr
        else:
            gamma = 4.0 * math.pi * n * area / length**2 * (length / math.sqrt(c * c + a * a + 2 * c * a * math.cos(loop.theta0)))
        gamma *= n3
    elif loop.kind == "poloidal":
        area, length = math.pi * a**2, TWO_PI * a
        tilt = n1 * math.sin(loop.phi0) - n2 * math.cos(loop.phi0)
        gamma = -4.0 * math.pi * n * area / length**2 * tilt * (TWO_PI * c / a)
    else:
        if shape.sigma < THIN_TORUS_WARN_SIGMA:
            warnings.warn(f"knot Berry phase is a thin-torus result; sigma={shape.sigma:.3g} < {THIN_TORUS_WARN_SIGMA}", stacklevel=2)
        p = loop.p
        length = TWO_PI * p * c
        gamma = -TWO_PI * n / length**2 * (TWO_PI * p) * (math.pi * c * c) * n3
    return loop.orientation * gamma


def berry_phase_numeric(
    loop: LoopSpec,
    shape: TorusShape,
    qc: QuantumConfig = QuantumConfig(),
    rot=None,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """``gamma_n = -2 pi n <kappa>_s`` with the arc-length average done by quadrature.

    ``rot`` is a :class:`RotationAxis` or an axis (``'x'``, a 3-vector, ...).
    Toroidal loops reproduce :func:`berry_phase_analytic` exactly; poloidal
    loops and knots give the direct quadrature that their closed forms
    approximate.
    """
    rot = _as_rotation(rot if rot is not None else "z")
    length = geo.arc_length(loop, shape, cfg)
    total = 0.0
    for w_i, e_i in zip(rot.vector, np.eye(3)):
        if not w_i:
            continue

        def integrand(u, e_i=e_i):
            return coupling_factor(loop, shape, u, e_i) * geo.speed(loop, shape, u)

        total += w_i * integrate_periodic(integrand, TWO_PI, cfg, geo.ROUNDOFF_REL * length) / length
    return -TWO_PI * qc.n * total


@dataclass(frozen=True)
class KnotQuantumProblem:
    """Particle confined to a (p, q) knot, ``H = p_phi^2 / (2 f(phi))``.

    ``phi`` is the toroidal angle with period ``2 pi p``; the grid is laid on
    the knot parameter ``u = phi / p`` over ``[0, 2 pi)``.
    """

    shape: TorusShape
    p: int
    q: int
    hbar: float = 1.0
    grid_size: int = 2048

    def __post_init__(self):
        LoopSpec.knot(self.p, self.q)
        if self.grid_size < 256:
            raise ValidationError("grid_size must be >= 256", "grid")
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive", "hbar")

    @property
    def omega(self) -> float:
        return self.q / self.p

    @property
    def sigma(self) -> float:
        return self.shape.sigma

    def lam(self, energy: float) -> float:
        """Mathieu parameter ``8 c^2 E / (hbar^2 omega^2)``."""
        return 8.0 * self.shape.c**2 * energy / (self.hbar**2 * self.omega**2)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, TWO_PI, self.grid_size, endpoint=False)


def quantum_potential(f, df, d2f):
    """``(2 f f'' - f'^2) / (12 f^2)``."""
    f = np.asarray(f, dtype=float)
    return (2.0 * f * np.asarray(d2f) - np.asarray(df) ** 2) / (12.0 * f * f)


def knot_potential(prob: KnotQuantumProblem, phi, energy: float, thin: bool = False):
    """``U(phi)`` in ``Sigma'' + U Sigma = 0`` (derivatives in the toroidal angle).

    Exact: ``V_q + 2 E f / hbar^2`` with ``f``, ``f'``, ``f''`` differentiated
    in closed form. ``thin=True`` gives ``lam w^2 / 4 - (w^2 / 3 sigma) cos(w phi)``.
    The thin form keeps the energy term at zeroth order only, so for ``E != 0``
    the two differ by ``(2E/hbar^2)(f - c^2) = O(E c^2 / sigma)``.
    """
    phi = np.asarray(phi, dtype=float)
    w = prob.omega
    if thin:
        return prob.lam(energy) * w * w / 4.0 - w * w / (3.0 * prob.sigma) * np.cos(w * phi)
    f, df, d2f = geo.metric_factor_derivatives(prob.shape, prob.p, prob.q, phi)
    return quantum_potential(f, df, d2f) + 2.0 * energy * f / prob.hbar**2


def knot_eigenproblem(prob: KnotQuantumProblem) -> EigenProblem:
    """Discretize ``(-d^2/dphi^2 - V_q) Sigma = (2 f / hbar^2) E Sigma`` on the u-grid."""
    u = prob.grid()
    phi = prob.p * u
    f, df, d2f = geo.metric_factor_derivatives(prob.shape, prob.p, prob.q, phi)
    vq = quantum_potential(f, df, d2f)
    stiffness = -periodic_second_difference(prob.grid_size, TWO_PI) / prob.p**2
    stiffness[np.diag_indices_from(stiffness)] -= vq
    return EigenProblem(stiffness, 2.0 * f / prob.hbar**2, prob.grid_size, TWO_PI)


def knot_energy_thin(shape: TorusShape, p: int, q: int, n: int, hbar: float = 1.0) -> float:
    """Thin-torus level ``n^2 hbar^2 w^2 / (2 c^2 q^2)``."""
    w = q / p
    return n * n * hbar * hbar * w * w / (2.0 * shape.c**2 * q * q)


@dataclass
class SpectrumResult:
    energies: np.ndarray
    sigma: np.ndarray = field(repr=False)  # columns, mass-orthonormal
    psi: np.ndarray = field(repr=False)  # sqrt(f) * sigma
    grid: np.ndarray = field(repr=False)
    degeneracy_pairs: list

    def level(self, n: int) -> float:
        """Level ``E_n``: the ground state for ``n = 0``, else the mean of the n-th +/- pair."""
        if n == 0:
            return float(self.energies[0])
        i = 2 * n - 1
        if i + 1 >= len(self.energies):
            raise ValidationError(f"level {n} needs at least {i + 2} computed energies", "k")
        return float(0.5 * (self.energies[i] + self.energies[i + 1]))

    def pair_gap(self, n: int) -> float:
        """Relative splitting of the n-th +/- pair."""
        i = 2 * n - 1
        e1, e2 = self.energies[i], self.energies[i + 1]
        return float(abs(e2 - e1) / abs(0.5 * (e1 + e2)))


def knot_spectrum(prob: KnotQuantumProblem, k: int) -> SpectrumResult:
    if not 1 <= k <= prob.grid_size // 4:
        raise ValidationError(f"k must lie in [1, {prob.grid_size // 4}]", "k")
    vals, vecs = generalized_eigs(knot_eigenproblem(prob), k)
    u = prob.grid()
    f = geo.metric_factor(prob.shape, prob.p, prob.q, prob.p * u)
    pairs = []
    for i in range(len(vals) - 1):
        scale = max(abs(vals[i]), abs(vals[i + 1]))
        if scale > 0 and abs(vals[i + 1] - vals[i]) / scale < DEGENERACY_FLAG:
            pairs.append((i, i + 1))
    return SpectrumResult(vals, vecs, np.sqrt(f)[:, None] * vecs, u, pairs)


@dataclass
class BerryResult:
    gamma: float
    gamma_next: float
    n: int
    hannay_from_berry: float
    classical_angle: float
    ratio: float
    line_integral_angle: float

    def as_dict(self) -> dict:
        return {
            "gamma_n": self.gamma,
            "gamma_n_plus_1": self.gamma_next,
            "hannay_from_berry": self.hannay_from_berry,
            "classical_angle": self.classical_angle,
            "ratio": self.ratio,
            "line_integral_angle": self.line_integral_angle,
        }


def hannay_from_berry(
    loop: LoopSpec,
    shape: TorusShape,
    qc: QuantumConfig = QuantumConfig(),
    rot=None,
) -> BerryResult:
    """Hannay angle ``-hbar (gamma_{n+1} - gamma_n)`` from the closed-form Berry phase.

    ``classical_angle`` is the classical closed form the Berry result is set
    against: the same as ``line_integral_angle`` for toroidal and poloidal
    loops, and :func:`classical_phase.knot_hannay_angle_halved` for knots.
    ``ratio`` is ``|hannay_from_berry| / |classical_angle|``.
    """
    rot = _as_rotation(rot if rot is not None else "z")
    g0 = berry_phase_analytic(loop, shape, qc, rot)
    g1 = berry_phase_analytic(loop, shape, QuantumConfig(qc.hbar, qc.n + 1), rot)
    from_berry = -qc.hbar * (g1 - g0)
    exact = hannay_angle_analytic(loop, shape, rot)
    if loop.kind == "knot":
        classical = loop.orientation * rot.vector[2] * knot_hannay_angle_halved(shape, loop.p, loop.q)
    else:
        classical = exact
    ratio = abs(from_berry) / abs(classical) if classical != 0 else math.nan
    return BerryResult(g0, g1, qc.n, from_berry, classical, ratio, exact)
