"""Numerical kernels: periodic quadrature, fixed-step RK4, dense generalized eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

from .errors import EigenError, IntegrationError, QuadratureError, ValidationError

__all__ = [
    "QuadratureConfig",
    "OdeConfig",
    "Trajectory",
    "EigenProblem",
    "integrate_periodic",
    "solve_ode",
    "rk4_step",
    "generalized_eigs",
    "periodic_second_difference",
]


@dataclass(frozen=True)
class QuadratureConfig:
    panels: int = 4096
    refinement_checks: int = 4
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValidationError("composite Simpson needs an even panel count >= 2", "panels")
        if self.refinement_checks < 1:
            raise ValidationError("refinement_checks must be >= 1", "refinement_checks")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive", "rel_tol")


DEFAULT_QUADRATURE = QuadratureConfig()


def _simpson(f, period: float, panels: int):
    u = np.linspace(0.0, period, panels + 1)
    vals = np.asarray(f(u), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand is not finite on the period", float("nan"))
    return simpson(vals, x=u, axis=-1), simpson(np.abs(vals), x=u, axis=-1)


def integrate_periodic(
    f: Callable[[np.ndarray], np.ndarray],
    period: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    abs_tol: float = 0.0,
):
    """Composite Simpson integral of ``f`` over ``[0, period]``.

    ``f`` is called with an array of abscissae and may return an array of the
    same length or a stack ``(k, n)`` of integrands, in which case a length-k
    array is returned. The panel count is doubled until two successive
    estimates differ by less than ``rel_tol`` times the integral of ``|f|``
    (which keeps the test meaningful for integrals that vanish). ``abs_tol``
    is an extra absolute allowance for integrands that are zero up to
    roundoff, where the relative test would only compare noise with noise.
    """
    if not (period > 0 and math.isfinite(period)):
        raise ValidationError("period must be positive and finite", "period")
    panels = cfg.panels
    prev, _ = _simpson(f, period, panels)
    change = float("inf")
    for _ in range(cfg.refinement_checks):
        panels *= 2
        cur, scale = _simpson(f, period, panels)
        diff = np.max(np.abs(np.asarray(cur) - np.asarray(prev)))
        ref = max(float(np.max(np.abs(scale))), np.finfo(float).tiny)
        change = diff / ref
        if diff <= cfg.rel_tol * ref + abs_tol:
            return float(cur) if np.ndim(cur) == 0 else np.asarray(cur)
        prev = cur
    raise QuadratureError(f"no convergence after {cfg.refinement_checks} panel doublings", change)


@dataclass(frozen=True)
class OdeConfig:
    step: float
    t_end: float
    record_stride: int = 1

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValidationError("step must be positive", "step")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValidationError("t_end must be positive", "t_end")
        if self.record_stride < 1:
            raise ValidationError("record_stride must be >= 1", "record_stride")

    @property
    def n_steps(self) -> int:
        # the step is shrunk slightly so that the grid lands exactly on t_end
        return max(1, math.ceil(self.t_end / self.step - 1e-9))

    @property
    def effective_step(self) -> float:
        return self.t_end / self.n_steps

    def halved(self) -> "OdeConfig":
        return OdeConfig(self.effective_step / 2, self.t_end, self.record_stride * 2)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), dim)

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def solve_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    cfg: OdeConfig,
) -> Trajectory:
    """Classical fixed-step RK4 from t=0 to ``cfg.t_end``.

    States are recorded every ``record_stride`` steps; the final state is
    always recorded.
    """
    y = np.array(y0, dtype=float)
    n = cfg.n_steps
    h = cfg.effective_step
    ts = [0.0]
    ys = [y.copy()]
    for i in range(1, n + 1):
        t0 = (i - 1) * h
        y = rk4_step(rhs, t0, y, h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", i * h)
        if i % cfg.record_stride == 0 or i == n:
            ts.append(i * h)
            ys.append(y.copy())
    return Trajectory(np.array(ts), np.array(ys))


def periodic_second_difference(n: int, period: float) -> np.ndarray:
    """Dense matrix of the central second difference on a uniform periodic grid."""
    h = period / n
    d2 = np.zeros((n, n))
    idx = np.arange(n)
    d2[idx, idx] = -2.0
    d2[idx, (idx + 1) % n] += 1.0
    d2[idx, (idx - 1) % n] += 1.0
    return d2 / (h * h)


@dataclass
class EigenProblem:
    """``stiffness @ v = E * mass @ v`` with a diagonal positive ``mass``.

    ``mass`` may be given as the diagonal (1-D) or as a diagonal matrix.
    """

    stiffness: np.ndarray
    mass: np.ndarray
    grid_size: int
    period: float

    def __post_init__(self):
        k = np.asarray(self.stiffness, dtype=float)
        m = np.asarray(self.mass, dtype=float)
        if m.ndim == 2:
            if np.any(m - np.diag(np.diag(m))):
                raise ValidationError("mass matrix must be diagonal", "mass")
            m = np.diag(m).copy()
        if k.shape != (self.grid_size, self.grid_size) or m.shape != (self.grid_size,):
            raise ValidationError("matrix shapes do not match grid_size", "grid_size")
        if not np.all(m > 0):
            raise ValidationError("mass entries must be positive", "mass")
        if np.max(np.abs(k - k.T)) > 1e-12 * max(1.0, np.max(np.abs(k))):
            raise ValidationError("stiffness matrix is not symmetric", "stiffness")
        self.stiffness = k
        self.mass = m


def _canonical_pair(v: np.ndarray) -> np.ndarray:
    # rotate a 2-dim degenerate subspace so that column 0 peaks at grid index 0
    # (cosine-like) and column 1 vanishes there (sine-like)
    c = v[0, :]
    norm = math.hypot(c[0], c[1])
    if norm < 1e-12 * np.max(np.abs(v)):
        return v
    c = c / norm
    rot = np.array([[c[0], -c[1]], [c[1], c[0]]])
    out = v @ rot
    if out[1, 1] - out[-1, 1] < 0:
        out[:, 1] *= -1.0
    return out


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(vec)))
    return vec if vec[i] >= 0 else -vec


def generalized_eigs(prob: EigenProblem, k: int, cluster_tol: float = 1e-8):
    """Lowest ``k`` eigenpairs of the generalized problem, ascending.

    Returns ``(values, vectors)`` with vectors as mass-orthonormal columns.
    Eigenvectors are put in a reproducible gauge: sign fixed by the largest
    component, and two-fold degenerate pairs rotated into cosine-like then
    sine-like order on the grid.
    """
    n = prob.grid_size
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}]", "k")
    scale = 1.0 / np.sqrt(prob.mass)
    sym = prob.stiffness * scale[:, None] * scale[None, :]
    try:
        # widen the window by one level so a degenerate partner at the edge is seen
        top = min(n, k + 1)
        vals, w = scipy.linalg.eigh(sym, subset_by_index=[0, top - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"dense eigensolver failed: {exc}") from exc
    vecs = w * scale[:, None]

    spread = max(np.max(np.abs(vals)), 1e-300)
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and abs(vals[j] - vals[i]) <= cluster_tol * spread:
            j += 1
        if j - i == 2:
            vecs[:, i:j] = _canonical_pair(vecs[:, i:j])
        else:
            for m in range(i, j):
                vecs[:, m] = _fix_sign(vecs[:, m])
        i = j
    return vals[:k].copy(), vecs[:, :k].copy()
