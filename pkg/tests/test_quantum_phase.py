from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusphase import geometry as geo
from torusphase import quantum_phase as qp
from torusphase.classical_phase import RotationAxis, hannay_angle_numeric, knot_hannay_angle_halved
from torusphase.errors import ValidationError
from torusphase.geometry import LoopSpec, TorusShape
from torusphase.quantum_phase import KnotQuantumProblem, QuantumConfig

from . import _oracles as orc

PI = math.pi
SHAPE = TorusShape(2.0, 1.0)
THIN = TorusShape(1.0, 0.01)


@pytest.fixture(scope="module")
def spectrum_2048():
    return qp.knot_spectrum(KnotQuantumProblem(THIN, 2, 3, grid_size=2048), 6)


def _kappa_oracle(kind, c, a, w, u, **kw):
    t = orc.fd_tangent(kind, c, a, u, **kw)
    r = orc.loop_point(kind, c, a, u, **kw)
    rhat = r / np.linalg.norm(r, axis=-1, keepdims=True)
    return np.sum(np.cross(w, t) * rhat, axis=-1)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            QuantumConfig(hbar=0.0)
        with pytest.raises(ValidationError):
            QuantumConfig(n=0)
        with pytest.raises(ValidationError):
            KnotQuantumProblem(THIN, 2, 3, grid_size=128)
        with pytest.raises(ValidationError):
            KnotQuantumProblem(THIN, 2, 4)

    def test_mathieu_parameter(self):
        prob = KnotQuantumProblem(THIN, 2, 3)
        assert prob.lam(0.125) == pytest.approx(8 * 0.125 / 2.25, rel=1e-15)


class TestCoupling:
    def test_toroidal_equator(self):
        u = np.linspace(0, 2 * PI, 9)
        assert np.allclose(qp.coupling_factor(LoopSpec.toroidal(0.0), SHAPE, u, "z"), -1.0, atol=1e-15)

    @pytest.mark.parametrize("theta0", [0.5, 2.0, 4.0])
    def test_toroidal_general(self, theta0):
        ref = -(2 + math.cos(theta0)) / math.sqrt(4 + 1 + 4 * math.cos(theta0))
        got = qp.coupling_factor(LoopSpec.toroidal(theta0), SHAPE, np.linspace(0, 6, 5), "z")
        assert np.allclose(got, ref, rtol=1e-14)

    def test_poloidal_vertical_axis(self):
        got = qp.coupling_factor(LoopSpec.poloidal(PI / 2), SHAPE, np.linspace(0, 2 * PI, 50), "z")
        assert np.max(np.abs(got)) < 1e-15

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(["toroidal", "poloidal", "knot"]), st.floats(0, 2 * PI), st.sampled_from(["x", "y", "z"]))
    def test_matches_direct_geometry(self, kind, angle, axis):
        kw = {"theta0": angle, "phi0": angle, "p": 2, "q": 3}
        loop = {"toroidal": LoopSpec.toroidal(angle), "poloidal": LoopSpec.poloidal(angle), "knot": LoopSpec.knot(2, 3)}[kind]
        u = np.linspace(0.1, 6.1, 13)
        ref = _kappa_oracle(kind, 2.0, 1.0, geo.unit_axis(axis), u, **kw)
        assert np.allclose(qp.coupling_factor(loop, SHAPE, u, axis), ref, atol=1e-8)

    def test_poloidal_closed_form(self):
        phi0 = 0.7
        u = np.linspace(0, 2 * PI, 17)
        w = geo.unit_axis([1.0, 2.0, 0.5])
        rmag = np.sqrt(4 + 1 + 4 * np.cos(u))
        ref = (1 + 2 * np.cos(u)) * (w[1] * math.cos(phi0) - w[0] * math.sin(phi0)) / rmag
        assert np.allclose(qp.coupling_factor(LoopSpec.poloidal(phi0), SHAPE, u, w), ref, atol=1e-14)

    def test_knot_thin_limit(self):
        u = np.linspace(0, 2 * PI, 200)
        got = qp.coupling_factor(LoopSpec.knot(2, 3), TorusShape(100.0, 1.0), u, "z")
        assert np.allclose(got, -1.0, rtol=0.05)


class TestBerryAnalytic:
    def test_toroidal(self):
        assert qp.berry_phase_analytic(LoopSpec.toroidal(0.0), SHAPE) == pytest.approx(2 * PI, rel=1e-15)

    def test_poloidal(self):
        got = qp.berry_phase_analytic(LoopSpec.poloidal(PI / 2), SHAPE, rot=RotationAxis.from_windings(1, 0))
        assert got == pytest.approx(-4 * PI, rel=1e-15)

    def test_knot(self):
        assert qp.berry_phase_analytic(LoopSpec.knot(2, 3), TorusShape(100.0, 1.0)) == pytest.approx(-PI / 2, rel=1e-15)

    def test_knot_warns_on_fat_torus(self):
        with pytest.warns(UserWarning, match="thin-torus"):
            qp.berry_phase_analytic(LoopSpec.knot(2, 3), SHAPE)

    @pytest.mark.parametrize(
        "loop,rot",
        [
            (LoopSpec.toroidal(1.2), RotationAxis.about("z")),
            (LoopSpec.poloidal(0.4), RotationAxis.from_windings(1, 2)),
            (LoopSpec.knot(3, 2), RotationAxis.about("z")),
        ],
        ids=["tor", "pol", "knot"],
    )
    def test_linear_in_n(self, loop, rot):
        shape = TorusShape(50.0, 1.0)
        g = [qp.berry_phase_analytic(loop, shape, QuantumConfig(n=n), rot) for n in range(1, 6)]
        slopes = np.diff(g)
        assert np.allclose(slopes, slopes[0], rtol=1e-10, atol=1e-14)
        assert g[0] == pytest.approx(slopes[0], rel=1e-10)


class TestBerryNumeric:
    def test_toroidal_equator(self):
        assert qp.berry_phase_numeric(LoopSpec.toroidal(0.0), SHAPE) == pytest.approx(2 * PI, abs=1e-8)

    @pytest.mark.parametrize("theta0", [0.3, 1.5, 2.8, 5.0])
    def test_toroidal_matches_exact_form(self, theta0):
        loop = LoopSpec.toroidal(theta0)
        qc = QuantumConfig(n=3)
        assert qp.berry_phase_numeric(loop, SHAPE, qc) == pytest.approx(qp.berry_phase_analytic(loop, SHAPE, qc), abs=1e-8)

    def test_toroidal_expanded_form(self):
        shape = TorusShape(10.0, 1.0)
        theta0 = PI / 3
        loop = LoopSpec.toroidal(theta0)
        qc = QuantumConfig(n=2)
        num = qp.berry_phase_numeric(loop, shape, qc)
        exp = qp.berry_phase_analytic(loop, shape, qc, expanded=True)
        corr = shape.a**2 * math.sin(theta0) ** 2 / (shape.c + shape.a * math.cos(theta0)) ** 2
        assert abs(num / exp - 1) < corr

    def test_poloidal_vertical_axis(self):
        assert abs(qp.berry_phase_numeric(LoopSpec.poloidal(0.8), SHAPE, rot="z")) < 1e-10

    @pytest.mark.parametrize("axis", ["x", "y"])
    def test_toroidal_horizontal_axes_vanish(self, axis):
        assert abs(qp.berry_phase_numeric(LoopSpec.toroidal(1.0), SHAPE, rot=axis)) < 1e-10

    @pytest.mark.parametrize(
        "loop", [LoopSpec.poloidal(PI / 2), LoopSpec.knot(2, 3)], ids=["pol", "knot"]
    )
    def test_against_independent_quadrature(self, loop):
        kw = {"theta0": loop.theta0, "phi0": loop.phi0, "p": loop.p, "q": loop.q}
        axis = "x" if loop.kind == "poloidal" else "z"
        w = geo.unit_axis(axis)
        speed = lambda u: np.linalg.norm(orc.fd_derivative(loop.kind, 2.0, 1.0, u, **kw), axis=-1)
        L = orc.simpson(speed, 2 * PI, 2**12)
        integral = orc.simpson(lambda u: _kappa_oracle(loop.kind, 2.0, 1.0, w, u, **kw) * speed(u), 2 * PI, 2**12)
        assert qp.berry_phase_numeric(loop, SHAPE, rot=axis) == pytest.approx(-2 * PI * integral / L, rel=1e-8)

    def test_poloidal_discrepancy_is_reported(self):
        # the closed form carries a 2 pi c / a factor that the quadrature does not reproduce
        loop = LoopSpec.poloidal(PI / 2)
        rot = RotationAxis.from_windings(1, 0)
        num = qp.berry_phase_numeric(loop, SHAPE, rot=rot)
        ana = qp.berry_phase_analytic(loop, SHAPE, rot=rot)
        assert abs(num) < abs(ana) / 2


class TestPotential:
    def test_thin_form_at_zero_energy(self):
        prob = KnotQuantumProblem(THIN, 2, 3)
        phi = np.linspace(0, 4 * PI, 400)
        dev = np.max(np.abs(qp.knot_potential(prob, phi, 0.0) - qp.knot_potential(prob, phi, 0.0, thin=True)))
        assert dev < 10 / prob.sigma**2

    def test_energy_term_difference(self):
        prob = KnotQuantumProblem(THIN, 2, 3)
        phi = np.linspace(0, 4 * PI, 400)
        E = 0.125
        dev = qp.knot_potential(prob, phi, E) - qp.knot_potential(prob, phi, E, thin=True)
        f = geo.metric_factor(THIN, 2, 3, phi)
        assert np.max(np.abs(dev - 2 * E * (f - THIN.c**2))) < 10 / prob.sigma**2

    def test_thin_value(self):
        prob = KnotQuantumProblem(THIN, 2, 3)
        w = 1.5
        lam = 8 * 0.125 / w**2
        assert qp.knot_potential(prob, 0.0, 0.125, thin=True) == pytest.approx(lam * w * w / 4 - w * w / 300, rel=1e-14)

    def test_constant_metric(self):
        assert qp.quantum_potential(np.full(5, 3.0), np.zeros(5), np.zeros(5)) == pytest.approx(0.0)


class TestSpectrum:
    def test_levels(self, spectrum_2048):
        res = spectrum_2048
        assert res.level(1) == pytest.approx(0.125, rel=0.02)
        assert res.level(2) == pytest.approx(0.5, rel=0.02)
        assert res.level(2) / res.level(1) == pytest.approx(4.0, rel=0.02)
        assert res.pair_gap(1) < 1e-2 and res.pair_gap(2) < 1e-2
        assert res.degeneracy_pairs[:2] == [(1, 2), (3, 4)]

    def test_matches_galerkin_oracle(self, spectrum_2048):
        assert abs(spectrum_2048.level(1) / orc.KNOT_E1_GALERKIN - 1) < 1e-6
        assert abs(spectrum_2048.level(2) / orc.KNOT_E2_GALERKIN - 1) < 1e-5

    def test_galerkin_oracle_is_converged(self):
        a = orc.knot_galerkin(1.0, 0.01, 2, 3, modes=48)
        b = orc.knot_galerkin(1.0, 0.01, 2, 3, modes=96)
        assert abs(a[1] - b[1]) < 1e-12 and b[1] == pytest.approx(orc.KNOT_E1_GALERKIN, rel=1e-12)

    def test_second_order_convergence(self, spectrum_2048):
        coarse = qp.knot_spectrum(KnotQuantumProblem(THIN, 2, 3, grid_size=1024), 3)
        ratio = (coarse.level(1) - orc.KNOT_E1_GALERKIN) / (spectrum_2048.level(1) - orc.KNOT_E1_GALERKIN)
        assert 3.0 <= ratio <= 5.0

    @pytest.mark.parametrize("sigma", [50.0, 100.0, 200.0])
    def test_thin_torus_limit(self, sigma):
        shape = TorusShape(1.0, 1.0 / sigma)
        res = qp.knot_spectrum(KnotQuantumProblem(shape, 2, 3, grid_size=1024), 3)
        thin = qp.knot_energy_thin(shape, 2, 3, 1)
        assert abs(res.level(1) / thin - 1) <= 10 / sigma

    def test_wavefunctions(self, spectrum_2048):
        res = spectrum_2048
        f = geo.metric_factor(THIN, 2, 3, 2 * res.grid)
        gram = res.sigma.T @ (2 * f[:, None] * res.sigma)
        assert np.allclose(gram, np.eye(gram.shape[0]), atol=1e-8)
        for col, ref in ((1, np.cos(res.grid)), (2, np.sin(res.grid)), (3, np.cos(2 * res.grid)), (4, np.sin(2 * res.grid))):
            psi = res.psi[:, col]
            overlap = psi @ ref / (np.linalg.norm(psi) * np.linalg.norm(ref))
            assert overlap > 0.999

    def test_k_bounds(self):
        with pytest.raises(ValidationError):
            qp.knot_spectrum(KnotQuantumProblem(THIN, 2, 3, grid_size=256), 65)


class TestHannayFromBerry:
    def test_toroidal(self):
        res = qp.hannay_from_berry(LoopSpec.toroidal(0.0), SHAPE)
        assert res.hannay_from_berry == pytest.approx(-2 * PI, abs=1e-12)
        assert res.ratio == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("c", [2.0, 5.0, 10.0])
    def test_poloidal_mismatch(self, c):
        shape = TorusShape(c, 1.0)
        res = qp.hannay_from_berry(LoopSpec.poloidal(PI / 2), shape, rot=RotationAxis.from_windings(1, 0))
        assert res.ratio == pytest.approx(c, rel=1e-12)

    def test_knot_thin(self):
        shape = TorusShape(100.0, 1.0)
        res = qp.hannay_from_berry(LoopSpec.knot(2, 3), shape)
        assert abs(res.hannay_from_berry) == pytest.approx(PI / 2, rel=1e-12)
        assert res.ratio == pytest.approx(1.0, rel=0.1)
        assert res.classical_angle == pytest.approx(knot_hannay_angle_halved(shape, 2, 3))
        numeric = hannay_angle_numeric(LoopSpec.knot(2, 3), shape, RotationAxis.about("z")).angle
        assert res.line_integral_angle == pytest.approx(numeric, rel=1e-9)

    @pytest.mark.parametrize(
        "loop,rot",
        [(LoopSpec.toroidal(2.0), RotationAxis.about("z")), (LoopSpec.poloidal(1.0), RotationAxis.from_windings(1, 1))],
        ids=["tor", "pol"],
    )
    def test_independent_of_n(self, loop, rot):
        vals = [qp.hannay_from_berry(loop, SHAPE, QuantumConfig(n=n), rot).hannay_from_berry for n in (1, 2, 7)]
        assert np.allclose(vals, vals[0], rtol=1e-10)

    def test_hbar_scaling(self):
        res = qp.hannay_from_berry(LoopSpec.toroidal(0.0), SHAPE, QuantumConfig(hbar=2.0))
        assert res.hannay_from_berry == pytest.approx(-4 * PI)
