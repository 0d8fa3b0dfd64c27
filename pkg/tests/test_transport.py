"""Scharfetter-Gummel charge transport.

The two load-bearing properties are flux exactness on discrete Boltzmann
profiles (which freezes the equilibrium exactly) and the sign structure of
the implicit generator (zero column sums give exact mass conservation,
nonnegative off-diagonals give unconditional positivity).
"""

import numpy as np
import pytest

import scipy.sparse as sp

from ehd2d import (
    ChargePair,
    Grid2D,
    MacVectorField,
    ScalarField,
    bernoulli,
    integrate,
    sg_face_flux,
    step_charges,
    transport_generator,
)
from ehd2d.transport import ANION_SIGN, CATION_SIGN


class TestBernoulli:
    def test_reference_value(self):
        """B(1) = 1/(e-1), frozen independently."""
        assert bernoulli(1.0) == pytest.approx(0.5819767068693265, abs=1e-15)

    def test_value_at_zero(self):
        assert bernoulli(0.0) == 1.0

    def test_shift_identity(self):
        """B(x) - B(-x) = -x, the identity behind flux antisymmetry."""
        for x in (0.5, 2.0, 10.0, 30.0):
            got = bernoulli(x) - bernoulli(-x)
            assert got == pytest.approx(-x, rel=1e-13), f"x={x}: {got}"

    def test_tiny_argument_series(self):
        x = 1e-12
        assert bernoulli(x) == pytest.approx(1.0 - x / 2, abs=1e-15)

    def test_no_overflow_at_large_arguments(self):
        big = bernoulli(-750.0)
        small = bernoulli(750.0)
        assert np.isfinite(big) and big == pytest.approx(750.0, rel=1e-12)
        assert np.isfinite(small) and 0.0 <= small < 1e-300

    def test_vectorized(self):
        x = np.array([-2.0, 0.0, 2.0])
        out = bernoulli(x)
        assert out.shape == (3,)
        assert out[1] == 1.0


class TestFaceFlux:
    def test_pure_diffusion(self):
        """No field: the flux is the plain two-point difference,
        (2 - 1)/0.1 = 10."""
        assert sg_face_flux(2.0, 1.0, 0.0, 0.1, CATION_SIGN) == pytest.approx(10.0)
        assert sg_face_flux(2.0, 1.0, 0.0, 0.1, ANION_SIGN) == pytest.approx(10.0)

    def test_exact_on_cation_maxwellian(self):
        """Cells sampling c = e^{+phi} carry zero cation flux for any jump."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            phi_l = rng.uniform(-3, 3)
            dpsi = rng.uniform(-50, 50)
            c_l, c_r = np.exp(phi_l), np.exp(phi_l + dpsi)
            f = sg_face_flux(c_l, c_r, dpsi, 0.05, CATION_SIGN)
            scale = (abs(c_l) + abs(c_r)) / 0.05
            assert abs(f) <= 1e-12 * scale, f"dpsi={dpsi}: flux {f}"

    def test_exact_on_anion_maxwellian(self):
        """Cells sampling c = e^{-phi} carry zero anion flux."""
        rng = np.random.default_rng(2)
        for _ in range(200):
            phi_l = rng.uniform(-3, 3)
            dpsi = rng.uniform(-50, 50)
            c_l, c_r = np.exp(-phi_l), np.exp(-(phi_l + dpsi))
            f = sg_face_flux(c_l, c_r, dpsi, 0.05, ANION_SIGN)
            scale = (abs(c_l) + abs(c_r)) / 0.05
            assert abs(f) <= 1e-12 * scale, f"dpsi={dpsi}: flux {f}"

    def test_reduces_to_upwind_for_strong_fields(self):
        """For a huge potential drop the flux is the drift of the upstream
        cell only."""
        f = sg_face_flux(3.0, 5.0, -40.0, 0.1, ANION_SIGN)
        # anion drift runs down its own potential: B(-40)*3 - B(40)*5 over h
        assert f == pytest.approx(40.0 * 3.0 / 0.1, rel=1e-10)


def random_setup(seed, nx=20, ny=15):
    g = Grid2D(nx, ny)
    rng = np.random.default_rng(seed)
    phi = ScalarField(g, rng.uniform(-1.5, 1.5, (ny, nx)))
    u = MacVectorField.zeros(g)
    u.ux[:, 1:-1] = rng.uniform(-2, 2, (ny, nx - 1))
    u.uy[1:-1, :] = rng.uniform(-2, 2, (ny - 1, nx))
    c = ChargePair(
        ScalarField(g, rng.uniform(0.0, 2.0, (ny, nx))),
        ScalarField(g, rng.uniform(0.0, 2.0, (ny, nx))),
    )
    return g, phi, u, c


class TestGeneratorStructure:
    def test_column_sums_vanish(self):
        """1^T L = 0 exactly: the implicit step conserves each species'
        mass to roundoff no matter the field or velocity."""
        for seed in range(5):
            g, phi, u, _ = random_setup(seed)
            for sign in (CATION_SIGN, ANION_SIGN):
                L = transport_generator(phi, u, sign)
                s = np.asarray(L.T @ np.ones(g.nx * g.ny)).ravel()
                assert np.abs(s).max() <= 1e-12 * (1 / g.hx ** 2), (
                    f"seed {seed} sign {sign}: max column sum {np.abs(s).max()}"
                )

    def test_offdiagonals_nonnegative(self):
        g, phi, u, _ = random_setup(9)
        L = transport_generator(phi, u, CATION_SIGN).tocoo()
        off = L.data[L.row != L.col]
        assert off.min() >= 0.0, f"negative off-diagonal {off.min()}"

    def test_zero_field_zero_velocity_is_neumann_laplacian(self):
        from ehd2d import laplacian_matrix
        g = Grid2D(11, 8)
        phi = ScalarField.zeros(g)
        u = MacVectorField.zeros(g)
        L = transport_generator(phi, u, CATION_SIGN)
        A = laplacian_matrix(g, "neumann")
        d = abs(L - A)
        assert d.max() <= 1e-12 / g.hx ** 2


class TestStepCharges:
    def test_mass_conserved_through_churn(self):
        """200 implicit steps under fresh random fields every step: machine
        conservation, no accumulation."""
        g, phi, u, c = random_setup(33)
        rng = np.random.default_rng(34)
        m_v, m_w = integrate(c.v), integrate(c.w)
        for _ in range(200):
            phi = ScalarField(g, rng.uniform(-1, 1, (g.ny, g.nx)))
            c = step_charges(c, phi, u, 1e-2)
        assert abs(integrate(c.v) - m_v) <= 1e-13 * m_v
        assert abs(integrate(c.w) - m_w) <= 1e-13 * m_w

    @pytest.mark.parametrize("dt", [1e-4, 1e-2, 1.0])
    def test_positivity_any_dt(self, dt):
        """The M-matrix structure gives positivity without a dt restriction;
        exercised with exact zeros in the initial data."""
        g, phi, u, c = random_setup(55)
        c.v.data[::3, ::4] = 0.0
        c.w.data[1::5, ::3] = 0.0
        out = step_charges(c, phi, u, dt)
        assert out.v.data.min() >= 0.0, f"dt={dt}: min v {out.v.data.min()}"
        assert out.w.data.min() >= 0.0, f"dt={dt}: min w {out.w.data.min()}"

    def test_maxwellian_is_invariant(self):
        """With u=0 the discrete Boltzmann profiles are exact steady states
        of the implicit step (flux exactness transferred to the matrix)."""
        g = Grid2D(18, 18)
        rng = np.random.default_rng(77)
        phi = ScalarField(g, rng.uniform(-0.8, 0.8, (18, 18)))
        u = MacVectorField.zeros(g)
        v = ScalarField(g, np.exp(phi.data))
        w = ScalarField(g, np.exp(-phi.data))
        out = step_charges(ChargePair(v, w), phi, u, 0.5)
        dv = np.abs(out.v.data - v.data).max()
        dw = np.abs(out.w.data - w.data).max()
        assert dv <= 1e-11, f"cation Maxwellian moved by {dv:.3e}"
        assert dw <= 1e-11, f"anion Maxwellian moved by {dw:.3e}"

    def test_relaxes_to_maxwellian(self):
        """Fixed potential, u=0: the implicit chain converges to the
        mass-normalized Boltzmann profile."""
        g = Grid2D(16, 12)
        rng = np.random.default_rng(41)
        phi = ScalarField(g, 0.7 * np.sin(2 * np.pi * g.cell_centers()[0]))
        u = MacVectorField.zeros(g)
        v0 = ScalarField(g, rng.uniform(0.2, 1.8, (12, 16)))
        c = ChargePair(v0, v0.copy())
        mass = integrate(v0)
        for _ in range(4):
            c = step_charges(c, phi, u, 1e4)
        target_v = np.exp(phi.data)
        target_v *= mass / (g.vol * target_v.sum())
        target_w = np.exp(-phi.data)
        target_w *= mass / (g.vol * target_w.sum())
        assert np.abs(c.v.data - target_v).max() <= 1e-8
        assert np.abs(c.w.data - target_w).max() <= 1e-8

    def test_entropy_nonincreasing(self):
        """Relative entropy against the fixed-potential Maxwellian is a
        Lyapunov function of the pure transport step."""
        from ehd2d.diagnostics import psi
        g = Grid2D(20, 20)
        rng = np.random.default_rng(90)
        phi = ScalarField(g, 0.5 * np.cos(np.pi * g.cell_centers()[1]))
        u = MacVectorField.zeros(g)
        v = ScalarField(g, rng.uniform(0.05, 2.0, (20, 20)))
        c = ChargePair(v, ScalarField(g, rng.uniform(0.05, 2.0, (20, 20))))
        mass = integrate(c.v)
        ref = np.exp(phi.data)
        ref *= mass / (g.vol * ref.sum())
        prev = g.vol * psi(c.v.data, ref).sum()
        for k in range(30):
            c = step_charges(c, phi, u, 5e-3)
            h = g.vol * psi(c.v.data, ref).sum()
            assert h <= prev + 1e-13 * (1 + abs(prev)), (
                f"entropy rose at step {k}: {prev} -> {h}"
            )
            prev = h

    def test_dt_must_be_positive(self):
        g, phi, u, c = random_setup(3)
        with pytest.raises(ValueError):
            step_charges(c, phi, u, 0.0)
