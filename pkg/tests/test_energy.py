"""Potentials, energy partitions, and mode amplitudes."""

import numpy as np
import pytest

from gaugekit import (
    CoulombKernel,
    PoincareKernel,
    ScalarField,
    VectorField,
    canonical_partition,
    coulomb_potential,
    free_field_energy,
    grad,
    helmholtz_decompose,
    inner,
    make_kernel,
    mode_amplitudes,
    reconstruct_fields,
    scalar_potential,
    solve_poisson,
    transverse_part,
)
from gaugekit.energy import polarization_basis
from gaugekit.errors import NonNeutralSource, NonTransverseInput
from gaugekit.lattice import Grid, l2_norm
from gaugekit.patterns import (
    gaussian_dipole_rho,
    plane_wave_state,
    random_band_limited,
    random_transverse,
)


class TestCoulombPotential:
    def test_zero_source(self, grid16):
        V = coulomb_potential(ScalarField.zeros(grid16))
        assert not V.values.any()

    def test_single_mode(self, grid32):
        L = grid32.box_length
        x = grid32.coords()[..., 0]
        rho = ScalarField(grid32, np.cos(2 * np.pi * x / L))
        V = coulomb_potential(rho)
        np.testing.assert_allclose(
            V.values, (L / (2 * np.pi)) ** 2 * np.cos(2 * np.pi * x / L), atol=1e-12)

    def test_rejects_charged_box(self, grid16):
        with pytest.raises(NonNeutralSource):
            coulomb_potential(ScalarField(grid16, np.ones((16, 16, 16))))


class TestScalarPotential:
    def test_coulomb_kernel_gives_plain_potential(self, grid24, rng):
        h = grid24.spacing
        rho = gaussian_dipole_rho(grid24, 3 * (12.0,), (5 * h, 0, 0), 2.5 * h)
        E_T = random_transverse(grid24, rng)
        phi = scalar_potential(CoulombKernel(), rho, E_T)
        np.testing.assert_array_equal(phi.values, coulomb_potential(rho).values)

    def test_statics_kernel_independent(self, grid24):
        h = grid24.spacing
        rho = gaussian_dipole_rho(grid24, 3 * (12.0,), (5 * h, 0, 0), 2.5 * h)
        E_T = VectorField.zeros(grid24)
        V = coulomb_potential(rho)
        for kernel in (CoulombKernel(), PoincareKernel(3 * (12.0,), 8)):
            phi = scalar_potential(kernel, rho, E_T)
            assert np.abs(phi.values - V.values).max() < 1e-13

    def test_poincare_pure_radiation_matches_chi(self, grid32):
        # rho = 0: phi reduces to the line-integral functional of E_T
        L = grid32.box_length
        x = grid32.coords()[..., 0]
        vals = np.zeros((32, 32, 32, 3))
        vals[..., 1] = 0.6 * np.cos(2 * np.pi * x / L)
        E_T = VectorField(grid32, vals)
        kernel = PoincareKernel(3 * (16.0,), 32)
        phi = scalar_potential(kernel, ScalarField.zeros(grid32), E_T)
        np.testing.assert_allclose(phi.values, kernel.chi(E_T).values, atol=1e-14)


def _dipole_wave_state(grid):
    h = grid.spacing
    c = 3 * (grid.box_length / 2,)
    rho = gaussian_dipole_rho(grid, c, (6 * h, 0, 0), 2.5 * h)
    E_L = -1.0 * grad(solve_poisson(rho))
    E_T, B = plane_wave_state(grid, (1, 0, 0), (0, 1, 0), 0.05)
    return rho, E_T + E_L, B


class TestCanonicalPartition:
    def test_coulomb_reduces_to_transverse_field_energy(self, grid24, rng):
        rho, E, B = _dipole_wave_state(grid24)
        part = canonical_partition(CoulombKernel(), E, B, rho)
        # P_T is exactly zero up to the rounding left by the Helmholtz split
        assert abs(part.h_cross) < 1e-14 * part.h_total_em
        assert abs(part.h_pt_sq) < 1e-14 * part.h_total_em
        E_T = transverse_part(E)
        assert part.h_pi_sq == pytest.approx(0.5 * inner(E_T, E_T), rel=1e-12)

    def test_no_charge_is_kernel_independent(self, grid24):
        E_T, B = plane_wave_state(grid24, (0, 1, 0), (0, 0, 1), 0.1)
        rho = ScalarField.zeros(grid24)
        p1 = canonical_partition(CoulombKernel(), E_T, B, rho)
        p2 = canonical_partition(PoincareKernel(3 * (12.0,), 8), E_T, B, rho)
        assert p1 == p2

    def test_invariance_and_gauge_dependence(self, grid32):
        rho, E, B = _dipole_wave_state(grid32)
        pc = canonical_partition(CoulombKernel(), E, B, rho)
        pp = canonical_partition(PoincareKernel(3 * (16.0,), 32), E, B, rho)
        assert abs(pc.h_total_em - pp.h_total_em) < 1e-12 * pc.h_total_em
        assert abs(pc.h_pi_sq - pp.h_pi_sq) > 1e-6 * pc.h_total_em

    def test_completing_the_square(self, grid24):
        rho, E, B = _dipole_wave_state(grid24)
        for kernel in (CoulombKernel(), PoincareKernel(3 * (12.0,), 16)):
            part = canonical_partition(kernel, E, B, rho)
            E_T = transverse_part(E)
            lhs = part.transverse_electric()
            assert abs(lhs - 0.5 * inner(E_T, E_T)) < 1e-10 * part.h_total_em

    def test_total_splits_into_parts(self, grid24):
        # h_total = 1/2 int E_T^2 + h_long + h_mag for Gauss-consistent states
        rho, E, B = _dipole_wave_state(grid24)
        part = canonical_partition(CoulombKernel(), E, B, rho)
        E_T = transverse_part(E)
        total = 0.5 * inner(E_T, E_T) + part.h_long + part.h_mag
        assert abs(total - part.h_total_em) < 1e-10 * part.h_total_em

    def test_csv_row_format(self, grid16):
        rho, E, B = _dipole_wave_state(grid16)
        part = canonical_partition(CoulombKernel(), E, B, rho)
        row = part.csv_row(1.5)
        assert row.startswith("1.5,")
        assert len(row.split(",")) == 7


class TestModeAmplitudes:
    def test_zero_fields_zero_amplitudes(self, grid16):
        modes = mode_amplitudes(VectorField.zeros(grid16), VectorField.zeros(grid16))
        assert not modes.a1.any() and not modes.a2.any()
        assert modes.energy() == 0.0

    def test_single_quadrature_wave_occupies_single_mode(self, grid16):
        # A and Pi in quadrature along one polarization: the rotating-frame
        # amplitude lives at exactly one (k, lambda)
        eps1, _eps2, omega = polarization_basis(grid16)
        idx = (2, 0, 0)
        k = np.array([2 * np.pi * 2 / grid16.box_length, 0.0, 0.0])
        phase = grid16.coords() @ k
        e1 = eps1[idx]
        A = np.cos(phase)[..., None] * e1
        Pi = omega[idx] * np.sin(phase)[..., None] * e1
        modes = mode_amplitudes(VectorField(grid16, A), VectorField(grid16, Pi))
        occupied = modes.occupied_modes(1e-10)
        assert len(occupied) == 1
        lam, i, j, l = occupied[0]
        assert (lam, i, j, l) == (0, *idx)

    def test_parseval_energy_identity(self, grid24, rng):
        A_T = random_transverse(grid24, rng)
        Pi_T = random_transverse(grid24, rng)
        modes = mode_amplitudes(A_T, Pi_T)
        lhs = modes.energy()
        rhs = free_field_energy(A_T, Pi_T)
        assert abs(lhs - rhs) < 1e-12 * rhs

    def test_round_trip(self, grid16, rng):
        A_T = random_transverse(grid16, rng)
        Pi_T = random_transverse(grid16, rng)
        modes = mode_amplitudes(A_T, Pi_T)
        A2, Pi2 = reconstruct_fields(modes)
        scale = np.abs(A_T.values).max()
        assert np.abs(A2.values - A_T.values).max() < 1e-12 * scale
        assert np.abs(Pi2.values - Pi_T.values).max() < 1e-12 * scale

    def test_rejects_non_transverse(self, grid16, rng):
        F = random_band_limited(grid16, rng)
        with pytest.raises(NonTransverseInput):
            mode_amplitudes(F, F)

    def test_basis_orthonormal(self, grid16):
        eps1, eps2, omega = polarization_basis(grid16)
        live = omega > 0
        khat = np.stack(np.broadcast_arrays(
            *np.meshgrid(*3 * [2 * np.pi * np.fft.fftfreq(16, 1.0)],
                         indexing="ij")), axis=-1)
        k1 = 2 * np.pi * np.fft.fftfreq(16, 1.0)
        k1[8] = 0.0
        kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
        k = np.stack([kx, ky, kz], axis=-1)
        for e in (eps1, eps2):
            np.testing.assert_allclose(
                np.linalg.norm(e[live], axis=-1), 1.0, atol=1e-13)
            assert np.abs((e * k).sum(-1)[live]).max() < 1e-12
        assert np.abs((eps1 * eps2).sum(-1)[live]).max() < 1e-13
