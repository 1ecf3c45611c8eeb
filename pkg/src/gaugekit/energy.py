"""Potentials, energy partitions, and normal-mode amplitudes.

Two ways of carving up the same total electromagnetic energy:

* the canonical split, built from the transverse canonical momentum
  Pi_T = -(E_T + P_T) and the kernel's transverse polarization, whose
  individual terms depend on the gauge kernel;
* the kernel-independent split 1/2 int (E^2 + B^2) plus matter terms,
  which depends only on the physical fields.

The toolkit computes all terms separately so either bookkeeping can be
reassembled, and the acceptance suite exercises both the invariance of
the total and the kernel dependence of the canonical pieces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _sfft

from .errors import NonTransverseInput
from .kernels import GaugeKernel, polarization
from .lattice import (
    Grid,
    ScalarField,
    VectorField,
    curl,
    helmholtz_decompose,
    inner,
    solve_poisson,
)


def coulomb_potential(rho: ScalarField) -> ScalarField:
    """Static potential V with -lap V = rho; zero box average."""
    return solve_poisson(rho)


def scalar_potential(kernel: GaugeKernel, rho: ScalarField,
                     E_T: VectorField) -> ScalarField:
    """phi = V + chi_g[E_T].

    The time derivative of chi_g[A_T] is chi_g[dA_T/dt] = -chi_g[E_T] by
    linearity, so the gauge's scalar potential is the Coulomb potential
    plus the chi functional of the transverse electric field.
    """
    return coulomb_potential(rho) + kernel.chi(E_T)


@dataclass(frozen=True)
class EnergyPartition:
    """Quadratic energy terms of one field state under one kernel.

    h_pi_sq     1/2 int Pi_T^2         (canonical transverse momentum)
    h_cross     int Pi_T . P_T         (canonical interaction cross term)
    h_pt_sq     1/2 int P_T^2          (transverse polarization self term)
    h_long      1/2 int P_L^2          (longitudinal field energy)
    h_mag       1/2 int B^2
    h_total_em  1/2 int (E^2 + B^2)    (kernel independent)
    """

    h_pi_sq: float
    h_cross: float
    h_pt_sq: float
    h_long: float
    h_mag: float
    h_total_em: float

    CSV_HEADER = "t,h_pi_sq,h_cross,h_pt_sq,h_long,h_mag,h_total_em"

    def transverse_electric(self) -> float:
        """1/2 int E_T^2 reassembled from the canonical terms."""
        return self.h_pi_sq + self.h_cross + self.h_pt_sq

    def csv_row(self, t: float) -> str:
        vals = (t, self.h_pi_sq, self.h_cross, self.h_pt_sq,
                self.h_long, self.h_mag, self.h_total_em)
        return ",".join(f"{v:.17g}" for v in vals)


def canonical_partition(kernel: GaugeKernel, E: VectorField, B: VectorField,
                        rho: ScalarField) -> EnergyPartition:
    """Evaluate the canonical and invariant energy terms on (E, B, rho)."""
    E_T, _E_L = helmholtz_decompose(E)
    P = polarization(kernel, rho)
    P_T, P_L = helmholtz_decompose(P)
    Pi_T = -1.0 * (E_T + P_T)
    return EnergyPartition(
        h_pi_sq=0.5 * inner(Pi_T, Pi_T),
        h_cross=inner(Pi_T, P_T),
        h_pt_sq=0.5 * inner(P_T, P_T),
        h_long=0.5 * inner(P_L, P_L),
        h_mag=0.5 * inner(B, B),
        h_total_em=0.5 * (inner(E, E) + inner(B, B)),
    )


# ---------------------------------------------------------------------------
# normal-mode amplitudes
# ---------------------------------------------------------------------------

def _full_wavenumbers(grid: Grid):
    n, h = grid.n_points, grid.spacing
    k1 = 2 * np.pi * np.fft.fftfreq(n, h)
    k1[n // 2] = 0.0  # same Nyquist convention as the derivative operators
    kx = k1[:, None, None]
    ky = k1[None, :, None]
    kz = k1[None, None, :]
    return np.broadcast_arrays(kx, ky, kz)


def polarization_basis(grid: Grid):
    """Deterministic orthonormal (eps1, eps2) per mode, both orthogonal to k.

    eps1 = normalize(k_hat x e_c) with c cycled from the largest
    component axis of k_hat (so the cross product can never vanish);
    eps2 = k_hat x eps1. Returns (eps1, eps2, omega) with omega = |k|;
    entries are zero where the effective wavevector vanishes.
    """
    kx, ky, kz = _full_wavenumbers(grid)
    k = np.stack([kx, ky, kz], axis=-1)
    omega = np.sqrt((k**2).sum(axis=-1))
    safe = np.where(omega == 0.0, 1.0, omega)
    khat = k / safe[..., None]
    largest = np.argmax(np.abs(khat), axis=-1)
    cycled = (largest + 1) % 3
    e_c = np.eye(3)[cycled]
    eps1 = np.cross(khat, e_c)
    norm1 = np.linalg.norm(eps1, axis=-1)
    norm1 = np.where(norm1 == 0.0, 1.0, norm1)
    eps1 /= norm1[..., None]
    eps2 = np.cross(khat, eps1)
    dead = omega == 0.0
    eps1[dead] = 0.0
    eps2[dead] = 0.0
    return eps1, eps2, omega


@dataclass(frozen=True)
class ModeSet:
    """Classical normal-variable amplitudes a_lambda(k) on the full FFT grid.

    The mode measure is the lattice Parseval weight h^3/N^3: with it,
    sum over modes of omega |a|^2 equals the free transverse field
    energy exactly (see `energy`). Modes with vanishing effective
    wavevector carry no amplitude.
    """

    grid: Grid
    a1: np.ndarray
    a2: np.ndarray
    omega: np.ndarray

    @property
    def measure(self) -> float:
        return self.grid.cell_volume / self.grid.n_points**3

    def energy(self) -> float:
        """sum_k,lambda omega |a|^2 times the mode measure."""
        return float(
            (self.omega * (np.abs(self.a1) ** 2 + np.abs(self.a2) ** 2)).sum()
            * self.measure
        )

    def occupied_modes(self, rel_tol: float = 1e-12):
        """Indices (lambda, kx, ky, kz) with |a| above rel_tol of the peak."""
        a = np.stack([self.a1, self.a2])
        peak = np.abs(a).max()
        if peak == 0.0:
            return np.empty((0, 4), dtype=int)
        return np.argwhere(np.abs(a) > rel_tol * peak)


def mode_amplitudes(A_T: VectorField, Pi_T: VectorField) -> ModeSet:
    """a_lambda(k) = sqrt(1/2 omega) (omega A_lambda(k) + i Pi_lambda(k)).

    Both inputs must be transverse. Amplitudes use the unnormalized FFT
    coefficients; the ModeSet records the Parseval measure that makes
    the energy identity exact.
    """
    for F in (A_T, Pi_T):
        from .lattice import transversality_residual

        res = transversality_residual(F)
        if res > 1e-10:
            raise NonTransverseInput(f"input has divergence residual {res:.3e}")
    grid = A_T.grid
    eps1, eps2, omega = polarization_basis(grid)
    Ah = _sfft.fftn(A_T.values, axes=(0, 1, 2))
    Ph = _sfft.fftn(Pi_T.values, axes=(0, 1, 2))
    safe = np.where(omega == 0.0, 1.0, omega)
    pref = np.sqrt(1.0 / (2.0 * safe))

    def project(eps):
        aa = (eps * Ah).sum(axis=-1)
        pp = (eps * Ph).sum(axis=-1)
        amp = pref * (omega * aa + 1j * pp)
        amp[omega == 0.0] = 0.0
        return amp

    return ModeSet(grid, project(eps1), project(eps2), omega)


def reconstruct_fields(modes: ModeSet) -> tuple[VectorField, VectorField]:
    """Invert mode_amplitudes; exact for inputs without dead-mode content.

    Under k -> -k the basis transforms as eps1 -> -eps1, eps2 -> eps2,
    which fixes how the two amplitudes pair with their conjugate modes.
    """
    grid = modes.grid
    eps1, eps2, omega = polarization_basis(grid)
    n = grid.n_points
    rev = (-np.arange(n)) % n
    safe = np.where(omega == 0.0, 1.0, omega)

    def split(a, sign):
        s = np.sqrt(2.0 * safe) * a
        s_rev = s[np.ix_(rev, rev, rev)].conj()
        A_l = (s - sign * s_rev) / (2.0 * safe)
        P_l = (s + sign * s_rev) / 2j
        A_l[omega == 0.0] = 0.0
        P_l[omega == 0.0] = 0.0
        return A_l, P_l

    A1, P1 = split(modes.a1, +1.0)
    A2, P2 = split(modes.a2, -1.0)
    Ah = A1[..., None] * eps1 + A2[..., None] * eps2
    Ph = P1[..., None] * eps1 + P2[..., None] * eps2
    A = _sfft.ifftn(Ah, axes=(0, 1, 2)).real
    P = _sfft.ifftn(Ph, axes=(0, 1, 2)).real
    return VectorField(grid, A), VectorField(grid, P)


def free_field_energy(A_T: VectorField, Pi_T: VectorField) -> float:
    """1/2 int (Pi_T^2 + (curl A_T)^2), the independent side of the identity."""
    B = curl(A_T)
    return 0.5 * (inner(Pi_T, Pi_T) + inner(B, B))
