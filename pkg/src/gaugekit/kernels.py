"""Gauge kernels: the configurable transverse part of the divergence Green function.

A gauge choice is a kernel g(x, x') with div_x g = delta(x - x'). Its
longitudinal part is fixed (the gradient of the Coulomb Green function,
realized spectrally on the torus); the transverse part g_T is free and
defines the gauge. Two faces of one kernel appear throughout:

* chi[A_T]   - scalar functional of a transverse field; grad(chi) is the
               longitudinal vector potential that dresses A_T into the
               gauge's full vector potential A.
* P_T[rho]   - transverse polarization sourced by the charge density.

These are adjoints of each other:  <P_g, A_T> = -<rho, chi[A_T]>.  The
discrete maps here are built as exact matrix transposes (shared
quadrature nodes, shared interpolation weights, self-adjoint prefilter),
so that identity holds to rounding and is enforced for custom kernels.

Coulomb gauge: g_T = 0, chi = 0, P_T = 0.

Poincare (multipolar) gauge: chi is the line integral

    chi(x) = -int_0^1  (x - x0) . A_T(x0 + lam (x - x0)) dlam

evaluated with M-node Gauss-Legendre quadrature and quintic B-spline
interpolation, and P_T is the transverse part of the matching
straight-line dipole deposit. The line construction is not periodic, so
coordinates are taken relative to the origin x0 by minimum image and
chi is tapered to zero by a smooth radial window before the wrap seam;
sources and fields must live in the central (window-flat) region, where
the defining properties hold to quadrature accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import interp
from .errors import NonNeutralSource, NonTransverseInput, PoincareZeroModePresent
from .lattice import (
    Grid,
    ScalarField,
    VectorField,
    band_limit,
    grad,
    solve_poisson,
    transversality_residual,
    transverse_part,
)

TRANSVERSE_TOL = 1e-10


def gauss_legendre_01(order: int):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(order))
    return 0.5 * (x + 1.0), 0.5 * w


def radial_window(ell: np.ndarray, box_length: float,
                  inner: float = 0.28, outer: float = 0.49) -> np.ndarray:
    """C5 taper: 1 for ell <= inner*L, 0 for ell >= outer*L.

    An 11th-order smoothstep keeps the spectral gradient of windowed
    fields quiet in the central region (lower-order joins ring at the
    1e-3..1e-4 level on the grids used here).
    """
    u = np.clip((ell - inner * box_length) / ((outer - inner) * box_length), 0.0, 1.0)
    s = u**6 * (462 + u * (-1980 + u * (3465 + u * (-3080 + u * (1386 - 252 * u)))))
    return 1.0 - s


def _check_transverse(A_T: VectorField, tol: float = TRANSVERSE_TOL):
    res = transversality_residual(A_T)
    if res > tol:
        raise NonTransverseInput(
            f"divergence residual {res:.3e} exceeds {tol:g}; project the field first"
        )


@dataclass(frozen=True)
class ChargeEnsemble:
    """Point charges (q, position); must be net-neutral on the torus."""

    charges: tuple  # of (q, (x, y, z))

    def __post_init__(self):
        norm = tuple((float(q), tuple(float(c) for c in pos)) for q, pos in self.charges)
        object.__setattr__(self, "charges", norm)
        total = sum(q for q, _ in norm)
        scale = sum(abs(q) for q, _ in norm) or 1.0
        if abs(total) > 1e-12 * scale:
            raise NonNeutralSource(f"net charge {total:.3e} (must vanish on the torus)")

    def positions(self) -> np.ndarray:
        return np.array([pos for _, pos in self.charges])

    def values(self) -> np.ndarray:
        return np.array([q for q, _ in self.charges])

    def deposit_rho(self, grid: Grid) -> ScalarField:
        """Charge density via the quintic deposit (prefilter completes the adjoint)."""
        pts = self.positions()
        vals = (self.values() / grid.cell_volume)[:, None]
        raw = interp.scatter(vals, pts, grid.spacing, grid.n_points)[..., 0]
        return ScalarField(grid, interp.prefilter(raw))


class GaugeKernel:
    """Base interface; concrete kernels implement chi and the adjoint deposit."""

    name = "abstract"

    def chi(self, A_T: VectorField) -> ScalarField:
        raise NotImplementedError

    def chi_at(self, A_T: VectorField, points: np.ndarray) -> np.ndarray:
        """chi evaluated at arbitrary points (default: only lattice output)."""
        raise NotImplementedError

    def transverse_polarization(self, source, grid: Grid) -> VectorField:
        """P_T for a ScalarField or ChargeEnsemble source."""
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class CoulombKernel(GaugeKernel):
    """g_T = 0: chi vanishes and the polarization is purely longitudinal."""

    name = "coulomb"

    def chi(self, A_T: VectorField) -> ScalarField:
        _check_transverse(A_T)
        return ScalarField.zeros(A_T.grid)

    def chi_at(self, A_T: VectorField, points) -> np.ndarray:
        _check_transverse(A_T)
        return np.zeros(len(np.atleast_2d(points)))

    def transverse_polarization(self, source, grid: Grid) -> VectorField:
        return VectorField.zeros(grid)


class PoincareKernel(GaugeKernel):
    """Straight-line (multipolar) kernel about a reference origin.

    Parameters
    ----------
    origin : 3-vector
        Reference point x0 of the line construction.
    quadrature_order : int
        Gauss-Legendre node count M on the line parameter.
    window : (inner, outer)
        Radial taper of chi in fractions of L; fields and sources are
        expected inside the inner (flat) radius.
    """

    name = "poincare"

    def __init__(self, origin, quadrature_order: int = 32, window=(0.28, 0.49)):
        self.origin = np.asarray(origin, dtype=float)
        if self.origin.shape != (3,):
            raise ValueError("origin must be a 3-vector")
        if quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")
        self.quadrature_order = int(quadrature_order)
        self.window = (float(window[0]), float(window[1]))
        if not (0.0 < self.window[0] < self.window[1] <= 0.5):
            raise ValueError("window fractions must satisfy 0 < inner < outer <= 0.5")

    def describe(self) -> str:
        return f"poincare(origin={tuple(self.origin)}, M={self.quadrature_order})"

    # -- internals ---------------------------------------------------------

    def _window_values(self, grid: Grid, disp: np.ndarray) -> np.ndarray:
        ell = np.sqrt((disp**2).sum(axis=-1))
        return radial_window(ell, grid.box_length, *self.window)

    def _check_zero_mode(self, A_T: VectorField):
        mean = A_T.values.mean(axis=(0, 1, 2))
        scale = max(float(np.sqrt((A_T.values**2).mean())), 1e-300)
        if np.abs(mean).max() > 1e-10 * scale:
            raise PoincareZeroModePresent(
                f"box-average component {np.abs(mean).max():.3e} present; "
                "the line integral of a constant diverges with distance"
            )

    def _line_gather(self, A_T: VectorField, disp: np.ndarray) -> np.ndarray:
        """-sum_m w_m d . A_T(x0 + lam_m d) for displacement rows d."""
        grid = A_T.grid
        lam, w = gauss_legendre_01(self.quadrature_order)
        coeff = interp.prefilter(A_T.values)
        out = np.zeros(len(disp))
        for lm, wm in zip(lam, w):
            pts = (self.origin + lm * disp) % grid.box_length
            av = interp.gather(coeff, pts, grid.spacing, grid.n_points)
            out -= wm * np.einsum("ij,ij->i", disp, av)
        return out

    # -- public surface ------------------------------------------------------

    def chi(self, A_T: VectorField) -> ScalarField:
        _check_transverse(A_T)
        self._check_zero_mode(A_T)
        grid = A_T.grid
        disp = grid.min_image(grid.coords() - self.origin)
        raw = self._line_gather(A_T, disp.reshape(-1, 3)).reshape(A_T.values.shape[:3])
        return ScalarField(grid, raw * self._window_values(grid, disp))

    def chi_at(self, A_T: VectorField, points) -> np.ndarray:
        _check_transverse(A_T)
        self._check_zero_mode(A_T)
        grid = A_T.grid
        pts = np.atleast_2d(np.asarray(points, float))
        disp = grid.min_image(pts - self.origin)
        return self._line_gather(A_T, disp) * self._window_values(grid, disp)

    def transverse_polarization(self, source, grid: Grid) -> VectorField:
        """Transverse part of the straight-line dipole deposit.

        Exact adjoint of chi: same nodes, same weights, prefilter on the
        way out, window folded into the source values.
        """
        lam, w = gauss_legendre_01(self.quadrature_order)
        if isinstance(source, ChargeEnsemble):
            disp = grid.min_image(source.positions() - self.origin)
            weights = source.values() / grid.cell_volume
        else:
            disp = grid.min_image(grid.coords() - self.origin).reshape(-1, 3)
            weights = source.values.reshape(-1)
            nz = weights != 0.0
            disp, weights = disp[nz], weights[nz]
        weights = weights * self._window_values(grid, disp)
        acc = np.zeros((grid.n_points,) * 3 + (3,))
        for lm, wm in zip(lam, w):
            pts = (self.origin + lm * disp) % grid.box_length
            acc += interp.scatter((wm * weights)[:, None] * disp, pts,
                                  grid.spacing, grid.n_points)
        deposit = VectorField(grid, interp.prefilter(acc))
        return transverse_part(deposit)

    def direct_polarization(self, grid: Grid, charge_fn, r_cut: float,
                            order: int | None = None) -> VectorField:
        """Full kernel field by outward radial quadrature of an analytic source.

        P(x) = d_hat |d|^-2  int_{|d|}^{r_cut} r^2 charge_fn(x0 + r d_hat) dr

        This realizes the kernel integral directly (no spectral shortcut
        for the longitudinal part), so -div(P) - rho measures the
        quadrature's convergence toward the defining property. The
        source must be neutral and supported inside r_cut.
        """
        order = self.quadrature_order if order is None else int(order)
        xi, w = gauss_legendre_01(order)
        disp = grid.min_image(grid.coords() - self.origin).reshape(-1, 3)
        ell = np.linalg.norm(disp, axis=1)
        safe = np.where(ell == 0.0, 1.0, ell)
        dhat = disp / safe[:, None]
        a = np.minimum(ell, r_cut)
        integral = np.zeros_like(ell)
        for xm, wm in zip(xi, w):
            r = a + (r_cut - a) * xm
            integral += wm * (r_cut - a) * r**2 * charge_fn(self.origin + r[:, None] * dhat)
        vals = dhat * (integral / safe**2)[:, None]
        vals[ell == 0.0] = 0.0
        return VectorField(grid, vals.reshape((grid.n_points,) * 3 + (3,)))


class CustomKernel(GaugeKernel):
    """User-supplied (chi map, adjoint transverse-polarization map) pair.

    The two maps must be mutual adjoints; `validate_adjoint` checks that
    on a seeded random transverse field and is run by kernels-check
    before a custom kernel is accepted.
    """

    def __init__(self, name: str, chi_map, polarization_map):
        self.name = name
        self._chi = chi_map
        self._pol = polarization_map

    def describe(self) -> str:
        return f"custom:{self.name}"

    def chi(self, A_T: VectorField) -> ScalarField:
        _check_transverse(A_T)
        return self._chi(A_T)

    def transverse_polarization(self, source, grid: Grid) -> VectorField:
        if isinstance(source, ChargeEnsemble):
            source = source.deposit_rho(grid)
        return self._pol(source)


# ---------------------------------------------------------------------------
# kernel-level operations
# ---------------------------------------------------------------------------

def chi_functional(kernel: GaugeKernel, A_T: VectorField) -> ScalarField:
    """The scalar functional whose gradient dresses A_T into gauge g."""
    return kernel.chi(A_T)


def polarization(kernel: GaugeKernel, source, grid: Grid | None = None) -> VectorField:
    """Polarization field with -div P = rho.

    The longitudinal part is fixed spectrally (grad of the Coulomb
    potential of rho); the transverse part comes from the kernel.
    source may be a ScalarField or a ChargeEnsemble (grid required).
    """
    if isinstance(source, ChargeEnsemble):
        if grid is None:
            raise ValueError("grid is required for a ChargeEnsemble source")
        rho = source.deposit_rho(grid)
    else:
        rho = source
        grid = rho.grid
    p_long = grad(solve_poisson(rho))
    p_trans = kernel.transverse_polarization(source, grid)
    return p_long + p_trans


def assemble_vector_potential(A_T: VectorField, kernel: GaugeKernel) -> VectorField:
    """A = A_T + grad(chi_g[A_T]); curl A equals curl A_T for every kernel."""
    return A_T + grad(kernel.chi(A_T))


def residual_gauge_shift(A: VectorField, beta: ScalarField) -> VectorField:
    """The residual symmetry on field level: A -> A + grad(beta)."""
    return A + grad(beta)


def validate_adjoint(kernel: GaugeKernel, grid: Grid, seed: int = 0,
                     tol: float = 1e-8) -> float:
    """Check <P_T, A_T> = -<rho, chi> on seeded random data; returns the residual.

    Raises ValueError when the kernel pair fails the identity.
    """
    from .lattice import inner  # local import to keep module init light

    rng = np.random.default_rng(seed)
    n = grid.n_points
    raw = rng.standard_normal((n, n, n, 3))
    field = VectorField(grid, raw)
    # band-limit and project so preconditions hold exactly
    A_T = transverse_part(band_limit(field, 0.5))
    A_T = A_T - VectorField(grid, np.broadcast_to(
        A_T.values.mean(axis=(0, 1, 2)), A_T.values.shape).copy())
    rho_raw = rng.standard_normal((n, n, n))
    rho_raw -= rho_raw.mean()
    # localize the source in the window-flat region
    disp = grid.min_image(grid.coords() - grid.box_length / 2)
    ell2 = (disp**2).sum(axis=-1)
    rho_raw *= np.exp(-ell2 / (2 * (0.1 * grid.box_length) ** 2))
    rho_raw -= rho_raw.mean()
    rho = band_limit(ScalarField(grid, rho_raw), 0.5)
    lhs = inner(kernel.transverse_polarization(rho, grid), A_T)
    rhs = -inner(rho, kernel.chi(A_T))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    residual = abs(lhs - rhs) / scale
    if residual > tol:
        raise ValueError(
            f"kernel {kernel.describe()} fails the adjoint identity: "
            f"residual {residual:.3e} > {tol:g}"
        )
    return residual


# ---------------------------------------------------------------------------
# named custom kernels (CLI "custom:<name>")
# ---------------------------------------------------------------------------

def _half_poincare(origin, quadrature_order=32) -> CustomKernel:
    base = PoincareKernel(origin, quadrature_order)
    return CustomKernel(
        "half-poincare",
        lambda A_T: 0.5 * base.chi(A_T),
        lambda rho: 0.5 * base.transverse_polarization(rho, rho.grid),
    )


CUSTOM_KERNELS = {"half-poincare": _half_poincare}


def make_kernel(spec: str, origin=None, quadrature_order: int = 32) -> GaugeKernel:
    """Build a kernel from its config spelling: coulomb | poincare | custom:<name>."""
    if spec == "coulomb":
        return CoulombKernel()
    if spec == "poincare":
        if origin is None:
            raise ValueError("poincare kernel requires an origin")
        return PoincareKernel(origin, quadrature_order)
    if spec.startswith("custom:"):
        name = spec.split(":", 1)[1]
        try:
            factory = CUSTOM_KERNELS[name]
        except KeyError:
            raise ValueError(f"unknown custom kernel {name!r}") from None
        if origin is None:
            raise ValueError("custom kernels here require an origin")
        return factory(origin, quadrature_order)
    raise ValueError(f"unknown kernel spec {spec!r}")
