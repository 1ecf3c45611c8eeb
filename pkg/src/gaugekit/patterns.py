"""Analytic field patterns used by the CLI scenarios and the test suites.

Everything here is periodized by a 3^3 image sum where needed and comes
with controlled spectral content, so preconditions (transversality,
neutrality, band limits) hold to rounding rather than approximately.
"""

from __future__ import annotations

import numpy as np

from .lattice import Grid, ScalarField, VectorField, band_limit, transverse_part


def _images(box_length: float):
    for img in np.ndindex(3, 3, 3):
        yield (np.asarray(img) - 1) * box_length


def streamfunction_transverse(grid: Grid, center, sigma: float,
                              offset, second_scale: float = 0.8) -> VectorField:
    """Localized, analytically transverse vector field.

    Curl of two Gaussian streamfunctions on different axes, displaced by
    +/- offset from the center so the field has nonzero radial component
    along rays from the center (a centered single blob would be purely
    azimuthal). Periodized; sampled values are divergence-free to
    rounding for sigma a few cells or more.
    """
    center = np.asarray(center, float)
    offset = np.asarray(offset, float)
    pts = grid.coords()
    out = np.zeros(pts.shape)
    s2 = second_scale * sigma
    for shift in _images(grid.box_length):
        d = pts - (center + offset) - shift
        psi = np.exp(-(d**2).sum(-1) / (2 * sigma**2))
        out[..., 0] += -d[..., 1] / sigma**2 * psi
        out[..., 1] += d[..., 0] / sigma**2 * psi
        d2 = pts - (center - offset) - shift
        psi2 = 0.8 * np.exp(-(d2**2).sum(-1) / (2 * s2**2))
        out[..., 1] += -d2[..., 2] / s2**2 * psi2
        out[..., 2] += d2[..., 1] / s2**2 * psi2
    return VectorField(grid, out)


def gaussian_dipole_rho(grid: Grid, center, separation, sigma: float,
                        charge: float = 1.0) -> ScalarField:
    """Net-neutral pair of periodized Gaussian charges straddling center."""
    center = np.asarray(center, float)
    half = 0.5 * np.asarray(separation, float)
    pts = grid.coords()
    norm = (2 * np.pi * sigma**2) ** 1.5
    out = np.zeros(pts.shape[:-1])
    for shift in _images(grid.box_length):
        rp = ((pts - (center + half) - shift) ** 2).sum(-1)
        rm = ((pts - (center - half) - shift) ** 2).sum(-1)
        out += np.exp(-rp / (2 * sigma**2)) - np.exp(-rm / (2 * sigma**2))
    return ScalarField(grid, charge * out / norm)


def neutral_shell_fn(center, sigma_in: float, sigma_out: float):
    """Analytic neutral charge profile, radially layered about center.

    Difference of two unit-charge Gaussians: positive core, negative
    halo, zero total. Free-space form (no images); evaluate only where
    images are negligible. Radial layering about the kernel origin
    keeps the multipolar polarization smooth there, so quadrature error
    is not buried under lattice-representation error.
    """
    center = np.asarray(center, float)

    def rho(pts):
        r2 = ((np.asarray(pts) - center) ** 2).sum(axis=-1)
        return (
            np.exp(-r2 / (2 * sigma_in**2)) / (2 * np.pi * sigma_in**2) ** 1.5
            - np.exp(-r2 / (2 * sigma_out**2)) / (2 * np.pi * sigma_out**2) ** 1.5
        )

    return rho


def plane_wave_state(grid: Grid, mode, polarization, amplitude: float):
    """Traveling transverse plane wave (E, B) for integer mode numbers.

    E = amp eps cos(k.x), B = amp (k_hat x eps) cos(k.x); eps is
    orthogonalized against k. Exact free-field pair at t = 0.
    """
    mode = np.asarray(mode, int)
    if not mode.any():
        raise ValueError("mode numbers must not all vanish")
    k = 2 * np.pi * mode / grid.box_length
    khat = k / np.linalg.norm(k)
    eps = np.asarray(polarization, float)
    eps = eps - khat * (eps @ khat)
    norm = np.linalg.norm(eps)
    if norm < 1e-12:
        raise ValueError("polarization parallel to the wavevector")
    eps /= norm
    phase = grid.coords() @ k
    c = amplitude * np.cos(phase)
    E = VectorField(grid, c[..., None] * eps)
    B = VectorField(grid, c[..., None] * np.cross(khat, eps))
    return E, B


def random_band_limited(grid: Grid, rng, fraction: float = 0.5) -> VectorField:
    raw = VectorField(grid, rng.standard_normal((grid.n_points,) * 3 + (3,)))
    return band_limit(raw, fraction)


def random_transverse(grid: Grid, rng, fraction: float = 0.5) -> VectorField:
    """Band-limited, divergence-free, zero-mean random field."""
    F = transverse_part(random_band_limited(grid, rng, fraction))
    vals = F.values - F.values.mean(axis=(0, 1, 2))
    return VectorField(grid, vals)


def random_scalar(grid: Grid, rng, fraction: float = 0.5,
                  zero_mean: bool = True) -> ScalarField:
    raw = rng.standard_normal((grid.n_points,) * 3)
    if zero_mean:
        raw -= raw.mean()
    return band_limit(ScalarField(grid, raw), fraction)
