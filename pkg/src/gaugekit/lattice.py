"""Periodic cubic lattice with exact spectral differential operators.

Fields live on an N^3 lattice spanning a cube of side L (spacing h = L/N)
with periodic boundaries. Spatial derivatives are evaluated in Fourier
space (multiplication by ik), which makes the vector-calculus identities

    div(curl F) = 0,   curl(grad f) = 0,   F = F_T + F_L

hold to rounding rather than to a truncation order, and makes the
Helmholtz (transverse/longitudinal) projectors exactly idempotent.

Conventions
-----------
* Natural Heaviside-Lorentz units, c = 1.
* Real fields; spectral data is stored on the half-complex rfft grid.
* The Nyquist wavenumber is zeroed in all derivative operators (standard
  practice for real fields on even grids: the odd derivative of the
  Nyquist mode has no consistent sign). The same zeroed wavenumbers are
  used in the projectors and Poisson inverses so that all operators
  commute exactly.
* The k = 0 mode is assigned to the transverse part of a vector field; a
  constant field is both curl- and divergence-free and the longitudinal
  inverse 1/|k|^2 does not exist there.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as _sfft

from .errors import NonNeutralSource

_fft_workers = 1
_fft_lock = threading.Lock()


def set_fft_workers(n: int) -> None:
    """Set the worker count passed to the FFT backend (>= 1)."""
    global _fft_workers
    with _fft_lock:
        _fft_workers = max(1, int(n))


def _rfftn(a):
    return _sfft.rfftn(a, axes=(0, 1, 2), workers=_fft_workers)


def _irfftn(a, n):
    return _sfft.irfftn(a, s=(n, n, n), axes=(0, 1, 2), workers=_fft_workers)


@dataclass(frozen=True)
class Grid:
    """Periodic cubic lattice descriptor.

    Parameters
    ----------
    n_points : int
        Sites per axis N. Must be even and >= 4 so the Nyquist plane is
        unambiguous.
    box_length : float
        Physical side length L > 0.
    """

    n_points: int
    box_length: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 4 or n % 2 != 0:
            raise ValueError(f"n_points must be an even integer >= 4, got {n!r}")
        if not (self.box_length > 0):
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    def axis(self) -> np.ndarray:
        """Site coordinates along one axis, shape (N,)."""
        return np.arange(self.n_points) * self.spacing

    def coords(self) -> np.ndarray:
        """Site coordinates, shape (N, N, N, 3). Cached per grid."""
        return _tools(self).coords

    def min_image(self, displacement) -> np.ndarray:
        """Wrap displacement vectors into [-L/2, L/2)."""
        L = self.box_length
        return (np.asarray(displacement) + L / 2) % L - L / 2

    def site_index(self, point) -> tuple[int, int, int]:
        """Index of the lattice site nearest to a point (periodic)."""
        idx = np.rint(np.asarray(point, float) / self.spacing).astype(int) % self.n_points
        return tuple(int(i) for i in idx)


class _SpectralTools:
    """Wavenumber arrays and masks shared by all operators on one grid."""

    def __init__(self, grid: Grid):
        n, h = grid.n_points, grid.spacing
        k_full = 2 * np.pi * np.fft.fftfreq(n, h)
        k_full[n // 2] = 0.0  # Nyquist zeroed; see module docstring
        k_half = 2 * np.pi * np.fft.rfftfreq(n, h)
        k_half[-1] = 0.0
        self.kx = k_full[:, None, None]
        self.ky = k_full[None, :, None]
        self.kz = k_half[None, None, :]
        self.k2 = self.kx**2 + self.ky**2 + self.kz**2
        self.k2_safe = np.where(self.k2 == 0.0, 1.0, self.k2)
        self.zero_k = self.k2 == 0.0
        # Parseval weight: rfft stores only kz >= 0; interior planes count twice.
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.parseval_w = w[None, None, :]
        ax = grid.axis()
        self.coords = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)
        self.norm = grid.cell_volume / n**3


@lru_cache(maxsize=32)
def _tools(grid: Grid) -> _SpectralTools:
    return _SpectralTools(grid)


class _Field:
    """Real-space samples plus a lazily cached spectral representation.

    Instances are immutable: the value array is marked read-only, so the
    cached rfft can never go stale.
    """

    _ncomp = None  # set by subclasses

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        n = grid.n_points
        expect = (n, n, n) if self._ncomp == 1 else (n, n, n, self._ncomp)
        if values.shape != expect:
            raise ValueError(f"expected shape {expect}, got {values.shape}")
        values = values.copy() if values.flags.writeable else values
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self._hat = None

    @property
    def hat(self) -> np.ndarray:
        """Half-complex spectral coefficients (scipy rfftn convention)."""
        if self._hat is None:
            self._hat = _rfftn(self.values)
            self._hat.flags.writeable = False
        return self._hat

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other):
        self._check_mate(other)
        return type(self)(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check_mate(other)
        return type(self)(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return type(self)(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(self.grid, -self.values)

    def _check_mate(self, other):
        if not isinstance(other, type(self)) or other.grid != self.grid:
            raise TypeError("operands must be fields of the same kind on the same grid")


class ScalarField(_Field):
    """Real scalar samples on a Grid."""

    _ncomp = 1

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n_points,) * 3))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Sample fn(points) where points has shape (N, N, N, 3)."""
        return cls(grid, np.asarray(fn(grid.coords()), dtype=np.float64))

    @classmethod
    def from_hat(cls, grid: Grid, hat: np.ndarray) -> "ScalarField":
        return cls(grid, _irfftn(hat, grid.n_points))

    def mean(self) -> float:
        return float(self.values.mean())


class VectorField(_Field):
    """Real 3-vector samples on a Grid (component axis last)."""

    _ncomp = 3

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.n_points,) * 3 + (3,)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField":
        return cls(grid, np.asarray(fn(grid.coords()), dtype=np.float64))

    @classmethod
    def from_hat(cls, grid: Grid, hat: np.ndarray) -> "VectorField":
        return cls(grid, _irfftn(hat, grid.n_points))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., i])

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt((self.values**2).sum(axis=-1)))


# ---------------------------------------------------------------------------
# spectral differential operators
# ---------------------------------------------------------------------------

def grad(f: ScalarField) -> VectorField:
    """Spectral gradient; exact for band-limited fields."""
    t = _tools(f.grid)
    fh = f.hat
    gh = np.stack([1j * t.kx * fh, 1j * t.ky * fh, 1j * t.kz * fh], axis=-1)
    return VectorField.from_hat(f.grid, gh)


def div(F: VectorField) -> ScalarField:
    """Spectral divergence."""
    t = _tools(F.grid)
    Fh = F.hat
    dh = 1j * (t.kx * Fh[..., 0] + t.ky * Fh[..., 1] + t.kz * Fh[..., 2])
    return ScalarField.from_hat(F.grid, dh)


def _curl_hat(t: _SpectralTools, Fh: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            1j * (t.ky * Fh[..., 2] - t.kz * Fh[..., 1]),
            1j * (t.kz * Fh[..., 0] - t.kx * Fh[..., 2]),
            1j * (t.kx * Fh[..., 1] - t.ky * Fh[..., 0]),
        ],
        axis=-1,
    )


def curl(F: VectorField) -> VectorField:
    """Spectral curl."""
    return VectorField.from_hat(F.grid, _curl_hat(_tools(F.grid), F.hat))


def laplacian(f: ScalarField) -> ScalarField:
    t = _tools(f.grid)
    return ScalarField.from_hat(f.grid, -t.k2 * f.hat)


def solve_poisson(rho: ScalarField, neutrality_tol: float = 1e-10) -> ScalarField:
    """Solve -lap(V) = rho on the torus; the k = 0 mode of V is set to zero.

    Raises
    ------
    NonNeutralSource
        If the box average of rho is not negligible against its rms.
    """
    t = _tools(rho.grid)
    scale = max(float(np.sqrt((rho.values**2).mean())), 1e-300)
    if abs(rho.values.mean()) > neutrality_tol * scale:
        raise NonNeutralSource(
            f"mean(rho) = {rho.values.mean():.3e} exceeds {neutrality_tol:g} x rms"
        )
    vh = rho.hat / t.k2_safe
    vh[t.zero_k] = 0.0
    return ScalarField.from_hat(rho.grid, vh)


# ---------------------------------------------------------------------------
# Helmholtz decomposition
# ---------------------------------------------------------------------------

def longitudinal_part(F: VectorField) -> VectorField:
    """Curl-free part k (k.F)/|k|^2; the k = 0 mode goes to the transverse part."""
    t = _tools(F.grid)
    Fh = F.hat
    kdotF = (t.kx * Fh[..., 0] + t.ky * Fh[..., 1] + t.kz * Fh[..., 2]) / t.k2_safe
    kdotF[t.zero_k] = 0.0
    lh = np.stack([t.kx * kdotF, t.ky * kdotF, t.kz * kdotF], axis=-1)
    return VectorField.from_hat(F.grid, lh)


def transverse_part(F: VectorField) -> VectorField:
    return F - longitudinal_part(F)


def helmholtz_decompose(F: VectorField) -> tuple[VectorField, VectorField]:
    """Split F into (F_T, F_L) with F = F_T + F_L exact in real space."""
    F_L = longitudinal_part(F)
    return F - F_L, F_L


def transversality_residual(F: VectorField) -> float:
    """|div F|_2 relative to the rms gradient scale |k F|_2."""
    t = _tools(F.grid)
    Fh = F.hat
    d = t.kx * Fh[..., 0] + t.ky * Fh[..., 1] + t.kz * Fh[..., 2]
    num = np.sum(t.parseval_w * np.abs(d) ** 2)
    den = np.sum(t.parseval_w * t.k2 * (np.abs(Fh) ** 2).sum(axis=-1))
    if den == 0.0:
        return 0.0
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------------------
# integrals and norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    """Spherical region with sharp (site-membership) boundary."""

    center: tuple
    radius: float

    def mask(self, grid: Grid) -> np.ndarray:
        d = grid.min_image(grid.coords() - np.asarray(self.center, float))
        return (d**2).sum(axis=-1) <= self.radius**2


def volume_integral(f: ScalarField) -> float:
    """h^3 sum of samples over the box."""
    return float(f.values.sum() * f.grid.cell_volume)


def region_integral(f: ScalarField, region: Ball) -> float:
    """h^3 sum over sites inside the ball; no partial-cell weighting."""
    return float(f.values[region.mask(f.grid)].sum() * f.grid.cell_volume)


def inner(F, G) -> float:
    """L2 inner product h^3 sum F.G (scalar or vector fields)."""
    if F.grid != G.grid:
        raise ValueError("fields live on different grids")
    return float((F.values * G.values).sum() * F.grid.cell_volume)


def l2_norm(F) -> float:
    return float(np.sqrt((F.values**2).sum() * F.grid.cell_volume))


def spectral_power(f) -> float:
    """Integral of f^2 computed from the spectral side (Parseval)."""
    t = _tools(f.grid)
    p = np.abs(f.hat) ** 2
    if p.ndim == 4:
        p = p.sum(axis=-1)
    return float(np.sum(t.parseval_w * p) * t.norm)


def band_limit(field, fraction: float):
    """Zero every mode with any true |k_i| above fraction x Nyquist.

    Masking uses the unzeroed wavenumbers, so for fraction < 1 the
    Nyquist planes (invisible to the derivative operators) are removed
    along with everything above the cut.
    """
    grid = field.grid
    n, h = grid.n_points, grid.spacing
    k_full = 2 * np.pi * np.fft.fftfreq(n, h)
    k_half = 2 * np.pi * np.fft.rfftfreq(n, h)
    kmax = fraction * np.pi / h
    mask = (
        (np.abs(k_full[:, None, None]) <= kmax)
        & (np.abs(k_full[None, :, None]) <= kmax)
        & (np.abs(k_half[None, None, :]) <= kmax)
    )
    hat = field.hat * (mask if field.values.ndim == 3 else mask[..., None])
    return type(field).from_hat(grid, hat)
