"""Prescribed matter sources built from a time-dependent polarization ansatz.

Each source is a Gaussian blob carrying an oscillating dipole moment,

    P_src(x, t) = sum_b p_b(t) G_b(x),
    p_b(t) = p0 * sin(w0 (t - t_on)) * s((t - t_on)/tau)   for t >= t_on,

with s the C2 smoothstep 6u^5 - 15u^4 + 10u^3 (clamped to 1 past the
ramp) and G_b a normalized periodic Gaussian. Charge and current follow
as rho = -div P_src and j = dP_src/dt, so the continuity equation holds
identically: rho is produced with the same lattice divergence the
Maxwell stepper uses, and j is the analytic time derivative of the same
sampled profile. Sources vanish identically before t_on, which is what
makes front-arrival experiments sharp in time.

An optional hard cutoff radius truncates the spatial profile. Far tails
of a plain Gaussian re-enter causality tests at the 1e-4..1e-3 level;
a cutoff of several sigma pushes that leakage below any tolerance used
here while leaving continuity exact (continuity is a property of the
construction, not of the profile shape).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid, ScalarField, VectorField, div


def smoothstep(u):
    """C2 ramp: 0 below 0, 6u^5 - 15u^4 + 10u^3 on [0,1], 1 above."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def smoothstep_d1(u):
    u = np.asarray(u, float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.where(inside, u, 0.0)
    return np.where(inside, 30.0 * uu * uu * (uu - 1.0) ** 2, 0.0)


def smoothstep_d2(u):
    u = np.asarray(u, float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.where(inside, u, 0.0)
    return np.where(inside, 60.0 * uu * (2.0 * uu - 1.0) * (uu - 1.0), 0.0)


@dataclass(frozen=True)
class SourceBlob:
    """One Gaussian dipole source.

    amplitude is the peak dipole moment vector p0; omega0 the carrier
    frequency; ramp the smoothstep duration tau; t_on the switch-on
    time. cutoff (optional) truncates the profile at that radius.
    """

    center: tuple
    sigma: float
    amplitude: tuple
    omega0: float
    ramp: float
    t_on: float = 0.0
    cutoff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))
        if self.sigma <= 0 or self.ramp <= 0:
            raise ValueError("sigma and ramp must be positive")

    # -- time dependence -------------------------------------------------

    def moment(self, t):
        """Dipole moment p(t); t scalar or array, returns (...,3)."""
        f, _, _ = self.moment_derivatives(t)
        return f

    def moment_derivatives(self, t):
        """(p, dp/dt, d2p/dt2) evaluated analytically; each (...,3).

        omega0 = 0 drops the carrier: the moment ramps to the constant
        amplitude (the static limit of the family).
        """
        t = np.asarray(t, float)
        dt = t - self.t_on
        on = dt > 0.0
        w = self.omega0
        u = dt / self.ramp
        s = smoothstep(u)
        s1 = smoothstep_d1(u) / self.ramp
        s2 = smoothstep_d2(u) / self.ramp**2
        if w == 0.0:
            f0 = np.where(on, s, 0.0)
            f1 = np.where(on, s1, 0.0)
            f2 = np.where(on, s2, 0.0)
        else:
            sin = np.sin(w * dt)
            cos = np.cos(w * dt)
            f0 = np.where(on, sin * s, 0.0)
            f1 = np.where(on, w * cos * s + sin * s1, 0.0)
            f2 = np.where(on, -w * w * sin * s + 2.0 * w * cos * s1 + sin * s2, 0.0)
        p0 = np.asarray(self.amplitude)
        return f0[..., None] * p0, f1[..., None] * p0, f2[..., None] * p0

    # -- space dependence -------------------------------------------------

    def profile_at(self, pts: np.ndarray, box_length: float | None = None) -> np.ndarray:
        """Normalized Gaussian profile at arbitrary points.

        With box_length, sums the 3^3 periodic images (exact periodicity
        to machine precision for sigma < L/8); without it, the free-space
        profile used by retarded-integral oracles.
        """
        c = np.asarray(self.center)
        norm = (2.0 * np.pi * self.sigma**2) ** 1.5
        if box_length is None:
            r2 = ((pts - c) ** 2).sum(axis=-1)
            out = np.exp(-r2 / (2.0 * self.sigma**2)) / norm
        else:
            out = np.zeros(pts.shape[:-1])
            for img in np.ndindex(3, 3, 3):
                shift = (np.asarray(img) - 1) * box_length
                r2 = ((pts - c - shift) ** 2).sum(axis=-1)
                out += np.exp(-r2 / (2.0 * self.sigma**2))
            out /= norm
        if self.cutoff is not None:
            if box_length is None:
                d2 = ((pts - c) ** 2).sum(axis=-1)
            else:
                d = (pts - c + box_length / 2) % box_length - box_length / 2
                d2 = (d**2).sum(axis=-1)
            out = np.where(d2 <= self.cutoff**2, out, 0.0)
        return out


class SourceModel:
    """A set of blobs bound to a grid, with cached spatial profiles."""

    def __init__(self, grid: Grid, blobs):
        self.grid = grid
        self.blobs = tuple(blobs)
        pts = grid.coords()
        self._profiles = [
            b.profile_at(pts, box_length=grid.box_length) for b in self.blobs
        ]
        self._profile_hats = None

    @property
    def profiles(self):
        """Lattice samples of each blob's Gaussian, list of (N,N,N)."""
        return self._profiles

    @property
    def profile_hats(self):
        if self._profile_hats is None:
            self._profile_hats = [
                ScalarField(self.grid, p).hat for p in self._profiles
            ]
        return self._profile_hats

    def first_turn_on(self) -> float:
        return min(b.t_on for b in self.blobs) if self.blobs else np.inf

    def polarization_at(self, t: float) -> VectorField:
        """P_src(., t) sampled on the lattice."""
        acc = np.zeros((self.grid.n_points,) * 3 + (3,))
        for blob, prof in zip(self.blobs, self._profiles):
            p = blob.moment(t)
            if np.any(p):
                acc += prof[..., None] * p
        return VectorField(self.grid, acc)

    def rho_at(self, t: float) -> ScalarField:
        """Charge density -div P_src with the lattice's spectral divergence."""
        return -1.0 * div(self.polarization_at(t))

    def j_at(self, t: float) -> VectorField:
        """Current density dP_src/dt, time derivative taken analytically."""
        acc = np.zeros((self.grid.n_points,) * 3 + (3,))
        for blob, prof in zip(self.blobs, self._profiles):
            _, pdot, _ = blob.moment_derivatives(t)
            if np.any(pdot):
                acc += prof[..., None] * pdot
        return VectorField(self.grid, acc)

    def rho_dot_at(self, t: float) -> ScalarField:
        """Analytic time derivative of rho (equals -div j by construction)."""
        return -1.0 * div(self.j_at(t))

    def mean_current(self, t0: float, t1: float):
        """Exact step-averaged dipole velocity (p(t1) - p(t0))/(t1 - t0) per blob.

        Feeding the stepper this average instead of a midpoint sample
        makes the discrete continuity equation hold to rounding, which
        is what keeps the Gauss residual at the 1e-13 level over long
        runs; it agrees with the midpoint value to O(dt^2).
        """
        return [
            (b.moment(t1) - b.moment(t0)) / (t1 - t0) for b in self.blobs
        ]
