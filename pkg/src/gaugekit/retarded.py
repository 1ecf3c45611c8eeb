"""Free-space retarded-integral fields, the brute-force oracle.

The driven wave equations for the physical fields,

    box E = -(grad rho + dj/dt),      box B = curl j,

have retarded solutions: each field at (x, t) is the source term
integrated over the backward light cone,

    E(x,t) = -1/(4 pi) int d3x'  (grad rho + dj/dt)(x', t - |x - x'|) / |x - x'|
    B(x,t) = +1/(4 pi) int d3x'  (curl j)(x', t - |x - x'|) / |x - x'|

with the homogeneous part fixed to zero (fields at rest before the
sources switch on, matching `init_state`). The quadrature walks the
lattice sites inside a truncation ball around each blob and evaluates
the source derivatives in closed form from the Gaussian ansatz, both in
space and in time, at each site's own retarded time. No FFT, no shared
discretization with the evolver: algorithmic independence is the point.

Cells within a few spacings of an evaluation point are integrated on a
6^3 subgrid (integrand over 1/r averaged together), which keeps the
integrable singularity harmless and makes points inside the source
support legitimate.

Causality is structural here: a site contributes only when its retarded
time is past the blob's switch-on, so output at (x, t) depends on
source samples with |x - x'| <= t - t_on and on nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WrapAroundWindowExceeded
from .sources import SourceModel

TRUNCATION_SIGMAS = 5.0
_NEAR_CELLS = 2.5  # subcell-integrate sites closer than this many spacings


@dataclass(frozen=True)
class RetardedQuery:
    """Evaluation request: model, free-space points, one time.

    Valid while no periodic image can have reached any point:
    t < L - max over (blob, point) of (|x_p - c_b| + truncation).
    """

    model: SourceModel
    points: tuple
    t: float
    truncation_sigmas: float = TRUNCATION_SIGMAS

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        object.__setattr__(self, "points", tuple(map(tuple, pts)))
        limit = self.window_limit()
        if self.t >= limit:
            raise WrapAroundWindowExceeded(
                f"t = {self.t:g} >= wrap window {limit:g}"
            )

    def window_limit(self) -> float:
        grid = self.model.grid
        pts = np.asarray(self.points)
        worst = 0.0
        for blob in self.model.blobs:
            trunc = self._trunc_radius(blob)
            d = np.linalg.norm(
                grid.min_image(pts - np.asarray(blob.center)), axis=1
            )
            worst = max(worst, float(d.max()) + trunc)
        return grid.box_length - worst

    def _trunc_radius(self, blob) -> float:
        r = self.truncation_sigmas * blob.sigma
        if blob.cutoff is not None:
            r = min(r, blob.cutoff)
        return r


def _site_ball(grid, center, radius):
    """Lattice sites within radius of center, unwrapped to free space."""
    rvec = grid.min_image(grid.coords() - np.asarray(center)).reshape(-1, 3)
    keep = (rvec**2).sum(axis=1) <= radius**2
    return rvec[keep]


def _subcell_offsets():
    q = (np.arange(6) + 0.5) / 6.0 - 0.5
    return np.stack(np.meshgrid(q, q, q, indexing="ij"), axis=-1).reshape(-1, 3)


_SUBCELL = _subcell_offsets()


def _blob_integrand(blob, want_E):
    """Source term of the wave equation as a function of (offsets, times).

    offsets are positions relative to the blob center; returns (..., 3).
    For E: -(grad rho + dj/dt); for B: curl j. All closed-form.
    """
    sig2 = blob.sigma**2
    norm = (2.0 * np.pi * sig2) ** 1.5

    def term(rvec, t_ret):
        gauss = np.exp(-(rvec**2).sum(axis=-1) / (2 * sig2)) / norm
        p, pdot, pddot = blob.moment_derivatives(t_ret)
        if want_E:
            rp = (rvec * p).sum(axis=-1)
            grad_rho = -gauss[..., None] * (
                rvec * rp[..., None] / sig2**2 - p / sig2
            )
            return -(grad_rho + gauss[..., None] * pddot)
        return gauss[..., None] * np.cross(pdot, rvec) / sig2

    return term


def _accumulate(query: RetardedQuery, want_E: bool, diagnostics: dict | None):
    model = query.model
    grid = model.grid
    h = grid.spacing
    pts = np.asarray(query.points)
    out = np.zeros((len(pts), 3))
    for blob in model.blobs:
        rvec = _site_ball(grid, blob.center, query._trunc_radius(blob))
        src = np.asarray(blob.center) + rvec
        term = _blob_integrand(blob, want_E)
        for ip, x in enumerate(pts):
            dist = np.linalg.norm(x - src, axis=1)
            far = dist > _NEAR_CELLS * h
            t_far = query.t - dist[far]
            contrib = (term(rvec[far], t_far) / dist[far][:, None]).sum(axis=0)
            near = np.nonzero(~far)[0]
            if near.size:
                # integrate the whole integrand over each near cell
                sub = src[near][:, None, :] + h * _SUBCELL[None, :, :]
                r_sub = np.linalg.norm(x - sub, axis=-1)
                f = term(sub - np.asarray(blob.center), query.t - r_sub)
                contrib = contrib + (f / r_sub[..., None]).mean(axis=1).sum(axis=0)
            out[ip] += grid.cell_volume / (4 * np.pi) * contrib
            if diagnostics is not None:
                p_all, _, _ = blob.moment_derivatives(query.t - dist)
                live = np.abs(p_all).sum(axis=1) > 0.0
                if live.any():
                    diagnostics["max_source_distance"] = max(
                        diagnostics.get("max_source_distance", 0.0),
                        float(dist[live].max()),
                    )
                diagnostics["contributing_sites"] = (
                    diagnostics.get("contributing_sites", 0) + int(live.sum())
                )
    return out


def retarded_E(query: RetardedQuery, diagnostics: dict | None = None) -> np.ndarray:
    """Retarded electric field at the query points, shape (P, 3)."""
    return _accumulate(query, want_E=True, diagnostics=diagnostics)


def retarded_B(query: RetardedQuery, diagnostics: dict | None = None) -> np.ndarray:
    """Retarded magnetic field at the query points, shape (P, 3)."""
    return _accumulate(query, want_E=False, diagnostics=diagnostics)
