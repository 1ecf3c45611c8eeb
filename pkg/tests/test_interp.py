"""Quintic B-spline interpolation: exactness, accuracy, adjointness."""

import numpy as np
import pytest

from gaugekit import Grid
from gaugekit.interp import (
    _gather_numpy,
    _scatter_numpy,
    bspline5_weights,
    gather,
    prefilter,
    scatter,
)


def test_weights_partition_of_unity(rng):
    t = rng.uniform(0, 1, 64)
    w = bspline5_weights(t)
    np.testing.assert_allclose(w.sum(axis=-1), 1.0, atol=1e-14)
    assert np.all(w >= 0)


def test_interpolates_samples_exactly(grid16, rng):
    vals = rng.standard_normal((16, 16, 16, 3))
    coeff = prefilter(vals)
    pts = grid16.coords().reshape(-1, 3)
    got = gather(coeff, pts, grid16.spacing, grid16.n_points)
    np.testing.assert_allclose(got, vals.reshape(-1, 3), atol=1e-11)


def test_smooth_field_accuracy():
    grid = Grid(32, 32.0)
    sigma = 3.0
    c = np.array([16.0, 16.0, 16.0])

    def f(p):
        acc = np.zeros(p.shape[:-1])
        for img in np.ndindex(3, 3, 3):
            shift = (np.asarray(img) - 1) * 32.0
            acc += np.exp(-(((p - c - shift) ** 2).sum(-1)) / (2 * sigma**2))
        return acc

    vals = f(grid.coords())[..., None]
    coeff = prefilter(vals)
    rng = np.random.default_rng(3)
    pts = rng.uniform(8, 24, (500, 3))
    got = gather(coeff, pts, grid.spacing, grid.n_points)[:, 0]
    assert np.abs(got - f(pts)).max() < 2e-6


def test_gather_scatter_exact_adjoint(grid16, rng):
    arr = rng.standard_normal((16, 16, 16, 3))
    pts = rng.uniform(0, 16, (200, 3))
    vals = rng.standard_normal((200, 3))
    lhs = (gather(prefilter(arr), pts, grid16.spacing, 16) * vals).sum()
    rhs = (prefilter(scatter(vals, pts, grid16.spacing, 16)) * arr).sum()
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), abs(rhs))


def test_prefilter_self_adjoint(grid16, rng):
    a = rng.standard_normal((16, 16, 16, 3))
    b = rng.standard_normal((16, 16, 16, 3))
    lhs = (prefilter(a) * b).sum()
    rhs = (a * prefilter(b)).sum()
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_numba_and_numpy_paths_agree(grid16, rng):
    arr = rng.standard_normal((16, 16, 16, 3))
    coeff = prefilter(arr)
    pts = rng.uniform(-5, 21, (100, 3))  # includes wrap-around coordinates
    fast = gather(coeff, pts, grid16.spacing, 16)
    slow = _gather_numpy(coeff, pts, grid16.spacing, 16)
    np.testing.assert_allclose(fast, slow, atol=1e-13)
    vals = rng.standard_normal((100, 3))
    np.testing.assert_allclose(
        scatter(vals, pts, grid16.spacing, 16),
        _scatter_numpy(vals, pts, grid16.spacing, 16),
        atol=1e-13,
    )
