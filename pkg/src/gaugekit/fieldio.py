"""Binary field dumps.

Layout (all little-endian):

    bytes 0..3   magic "GFK1"
    u32          N, sites per axis
    f64          L, box length
    u32          n_components (1 scalar, 3 vector)
    f64[...]     samples, x varying fastest, vector component innermost

so the flat sample index is  ((z*N + y)*N + x)*n_components + c.
"""

from __future__ import annotations

import struct

import numpy as np

from .lattice import Grid, ScalarField, VectorField

MAGIC = b"GFK1"
_HEADER = struct.Struct("<4sId I".replace(" ", ""))  # magic, u32 N, f64 L, u32 ncomp


def write_field(path, field) -> None:
    """Write a ScalarField or VectorField to a GFK1 dump."""
    ncomp = 1 if isinstance(field, ScalarField) else 3
    grid = field.grid
    if ncomp == 1:
        flat = np.ascontiguousarray(field.values.transpose(2, 1, 0))
    else:
        flat = np.ascontiguousarray(field.values.transpose(2, 1, 0, 3))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.n_points, grid.box_length, ncomp))
        fh.write(flat.astype("<f8").tobytes())


def read_field(path, grid: Grid | None = None):
    """Read a GFK1 dump; returns ScalarField or VectorField.

    If grid is given it must match the stored N and L.
    """
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, n, length, ncomp = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if ncomp not in (1, 3):
            raise ValueError(f"{path}: n_components must be 1 or 3, got {ncomp}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    expected = n**3 * ncomp
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} samples, found {data.size}")
    if grid is None:
        grid = Grid(n, length)
    elif grid.n_points != n or abs(grid.box_length - length) > 1e-12 * length:
        raise ValueError(f"{path}: stored grid ({n}, {length}) does not match {grid}")
    if ncomp == 1:
        values = data.reshape(n, n, n).transpose(2, 1, 0)
        return ScalarField(grid, values)
    values = data.reshape(n, n, n, 3).transpose(2, 1, 0, 3)
    return VectorField(grid, values)
