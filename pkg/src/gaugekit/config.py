"""TOML run configurations.

One file fully determines a run. Statically checkable preconditions
(grid validity, stability bound, wrap windows, probe placement, weak
probe) are validated at parse time and reported as ConfigError, which
the CLI maps to exit code 2.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib as _toml
except ImportError:  # Python 3.10
    import tomli as _toml

from .dynamics import FermiConfig, stability_dt, standard_fermi_config
from .errors import ConfigError
from .kernels import GaugeKernel, make_kernel
from .lattice import Ball, Grid
from .sources import SourceBlob, SourceModel


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def _vec3(value, where: str):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"{where} must be a 3-vector, got {value!r}")
    return tuple(arr)


@dataclass
class RunConfig:
    """Parsed configuration plus the raw table and the file hash."""

    raw: dict
    sha256: str
    path: str

    # -- builders ---------------------------------------------------------

    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def grid(self) -> Grid:
        tbl = self.raw.get("grid")
        if tbl is None:
            raise ConfigError("missing [grid] block")
        try:
            return Grid(int(_require(tbl, "n", "grid")),
                        float(_require(tbl, "length", "grid")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def kernel(self, grid: Grid) -> GaugeKernel:
        tbl = self.raw.get("kernel", {"type": "coulomb"})
        ktype = tbl.get("type", "coulomb")
        center = tuple(3 * (grid.box_length / 2,))
        origin = _vec3(tbl.get("origin", center), "kernel.origin")
        order = int(tbl.get("quadrature_order", 32))
        try:
            return make_kernel(ktype, origin=origin, quadrature_order=order)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def kernel_names(self) -> list[str]:
        tbl = self.raw.get("partition", {})
        return list(tbl.get("kernels", ["coulomb", "poincare"]))

    def blobs(self) -> list[SourceBlob]:
        out = []
        for i, tbl in enumerate(self.raw.get("source", [])):
            where = f"source[{i}]"
            try:
                out.append(SourceBlob(
                    center=_vec3(_require(tbl, "center", where), where + ".center"),
                    sigma=float(_require(tbl, "sigma", where)),
                    amplitude=_vec3(_require(tbl, "amplitude", where), where + ".amplitude"),
                    omega0=float(_require(tbl, "omega0", where)),
                    ramp=float(_require(tbl, "ramp", where)),
                    t_on=float(tbl.get("t_on", 0.0)),
                    cutoff=float(tbl["cutoff"]) if "cutoff" in tbl else None,
                ))
            except ValueError as exc:
                raise ConfigError(f"[{where}]: {exc}") from exc
        return out

    def source_model(self, grid: Grid) -> SourceModel:
        blobs = self.blobs()
        if not blobs:
            raise ConfigError("at least one [[source]] block is required")
        return SourceModel(grid, blobs)

    def regions(self, grid: Grid) -> dict:
        out = {}
        for i, tbl in enumerate(self.raw.get("region", [])):
            where = f"region[{i}]"
            name = tbl.get("name", f"R{i}")
            ball = Ball(_vec3(_require(tbl, "center", where), where + ".center"),
                        float(_require(tbl, "radius", where)))
            if ball.radius >= grid.box_length / 2:
                raise ConfigError(f"[{where}]: region does not fit in the box")
            out[name] = ball
        return out

    def probe_sites(self, grid: Grid) -> list[tuple]:
        sites = []
        for i, tbl in enumerate(self.raw.get("probe", [])):
            site = tuple(int(v) for v in _require(tbl, "site", f"probe[{i}]"))
            if len(site) != 3 or any(not (0 <= v < grid.n_points) for v in site):
                raise ConfigError(f"[probe[{i}]]: site {site} outside the lattice")
            sites.append(site)
        return sites

    def dynamics(self, grid: Grid) -> dict:
        tbl = self.raw.get("dynamics", {})
        bound = stability_dt(grid)
        dt = float(tbl.get("dt", 0.5 * bound))
        if dt > bound * (1 + 1e-12):
            raise ConfigError(f"dt = {dt:g} exceeds the stability bound {bound:g}")
        if dt <= 0:
            raise ConfigError("dt must be positive")
        return {
            "dt": dt,
            "t_end": float(tbl["t_end"]) if "t_end" in tbl else None,
            "sample_every": int(tbl.get("sample_every", 1)),
            "dump_every": int(tbl.get("dump_every", 0)),
        }

    def fermi(self) -> tuple[FermiConfig, dict]:
        tbl = self.raw.get("fermi", {})
        n = int(tbl.get("n", 64))
        spacing = float(tbl.get("spacing", 1.0))
        sep = int(tbl.get("separation_cells", 24))
        t_end = float(tbl.get("t_end_cells", 36.0))
        delay = tbl.get("probe_delay", None)
        try:
            cfg = standard_fermi_config(
                n=n, spacing=spacing, separation_cells=sep, t_end_cells=t_end,
                probe_delay=float(delay) if delay is not None else None,
            )
        except (ConfigError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        opts = {
            "sample_every": int(tbl.get("sample_every", 8)),
            "disable_source": bool(tbl.get("disable_source", False)),
        }
        return cfg, opts

    def block(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        raw = _toml.loads(data.decode("utf-8"))
    except (_toml.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return RunConfig(raw=raw, sha256=hashlib.sha256(data).hexdigest(), path=str(p))
