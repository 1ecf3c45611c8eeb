"""Config-driven scenario runner.

Subcommands: kernels-check, decompose, gauge-build, partition, evolve,
fermi, oracle-compare. Every command reads one TOML config, writes CSVs
plus a machine-readable summary.json (config hash, toolkit version, all
tolerances applied, per-check pass/fail) into the output directory, and
exits 0 on pass, 1 on check failure, 2 on configuration errors.

Identical config and seed produce byte-identical CSVs; floats are
written with repr-exact %.17g formatting.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dynamics import Evolver, run_fermi
from .energy import EnergyPartition, canonical_partition
from .errors import ConfigError, GaugekitError
from .fieldio import write_field
from .kernels import (
    CoulombKernel,
    PoincareKernel,
    chi_functional,
    assemble_vector_potential,
    make_kernel,
    polarization,
    validate_adjoint,
)
from .lattice import (
    Grid,
    ScalarField,
    VectorField,
    curl,
    div,
    grad,
    helmholtz_decompose,
    inner,
    l2_norm,
    set_fft_workers,
    solve_poisson,
    transverse_part,
    transversality_residual,
)
from .patterns import (
    gaussian_dipole_rho,
    neutral_shell_fn,
    plane_wave_state,
    random_band_limited,
    streamfunction_transverse,
)
from .retarded import RetardedQuery, retarded_B, retarded_E


def _fmt(x) -> str:
    return f"{x:.17g}"


class Summary:
    """Collects named checks and writes the machine-readable verdict."""

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.checks = []
        self.extra = {}

    def check(self, name: str, value: float, threshold: float, op: str = "<") -> bool:
        ops = {"<": value < threshold, "<=": value <= threshold,
               ">": value > threshold, ">=": value >= threshold}
        ok = bool(ops[op])
        self.checks.append({
            "name": name, "value": float(value),
            "op": op, "threshold": float(threshold), "pass": ok,
        })
        return ok

    def note(self, name: str, value) -> None:
        self.extra[name] = value

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def write(self, outdir: Path) -> None:
        payload = {
            "command": self.command,
            "version": __version__,
            "config_sha256": self.config.sha256,
            "checks": self.checks,
            "pass": self.passed,
        }
        payload.update(self.extra)
        (outdir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")

    def print_report(self) -> None:
        for c in self.checks:
            verdict = "PASS" if c["pass"] else "FAIL"
            print(f"[{verdict}] {c['name']}: {c['value']:.6g} {c['op']} {c['threshold']:g}")


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(f"# gaugekit {__version__}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_kernels_check(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("kernels-check", cfg)
    grid = cfg.grid()
    kernel = cfg.kernel(grid)
    summary.note("kernel", kernel.describe())
    h = grid.spacing
    center = np.full(3, grid.box_length / 2)

    # adjoint identity (mandatory for every kernel, fatal for customs)
    try:
        res = validate_adjoint(kernel, grid, seed=cfg.seed())
    except ValueError:
        res = np.inf
    summary.check("adjoint_identity", res, 1e-8)

    # linearity of the chi functional
    rng = np.random.default_rng(cfg.seed())
    from .patterns import random_transverse

    F = random_transverse(grid, rng)
    G = random_transverse(grid, rng)
    a, b = 0.37, -1.21
    combo = chi_functional(kernel, VectorField(grid, a * F.values + b * G.values))
    parts = a * chi_functional(kernel, F) + b * chi_functional(kernel, G)
    scale = max(np.abs(combo.values).max(), np.abs(parts.values).max(), 1e-30)
    summary.check("chi_linearity", np.abs(combo.values - parts.values).max() / scale,
                  1e-12)

    # defining property of the assembled polarization on a smooth dipole
    tbl = cfg.block("kernels_check")
    rho = gaussian_dipole_rho(grid, center, (6 * h, 0, 0),
                              float(tbl.get("dipole_sigma", 2.5 * h)))
    P = polarization(kernel, rho)
    resid = l2_norm(-1.0 * div(P) - rho) / l2_norm(rho)
    summary.check("polarization_divergence", resid, 1e-10)

    # transverse freedom actually exercised (non-Coulomb kernels)
    if not isinstance(kernel, CoulombKernel):
        pt_norm = l2_norm(transverse_part(P))
        summary.check("transverse_freedom_witness", pt_norm / l2_norm(P), 1e-12, ">")

    rows = []
    if isinstance(kernel, PoincareKernel):
        orders = [int(v) for v in tbl.get("orders", [8, 16, 32, 64])]
        # shell must be wide enough to resolve and narrow enough to fit
        s_out = float(tbl.get("shell_sigma_out",
                              min(3.1 * h, 0.095 * grid.box_length)))
        s_in = float(tbl.get("shell_sigma_in", (2.4 / 3.1) * s_out))
        if s_in < 2.2 * h:
            raise ConfigError(
                "grid too coarse for the direct-quadrature kernel check; "
                "need n >= 32 (or supply wider shell sigmas)")
        rho_fn = neutral_shell_fn(kernel.origin, s_in, s_out)
        rho_shell = ScalarField(grid, rho_fn(grid.coords()))
        nrm = l2_norm(rho_shell)
        r_cut = min(6.0 * s_out, 0.499 * grid.box_length)
        residuals = []
        for order in orders:
            P_direct = kernel.direct_polarization(grid, rho_fn, r_cut, order=order)
            r = l2_norm(-1.0 * div(P_direct) - rho_shell) / nrm
            residuals.append(r)
            rows.append(("direct_quadrature", order, float(r)))
        at = orders.index(kernel.quadrature_order) \
            if kernel.quadrature_order in orders else len(orders) - 1
        summary.check("direct_defining_property", residuals[at], 1e-3)
        orders_obs = [np.log2(residuals[i] / residuals[i + 1])
                      for i in range(len(residuals) - 1)]
        summary.check("direct_convergence_order", max(orders_obs), 2.0, ">=")
        nondecreasing = max(residuals[i + 1] / residuals[i]
                            for i in range(len(residuals) - 1))
        summary.check("direct_residuals_monotone", nondecreasing, 1.05, "<=")
        summary.note("direct_quadrature_orders", orders)
        summary.note("direct_quadrature_residuals", [float(r) for r in residuals])

    rows.extend(("check", c["name"], c["value"]) for c in summary.checks)
    _write_csv(outdir / "kernels_check.csv", "kind,name,value", rows)
    return summary


def cmd_decompose(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("decompose", cfg)
    grid = cfg.grid()
    rng = np.random.default_rng(cfg.seed())
    frac = float(cfg.block("decompose").get("band_fraction", 0.5))
    F = random_band_limited(grid, rng, frac)
    F_T, F_L = helmholtz_decompose(F)
    scale = max(np.abs(F.values).max(), 1e-30)
    summary.check("reconstruction",
                  np.abs(F.values - (F_T.values + F_L.values)).max() / scale, 1e-12)
    summary.check("transverse_divergence", transversality_residual(F_T), 1e-12)
    summary.check("longitudinal_curl", l2_norm(curl(F_L)) / max(l2_norm(grad(div(F))), 1e-30),
                  1e-12)
    denom = max(l2_norm(F_T) * l2_norm(F_L), 1e-30)
    summary.check("orthogonality", abs(inner(F_T, F_L)) / denom, 1e-12)
    T2 = transverse_part(F_T)
    summary.check("projector_idempotence",
                  np.abs(T2.values - F_T.values).max() / scale, 1e-12)
    _write_csv(outdir / "decompose.csv", "name,value",
               [(c["name"], c["value"]) for c in summary.checks])
    if dump:
        write_field(outdir / "field.gfk", F)
        write_field(outdir / "transverse.gfk", F_T)
        write_field(outdir / "longitudinal.gfk", F_L)
    return summary


def cmd_gauge_build(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("gauge-build", cfg)
    grid = cfg.grid()
    kernel = cfg.kernel(grid)
    summary.note("kernel", kernel.describe())
    h = grid.spacing
    tbl = cfg.block("gauge_build")
    center = np.full(3, grid.box_length / 2)
    sigma = float(tbl.get("sigma", 2.5 * h))
    off = float(tbl.get("offset", 6.0 * h))
    direction = np.array([0.62, -0.55, 0.4])
    offset = direction / np.linalg.norm(direction) * off
    # sampling leaves ~1e-9 aliasing divergence; project it away
    A_T = transverse_part(streamfunction_transverse(grid, center, sigma, offset))
    A = assemble_vector_potential(A_T, kernel)
    curl_T = curl(A_T)
    scale = max(np.abs(curl_T.values).max(), 1e-30)
    summary.check("curl_invariance",
                  np.abs(curl(A).values - curl_T.values).max() / scale, 1e-12)
    if isinstance(kernel, PoincareKernel):
        disp = grid.min_image(grid.coords() - kernel.origin)
        ell = np.sqrt((disp**2).sum(axis=-1))
        central = ell <= 0.25 * grid.box_length
        radial = np.einsum("...i,...i->...", disp, A.values)
        metric = np.abs(radial[central]).max() / (
            0.25 * grid.box_length * np.abs(A_T.values).max())
        summary.check("multipolar_gauge_condition", metric, 1e-3)
    _write_csv(outdir / "gauge_build.csv", "name,value",
               [(c["name"], c["value"]) for c in summary.checks])
    if dump:
        write_field(outdir / "a_transverse.gfk", A_T)
        write_field(outdir / "a_full.gfk", A)
    return summary


def _partition_state(cfg: RunConfig, grid: Grid):
    tbl = cfg.block("partition")
    h = grid.spacing
    center = np.full(3, grid.box_length / 2)
    rho = gaussian_dipole_rho(
        grid, center,
        np.asarray(tbl.get("dipole_separation", [6 * h, 0, 0]), float),
        float(tbl.get("dipole_sigma", 2.5 * h)),
        float(tbl.get("dipole_charge", 1.0)),
    )
    E_L = -1.0 * grad(solve_poisson(rho))
    E_T, B = plane_wave_state(
        grid,
        tbl.get("wave_mode", [1, 0, 0]),
        tbl.get("wave_polarization", [0, 1, 0]),
        float(tbl.get("wave_amplitude", 0.05)),
    )
    return rho, E_T + E_L, B


def cmd_partition(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("partition", cfg)
    grid = cfg.grid()
    rho, E, B = _partition_state(cfg, grid)
    names = cfg.kernel_names()
    tbl = cfg.raw.get("kernel", {})
    origin = tbl.get("origin", tuple(3 * (grid.box_length / 2,)))
    order = int(tbl.get("quadrature_order", 32))
    parts: dict[str, EnergyPartition] = {}
    for name in names:
        kernel = make_kernel(name, origin=origin, quadrature_order=order)
        part = canonical_partition(kernel, E, B, rho)
        parts[name] = part
        fname = "partition_" + name.replace(":", "_") + ".csv"
        _write_csv(outdir / fname, EnergyPartition.CSV_HEADER,
                   [tuple(float(v) for v in (0.0, part.h_pi_sq, part.h_cross,
                                             part.h_pt_sq, part.h_long,
                                             part.h_mag, part.h_total_em))])
        half_et = 0.5 * inner(transverse_part(E), transverse_part(E))
        summary.check(f"completing_square[{name}]",
                      abs(part.transverse_electric() - half_et)
                      / max(part.h_total_em, 1e-30), 1e-10)
    if len(names) >= 2:
        totals = [parts[n].h_total_em for n in names]
        spread = (max(totals) - min(totals)) / max(totals)
        summary.check("total_em_kernel_invariance", spread, 1e-12)
        pis = [parts[n].h_pi_sq for n in names]
        witness = (max(pis) - min(pis)) / max(totals)
        summary.check("canonical_term_kernel_dependence", witness, 1e-6, ">")
    return summary


def _evolve_loop(cfg: RunConfig, outdir: Path, dump: bool, summary: Summary):
    grid = cfg.grid()
    model = cfg.source_model(grid)
    dyn = cfg.dynamics(grid)
    if dyn["t_end"] is None:
        raise ConfigError("[dynamics] t_end is required")
    regions = cfg.regions(grid)
    probes = cfg.probe_sites(grid)
    ev = Evolver(model, dyn["dt"], t0=0.0, regions=regions)
    n_steps = int(np.ceil(dyn["t_end"] / dyn["dt"]))
    header = ["t", "em_energy", "gauss_residual"]
    header += [f"hm_{name}" for name in regions]
    header += [f"probe{i}_absE" for i in range(len(probes))]
    header += [f"probe{i}_absB" for i in range(len(probes))]
    rows = []
    gauss_max = 0.0
    for i in range(n_steps):
        ev.step()
        sampled = (i + 1) % dyn["sample_every"] == 0 or i == n_steps - 1
        if sampled:
            g = ev.gauss_residual()
            gauss_max = max(gauss_max, g)
            row = [ev.t, ev.em_energy(), g]
            row += [ev.hm[name] for name in regions]
            if probes:
                pv = ev.probe(probes)
                row += list(pv[:, 0]) + list(pv[:, 1])
            rows.append(tuple(float(v) for v in row))
        if dump and dyn["dump_every"] and (i + 1) % dyn["dump_every"] == 0:
            E, B = ev.fields()
            write_field(outdir / f"E_{i + 1:06d}.gfk", E)
            write_field(outdir / f"B_{i + 1:06d}.gfk", B)
    _write_csv(outdir / "evolve.csv", ",".join(header), rows)
    summary.check("gauss_residual_max", gauss_max, 1e-9)
    summary.note("steps", n_steps)
    return ev


def cmd_evolve(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("evolve", cfg)
    _evolve_loop(cfg, outdir, dump, summary)
    return summary


def cmd_fermi(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("fermi", cfg)
    fermi_cfg, opts = cfg.fermi()
    if opts["disable_source"]:
        fermi_cfg.source = type(fermi_cfg.source)(
            center=fermi_cfg.source.center, sigma=fermi_cfg.source.sigma,
            amplitude=(0.0, 0.0, 0.0), omega0=fermi_cfg.source.omega0,
            ramp=fermi_cfg.source.ramp, t_on=fermi_cfg.source.t_on,
            cutoff=fermi_cfg.source.cutoff)
    result = run_fermi(fermi_cfg, sample_every=opts["sample_every"])
    h = fermi_cfg.grid.spacing
    r = fermi_cfg.separation()
    delta = result.delta
    _write_csv(outdir / "fermi.csv", "t,hm_B_with,hm_B_without,delta",
               [(float(t), float(w), float(o), float(d))
                for t, w, o, d in zip(result.t, result.hm_with["B"],
                                      result.hm_without["B"], delta)])
    _write_csv(outdir / "fermi_probes.csv",
               "t,absE_with,absB_with,absE_without,absB_without",
               [(float(t), float(pw[0]), float(pw[1]), float(po[0]), float(po[1]))
                for t, pw, po in zip(result.sample_t, result.probe_with,
                                     result.probe_without)])
    peak = float(np.abs(delta).max())
    front = result.front_time()
    summary.note("separation", r)
    summary.note("front_time", front if front is not None else "none")
    summary.note("delta_peak", peak)
    summary.check("gauss_residual_max", result.gauss_max, 1e-9)
    if opts["disable_source"]:
        summary.check("difference_identically_zero", peak, 0.0, "<=")
        return summary
    quiet = result.quiet_maximum(r - 3 * h)
    summary.check("pre_front_silence", quiet, 1e-10 * peak if peak else 1e-30)
    idx = int(np.searchsorted(result.t, r + 5 * h))
    idx = min(idx, len(delta) - 1)
    summary.check("front_detected_by_r_plus_5h", abs(float(delta[idx])),
                  1e-3 * peak if peak else 1.0, ">")
    if front is not None:
        summary.check("front_time_lower", front, r - 3 * h, ">=")
        summary.check("front_time_upper", front, r + 5 * h, "<=")
    else:
        summary.check("front_found", 0.0, 0.5, ">")
    return summary


def cmd_oracle_compare(cfg: RunConfig, outdir: Path, dump: bool) -> Summary:
    summary = Summary("oracle-compare", cfg)
    grid = cfg.grid()
    model = cfg.source_model(grid)
    dyn = cfg.dynamics(grid)
    if dyn["t_end"] is None:
        raise ConfigError("[dynamics] t_end is required")
    probes = cfg.probe_sites(grid)
    if not probes:
        raise ConfigError("oracle-compare requires [[probe]] sites")
    tbl = cfg.block("oracle")
    every = int(tbl.get("sample_every", 40))
    trunc = float(tbl.get("truncation_sigmas", 5.0))
    points = np.array(probes, float) * grid.spacing
    # validate the wrap window before spending any time stepping
    limit = RetardedQuery(model, points, 0.0, truncation_sigmas=trunc).window_limit()
    if dyn["t_end"] >= limit:
        raise ConfigError(
            f"t_end = {dyn['t_end']:g} reaches the oracle wrap window {limit:g}")
    ev = Evolver(model, dyn["dt"], t0=0.0)
    n_steps = int(np.ceil(dyn["t_end"] / dyn["dt"]))
    sim_E, sim_B, times = [], [], []
    for i in range(n_steps):
        ev.step()
        if (i + 1) % every == 0:
            E, B = ev.fields()
            idx = tuple(np.array(probes).T)
            sim_E.append(E.values[idx])
            sim_B.append(B.values[idx])
            times.append(ev.t)
    rows = []
    orc_E, orc_B = [], []
    for t in times:
        q = RetardedQuery(model, points, t, truncation_sigmas=trunc)
        orc_E.append(retarded_E(q))
        orc_B.append(retarded_B(q))
    for i, t in enumerate(times):
        for p in range(len(probes)):
            rows.append((p, float(t))
                        + tuple(float(v) for v in sim_E[i][p])
                        + tuple(float(v) for v in orc_E[i][p])
                        + tuple(float(v) for v in sim_B[i][p])
                        + tuple(float(v) for v in orc_B[i][p]))
    _write_csv(outdir / "oracle_compare.csv",
               "point,t,Ex_sim,Ey_sim,Ez_sim,Ex_oracle,Ey_oracle,Ez_oracle,"
               "Bx_sim,By_sim,Bz_sim,Bx_oracle,By_oracle,Bz_oracle", rows)
    sim_E, orc_E = np.array(sim_E), np.array(orc_E)
    sim_B, orc_B = np.array(sim_B), np.array(orc_B)
    err_E = np.linalg.norm(sim_E - orc_E) / max(np.linalg.norm(orc_E), 1e-30)
    err_B = np.linalg.norm(sim_B - orc_B) / max(np.linalg.norm(orc_B), 1e-30)
    summary.check("relative_l2_E", float(err_E), 0.02)
    summary.check("relative_l2_B", float(err_B), 0.02)
    return summary


COMMANDS = {
    "kernels-check": cmd_kernels_check,
    "decompose": cmd_decompose,
    "gauge-build": cmd_gauge_build,
    "partition": cmd_partition,
    "evolve": cmd_evolve,
    "fermi": cmd_fermi,
    "oracle-compare": cmd_oracle_compare,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaugekit",
        description="gauge-kernel field toolkit: reproducible scenario runner",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", default="gaugekit_out",
                        help="output directory (env GAUGEKIT_OUT overrides)")
    parser.add_argument("--dump-fields", action="store_true",
                        help="write GFK1 field dumps where the command supports them")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    args = parser.parse_args(argv)

    set_fft_workers(args.threads)
    outdir = Path(os.environ.get("GAUGEKIT_OUT") or args.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        cfg = load_config(args.config)
        summary = COMMANDS[args.command](cfg, outdir, args.dump_fields)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GaugekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary.write(outdir)
    summary.print_report()
    print(f"{'PASS' if summary.passed else 'FAIL'}: {args.command} "
          f"({len(summary.checks)} checks) -> {outdir}")
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
