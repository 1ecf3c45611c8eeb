"""Config validation, CLI exit codes, output determinism."""

import json
import os

import numpy as np
import pytest

from gaugekit.cli import main
from gaugekit.config import load_config
from gaugekit.errors import ConfigError

BASE = """
seed = 11

[grid]
n = 16
length = 16.0

[kernel]
type = "poincare"
origin = [8.0, 8.0, 8.0]
quadrature_order = 8

[[source]]
center = [8.0, 8.0, 8.0]
sigma = 1.8
amplitude = [0.0, 0.4, 0.0]
omega0 = 1.1
ramp = 2.0
t_on = 0.3

[dynamics]
t_end = 2.0
sample_every = 2

[[region]]
name = "core"
center = [8.0, 8.0, 8.0]
radius = 2.0

[[probe]]
site = [4, 8, 8]
"""


@pytest.fixture
def base_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(BASE)
    return path


class TestConfigParsing:
    def test_round_trip(self, base_config):
        cfg = load_config(base_config)
        grid = cfg.grid()
        assert grid.n_points == 16
        assert cfg.seed() == 11
        assert len(cfg.blobs()) == 1
        assert cfg.kernel(grid).describe().startswith("poincare")
        assert len(cfg.sha256) == 64

    def test_missing_grid_key(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[grid]\nn = 16\n")
        with pytest.raises(ConfigError, match="length"):
            load_config(p).grid()

    def test_odd_grid_rejected(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[grid]\nn = 15\nlength = 15.0\n")
        with pytest.raises(ConfigError):
            load_config(p).grid()

    def test_unstable_dt_rejected(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text(BASE + "\n[dynamics.extra]\n")
        cfg = load_config(p)
        cfg.raw["dynamics"]["dt"] = 1.0
        with pytest.raises(ConfigError, match="stability"):
            cfg.dynamics(cfg.grid())

    def test_probe_out_of_range(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text(BASE.replace("site = [4, 8, 8]", "site = [99, 8, 8]"))
        cfg = load_config(p)
        with pytest.raises(ConfigError, match="outside"):
            cfg.probe_sites(cfg.grid())

    def test_fermi_wrap_rejected(self, tmp_path):
        p = tmp_path / "f.toml"
        p.write_text("[fermi]\nn = 32\nseparation_cells = 12\nt_end_cells = 25.0\n")
        with pytest.raises(ConfigError, match="wrap"):
            load_config(p).fermi()

    def test_malformed_toml(self, tmp_path):
        p = tmp_path / "broken.toml"
        p.write_text("[grid\nn = 16")
        with pytest.raises(ConfigError):
            load_config(p)


class TestCliExitCodes:
    def test_pass_is_zero(self, base_config, tmp_path):
        rc = main(["decompose", "--config", str(base_config),
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["pass"] is True
        assert summary["version"]
        assert len(summary["config_sha256"]) == 64
        assert all("threshold" in c for c in summary["checks"])

    def test_config_error_is_two(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[grid]\nn = 16\n")
        rc = main(["decompose", "--config", str(p), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_check_failure_is_one(self, base_config, tmp_path):
        # kernels-check on a 16-box cannot host the shell source: config error
        rc = main(["kernels-check", "--config", str(base_config),
                   "--out", str(tmp_path / "out")])
        assert rc == 2

    def test_missing_file_is_two(self, tmp_path):
        rc = main(["evolve", "--config", str(tmp_path / "nope.toml"),
                   "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_env_overrides_out(self, base_config, tmp_path, monkeypatch):
        env_dir = tmp_path / "env_out"
        monkeypatch.setenv("GAUGEKIT_OUT", str(env_dir))
        rc = main(["decompose", "--config", str(base_config),
                   "--out", str(tmp_path / "ignored")])
        assert rc == 0
        assert (env_dir / "summary.json").exists()
        assert not (tmp_path / "ignored").exists()


class TestDeterminism:
    def test_evolve_csv_byte_identical(self, base_config, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(["evolve", "--config", str(base_config), "--out", str(out)])
            assert rc == 0
            outs.append((out / "evolve.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_decompose_csv_byte_identical(self, base_config, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            main(["decompose", "--config", str(base_config), "--out", str(out)])
            outs.append((out / "decompose.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_decompose_fields(self, base_config, tmp_path):
        other = tmp_path / "other.toml"
        other.write_text(BASE.replace("seed = 11", "seed = 12"))
        a, b = tmp_path / "a", tmp_path / "b"
        main(["decompose", "--config", str(base_config), "--out", str(a),
              "--dump-fields"])
        main(["decompose", "--config", str(other), "--out", str(b),
              "--dump-fields"])
        assert (a / "field.gfk").read_bytes() != (b / "field.gfk").read_bytes()


class TestEvolveOutputs:
    def test_csv_columns(self, base_config, tmp_path):
        out = tmp_path / "out"
        main(["evolve", "--config", str(base_config), "--out", str(out)])
        lines = (out / "evolve.csv").read_text().splitlines()
        assert lines[0].startswith("# gaugekit")
        header = lines[1].split(",")
        assert header[:3] == ["t", "em_energy", "gauss_residual"]
        assert "hm_core" in header
        assert "probe0_absE" in header and "probe0_absB" in header
        assert len(lines) > 3

    def test_field_dumps_written(self, base_config, tmp_path):
        p = tmp_path / "dump.toml"
        p.write_text(BASE.replace("sample_every = 2",
                                  "sample_every = 2\ndump_every = 8"))
        out = tmp_path / "out"
        main(["evolve", "--config", str(p), "--out", str(out), "--dump-fields"])
        dumps = sorted(out.glob("E_*.gfk"))
        assert dumps
        from gaugekit import read_field

        field = read_field(dumps[0])
        assert field.grid.n_points == 16
