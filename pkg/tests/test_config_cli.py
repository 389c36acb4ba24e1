"""Configuration parsing, CLI plumbing, CSV/VTK output formats."""

import math
import subprocess
import sys

import numpy as np
import pytest

from nanofrac.config import apply_overrides, default_config, parse_config
from nanofrac.errors import ConfigError
from nanofrac.pf_fem.mesh import Mesh, tensor_grid
from nanofrac.pf_fem.vtk_io import write_vtk


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "nanofrac.cli", *args],
        capture_output=True, text=True, cwd=cwd)


class TestParseConfig:
    def test_defaults_reference_parameter_set(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("[material]\n")      # empty block -> all defaults
        cfg = parse_config(str(path))
        assert cfg.get("material", "f_p") == 0.01
        assert cfg.get("material", "E_m") == 2.5e9
        assert cfg.get("material", "E_cnt") == 700e9
        assert cfg.get("material", "L_cnt") == 3.21e-6
        assert cfg.get("material", "D_cnt") == 10.35e-9
        assert cfg.get("material", "t") == 31.0e-9
        assert cfg.get("agglomeration", "chi") == 0.2
        assert cfg.get("agglomeration", "zeta") == 0.4
        assert cfg.resolved("agglomeration", "N_sigma") == pytest.approx(1.0)
        assert cfg.get("fracture", "G_0") == 133.0
        assert cfg.get("fracture", "sigma_ult") == 35e9
        assert cfg.get("fracture", "tau_int") == 47e6
        assert cfg.get("fracture", "A") == 0.083
        assert cfg.get("fracture", "mu") == 0.0
        assert cfg.resolved("material", "nu_i") == 0.28

    def test_invariant_violation_with_field_path(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[agglomeration]\nzeta = 1.5\n")
        with pytest.raises(ConfigError, match="agglomeration.zeta"):
            parse_config(str(path))

    def test_unknown_key_suggestion(self, tmp_path):
        path = tmp_path / "typo.cfg"
        path.write_text("[material]\nE_mm = 2.5e9\n")
        with pytest.raises(ConfigError, match="did you mean 'E_m'"):
            parse_config(str(path))

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "typo.cfg"
        path.write_text("[materials]\nE_m = 2.5e9\n")
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config(str(path))

    def test_unreadable_file(self):
        with pytest.raises(ConfigError):
            parse_config("/nonexistent/path.cfg")

    def test_overrides(self):
        cfg = default_config()
        apply_overrides(cfg, ["material.f_p=0.02", "agglomeration.zeta=0.9"])
        assert cfg.get("material", "f_p") == 0.02
        assert cfg.get("agglomeration", "zeta") == 0.9

    def test_override_validation(self):
        cfg = default_config()
        with pytest.raises(ConfigError):
            apply_overrides(cfg, ["material.f_p=2.0"])
        with pytest.raises(ConfigError):
            apply_overrides(cfg, ["nonsense"])
        with pytest.raises(ConfigError, match="did you mean"):
            apply_overrides(cfg, ["material.E_mm=1.0"])

    def test_hash_stable_and_value_sensitive(self):
        a = default_config()
        b = default_config()
        assert a.hash() == b.hash()
        apply_overrides(b, ["material.f_p=0.02"])
        assert a.hash() != b.hash()

    def test_derived_objects(self):
        cfg = default_config()
        geom = cfg.filler_geometry()
        assert geom.aspect_ratio == pytest.approx(3.21e-6 / 10.35e-9)
        odf = cfg.planar_odf()
        assert odf.p == 0.5 and odf.q == 0.5
        stats = cfg.bundle_statistics()
        assert stats.mean == 10.0 and stats.n_max == 50

    def test_orientation_moment_fit_through_config(self):
        cfg = default_config()
        apply_overrides(cfg, ["orientation.theta_mu=0.7853981633974483",
                              "orientation.theta_sigma=0.0785398163"])
        odf = cfg.planar_odf()
        mu, sigma = odf.moments()
        assert mu == pytest.approx(math.pi / 4, abs=1e-6)
        assert sigma == pytest.approx(0.0785398163, abs=1e-6)


class TestCLI:
    def test_homogenize_roundtrip_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            r = run_cli("homogenize", "--out", str(out),
                        "--override", "material.f_p=0.005")
            assert r.returncode == 0, r.stderr
        f1 = (out1 / "homogenize.csv").read_bytes()
        f2 = (out2 / "homogenize.csv").read_bytes()
        assert f1 == f2                      # byte-identical re-runs
        text = f1.decode()
        assert "config_sha256" in text
        header, row = text.strip().splitlines()[-2:]
        values = dict(zip(header.split(","), row.split(",")))
        ratio = float(values["E_over_Em"])
        assert 1.15 <= ratio <= 1.25

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[agglomeration]\nzeta = 1.5\n")
        r = run_cli("homogenize", "--config", str(bad), "--out", str(tmp_path))
        assert r.returncode == 2
        assert "zeta" in r.stderr

    def test_unknown_key_exit_code(self, tmp_path):
        r = run_cli("homogenize", "--out", str(tmp_path),
                    "--override", "material.bogus=1.0")
        assert r.returncode == 2

    def test_fracture_energy_mode(self, tmp_path):
        r = run_cli("fracture-energy", "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        text = (tmp_path / "fracture_energy.csv").read_text()
        header, row = text.strip().splitlines()[-2:]
        values = dict(zip(header.split(","), row.split(",")))
        assert float(values["G_0"]) == 133.0
        assert float(values["G_PF_agg"]) < float(values["G_PF"])
        assert float(values["G_c_combined"]) == pytest.approx(
            133.0 + 0.6 * float(values["G_PF"]) + 0.4 * float(values["G_PF_agg"]),
            rel=1e-12)

    def test_sweep_mode_zeta(self, tmp_path):
        r = run_cli("sweep", "--out", str(tmp_path),
                    "--override", "sweep.parameter=zeta",
                    "--override", "sweep.start=0.2",
                    "--override", "sweep.stop=0.9",
                    "--override", "sweep.count=5",
                    "--override", "homogenize.dispersion=agglomerated")
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        rows = [ln.split(",") for ln in lines[3:]]
        assert len(rows) == 5
        assert all(row[-1] == "ok" for row in rows)
        # decreasing effective modulus with increasing bundling
        moduli = [float(row[2]) for row in rows]
        assert all(a > b for a, b in zip(moduli, moduli[1:]))

    def test_sweep_records_failed_points(self, tmp_path):
        # zeta/chi at high f_p overfills the bundles for the upper points
        r = run_cli("sweep", "--out", str(tmp_path),
                    "--override", "material.f_p=0.3",
                    "--override", "sweep.parameter=zeta",
                    "--override", "sweep.start=0.1",
                    "--override", "sweep.stop=0.9",
                    "--override", "sweep.count=3",
                    "--override", "homogenize.dispersion=agglomerated")
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        statuses = [ln.split(",")[-1] for ln in lines[3:]]
        assert any(s.startswith("error") for s in statuses)
        assert any(s == "ok" for s in statuses)

    def test_kappa_sweep_peak_location(self, tmp_path):
        r = run_cli("sweep", "--out", str(tmp_path),
                    "--override", "sweep.parameter=kappa",
                    "--override", "sweep.start=100",
                    "--override", "sweep.stop=700",
                    "--override", "sweep.count=25")
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        rows = [ln.split(",") for ln in lines[3:]]
        kappas = np.array([float(r_[1]) for r_ in rows])
        g_pf = np.array([float(r_[5]) for r_ in rows])
        peak = kappas[int(np.argmax(g_pf))]
        assert 300.0 <= peak <= 450.0

    def test_simulate_smoke_tiny_schedule(self, tmp_path):
        # plumbing check on a drastically shortened schedule
        r = run_cli("simulate", "--out", str(tmp_path),
                    "--override", "simulate.case=sen_tension",
                    "--override", "simulate.schedule=0.02:4",
                    "--override", "simulate.snapshot_every=2")
        assert r.returncode == 0, r.stderr
        text = (tmp_path / "load_curve.csv").read_text()
        lines = text.strip().splitlines()
        assert lines[2] == "step,applied_displacement_mm,reaction_kN"
        assert len(lines) == 3 + 4
        reactions = [float(ln.split(",")[2]) for ln in lines[3:]]
        assert all(r2 > r1 for r1, r2 in zip(reactions, reactions[1:]))
        snaps = sorted(tmp_path.glob("snapshot_*.vtk"))
        assert len(snaps) >= 2


class TestVTK:
    def test_legacy_format(self, tmp_path):
        nodes, elems = tensor_grid(np.linspace(0, 1, 3), np.linspace(0, 1, 2))
        mesh = Mesh(nodes, elems)
        phi = np.linspace(0, 1, mesh.n_nodes)
        u = np.arange(2 * mesh.n_nodes, dtype=float) * 0.1
        path = tmp_path / "snap.vtk"
        write_vtk(path, mesh, phi, u)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# vtk DataFile")
        assert "ASCII" in lines[2]
        assert "DATASET UNSTRUCTURED_GRID" in lines[3]
        assert lines[4] == f"POINTS {mesh.n_nodes} double"
        idx = lines.index(f"CELLS {mesh.n_elements} {5 * mesh.n_elements}")
        assert lines[idx + 1].startswith("4 ")
        idx_types = lines.index(f"CELL_TYPES {mesh.n_elements}")
        assert lines[idx_types + 1] == "9"
        assert f"POINT_DATA {mesh.n_nodes}" in lines
        assert "SCALARS phi double 1" in lines
        assert "VECTORS u double" in lines


class TestCLIFailureModes:
    def test_solver_nonconvergence_exit_code(self, tmp_path):
        r = run_cli("simulate", "--out", str(tmp_path),
                    "--override", "simulate.schedule=0.5:1",
                    "--override", "solver.max_iterations=1",
                    "--override", "solver.rtol=1e-30")
        assert r.returncode == 3
        assert "solver failure" in r.stderr

    def test_io_failure_exit_code(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("not a directory")
        r = run_cli("homogenize", "--out", str(blocker))
        assert r.returncode == 4
