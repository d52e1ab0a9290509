"""Config handling, staged runs, manifests, CLI wiring."""

import json

import numpy as np
import pytest
import yaml

from aragospot.cli import build_parser, config_from_args
from aragospot.constants import CONST
from aragospot.errors import ConfigurationError
from aragospot.pipeline import (
    RunConfig,
    beam_from_temperature,
    boltzmann_excited_fraction,
    run_pipeline,
)


class TestBeamNumbers:
    def test_thermal_speed(self):
        beam = beam_from_temperature(1473.15, 114.8 * CONST.amu)
        assert beam.speed == pytest.approx(521.0, rel=0.01)

    def test_wavelength(self):
        beam = beam_from_temperature(1473.15, 114.8 * CONST.amu)
        assert beam.wavelength == pytest.approx(6.67e-12, rel=0.01)

    def test_sqrt_temperature_scaling(self):
        b1 = beam_from_temperature(300.0, 114.8 * CONST.amu)
        b4 = beam_from_temperature(1200.0, 114.8 * CONST.amu)
        assert b4.speed / b1.speed == pytest.approx(2.0, rel=1e-12)


class TestBoltzmann:
    def test_indium_at_source_temperature(self, atom):
        frac = boltzmann_excited_fraction(atom, 1473.15)
        assert 2.5e-11 < frac < 1e-10  # ~5e-11 within a factor of 2

    def test_cold_limit(self, atom):
        assert boltzmann_excited_fraction(atom, 1e-6) == pytest.approx(0.0, abs=1e-300)

    def test_soft_transition_limit(self):
        from aragospot.materials import PolarizabilityModel

        soft = PolarizabilityModel(j0=0.5, transitions=((1e3, 1e-30),))
        assert boltzmann_excited_fraction(soft, 1000.0) == pytest.approx(1.0, rel=1e-6)


class TestRunConfig:
    def test_defaults_are_experiment(self):
        cfg = RunConfig()
        assert cfg.g == 0.6
        assert cfg.n_theta == 19_997
        assert cfg.source_diameter == 20e-6
        assert cfg.mass_amu == 114.8

    def test_yaml_roundtrip_idempotent(self, tmp_path):
        cfg = RunConfig(radius=75e-9, b_range=(5e-5, 1.05e-3, 11), b=None)
        text1 = cfg.to_yaml()
        parsed = RunConfig.from_dict(yaml.safe_load(text1))
        text2 = parsed.to_yaml()
        assert text1 == text2

    def test_beam_exclusivity(self):
        with pytest.raises(ConfigurationError):
            RunConfig(temperature=1000.0, speed=500.0)
        with pytest.raises(ConfigurationError):
            RunConfig(temperature=None, speed=None)

    def test_b_values(self):
        cfg = RunConfig(b_range=(1e-4, 3e-4, 3), b=None)
        assert cfg.b_values() == pytest.approx([1e-4, 2e-4, 3e-4])


def _fast_config(tmp_path, **over):
    base = dict(
        radius=50e-9,
        b=1e-4,
        l_max=150,
        n_theta=199,
        n_pixels=12,
        image_pixels=40,
        z_grid=(1.0e-9, 4.0, 10),
        out_dir=str(tmp_path / "out"),
        artifacts=("material", "potential", "phase", "profiles"),
    )
    base.update(over)
    return RunConfig(**base)


class TestRunPipeline:
    def test_full_run_and_manifest(self, tmp_path):
        cfg = _fast_config(tmp_path)
        manifest = run_pipeline(cfg)
        nums = manifest["numbers"]
        assert nums["c3_J_m3"] == pytest.approx(9.895e-50, rel=1e-3)
        assert nums["mean_speed_m_s"] == pytest.approx(521.24, rel=1e-3)
        assert (tmp_path / "out" / "manifest.json").exists()
        assert (tmp_path / "out" / "potential_curve.txt").exists()
        assert (tmp_path / "out" / "phase_profile.txt").exists()
        names = {o["path"] for o in manifest["outputs"]}
        assert "profile_b0.1000mm_cp-on.txt" in names
        assert "profile_b0.1000mm_cp-off_conv.txt" in names

    def test_reproducible_hashes(self, tmp_path):
        # identical numerics regardless of output location ...
        m1 = run_pipeline(_fast_config(tmp_path / "a"))
        m2 = run_pipeline(_fast_config(tmp_path / "b"))
        h1 = {o["path"]: o["sha256"] for o in m1["outputs"]}
        h2 = {o["path"]: o["sha256"] for o in m2["outputs"]}
        assert h1 == h2
        # ... and identical config (same out dir) reproduces its hash too
        m3 = run_pipeline(_fast_config(tmp_path / "a"))
        assert m3["config_hash"] == m1["config_hash"]
        assert {o["sha256"] for o in m3["outputs"]} == set(h1.values())

    def test_corridor_factors(self, tmp_path):
        cfg = _fast_config(tmp_path, corridor=True, artifacts=("profiles",))
        manifest = run_pipeline(cfg)
        names = {o["path"] for o in manifest["outputs"]}
        assert "profile_b0.1000mm_cp-on.txt" in names
        assert "profile_b0.1000mm_cp-on_x0.8.txt" in names
        assert "profile_b0.1000mm_cp-on_x1.8.txt" in names

    def test_zero_radius_flat_profiles(self, tmp_path):
        cfg = _fast_config(tmp_path, radius=0.0, artifacts=("profiles",))
        manifest = run_pipeline(cfg)
        path = tmp_path / "out" / "profile_b0.1000mm_cp-off.txt"
        data = np.loadtxt(path)
        assert np.allclose(data[:, 1], 1.0, atol=1e-6)
        assert "c52_m52" not in manifest["numbers"]

    def test_b_scan_outputs(self, tmp_path):
        cfg = _fast_config(
            tmp_path, b=None, b_range=(1e-4, 2e-4, 2), artifacts=("profiles",)
        )
        manifest = run_pipeline(cfg)
        names = {o["path"] for o in manifest["outputs"]}
        assert "profile_b0.1000mm_cp-on.txt" in names
        assert "profile_b0.2000mm_cp-on.txt" in names

    def test_stage_failure_names_stage_and_writes_manifest(self, tmp_path):
        cfg = _fast_config(tmp_path, atom_transitions=((1e15, -1e-30),))
        with pytest.raises(RuntimeError, match="stage 'material'"):
            run_pipeline(cfg)
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["failed_stage"] == "material"


class TestCli:
    def test_parser_flags(self):
        parser = build_parser()
        args = parser.parse_args(
            [
                "diffract", "--radius", "1e-7", "--b", "2e-4", "--no-cp",
                "--corridor", "--threads", "2", "--seedless", "--out", "/tmp/x",
            ]
        )
        cfg = config_from_args(args)
        assert cfg.radius == 1e-7
        assert cfg.b == 2e-4
        assert cfg.no_cp and cfg.corridor
        assert cfg.workers == 2
        assert cfg.out_dir == "/tmp/x"

    def test_b_range_flag(self):
        parser = build_parser()
        args = parser.parse_args(["scan", "--b-range", "1e-4:5e-4:5"])
        cfg = config_from_args(args)
        assert cfg.b_range == (1e-4, 5e-4, 5)
        assert cfg.b is None

    def test_config_file_and_override(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "geometry": {"radius": 60e-9, "g": 0.5, "b": 2e-4},
                    "solver": {"n_theta": 499},
                }
            )
        )
        parser = build_parser()
        args = parser.parse_args(["phase", "--config", str(path), "--radius", "70e-9"])
        cfg = config_from_args(args)
        assert cfg.g == 0.5
        assert cfg.n_theta == 499
        assert cfg.radius == 70e-9  # flag wins

    def test_stage_gating(self, tmp_path):
        from aragospot.cli import main

        out = tmp_path / "mat_only"
        rc = main(["material", "--out", str(out), "--radius", "5e-8"])
        assert rc == 0
        produced = {p.name for p in out.iterdir()}
        assert "material.txt" in produced
        assert "potential_curve.txt" not in produced
        assert "phase_profile.txt" not in produced

    def test_end_to_end_main(self, tmp_path, capsys):
        from aragospot.cli import main

        rc = main(
            [
                "phase",
                "--out", str(tmp_path / "cli_out"),
                "--radius", "5e-8",
                "--seedless",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "c52_m52" in out
        manifest = json.loads((tmp_path / "cli_out" / "manifest.json").read_text())
        assert manifest["deterministic"] is True
        assert manifest["constants_version"] == "CODATA-2018"
