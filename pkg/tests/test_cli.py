import json
import subprocess
import sys

import numpy as np
import pytest

from hydrosim.cli import main
from hydrosim.config import data_path


@pytest.fixture()
def short_scenario(tmp_path):
    cfg = {
        "pipe_waypoints": [[0, 0, 9.7], [5, 0, 9.7]],
        "pipe_radius": 0.3,
        "seafloor_depth": 10.0,
        "initial_pose": [0, 0, 7.7, 0, 0, 0],
        "altitude_above_pipe": 2.0,
        "max_steps": 6,
        "goal_tolerance": 0.5,
        "seed": 0,
    }
    path = tmp_path / "short.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def identity_tum(path, n=30):
    with open(path, "w") as f:
        for k in range(n):
            f.write(f"{k * 0.1:.6f} {k * 0.5} {np.sin(k * 0.3):.6f} {0.05 * k} 0 0 0 1\n")


class TestBench:
    def test_identical_files_zero_report(self, tmp_path, capsys):
        gt = tmp_path / "gt.tum"
        identity_tum(gt)
        rc = main(["bench", "--gt", str(gt), "--est", str(gt), "--align", "sim3"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "| APE[m] |" in out
        assert "**0**" in out

    def test_json_output(self, tmp_path, capsys):
        gt = tmp_path / "gt.tum"
        est = tmp_path / "est.tum"
        identity_tum(gt)
        identity_tum(est)
        out_file = tmp_path / "report.json"
        rc = main(["bench", "--gt", str(gt), "--est", str(est), "--out", str(out_file)])
        assert rc == 0
        data = json.loads(out_file.read_text())
        assert data[0]["ape_translation_m"]["rmse"] == pytest.approx(0.0, abs=1e-12)

    def test_missing_file_exit_2(self, tmp_path, capsys):
        rc = main(["bench", "--gt", str(tmp_path / "none.tum"), "--est", str(tmp_path / "none.tum")])
        assert rc == 2


class TestValidate:
    def test_good_configs(self, capsys):
        rc = main(["validate", "--vehicle", str(data_path("bluerov2_heavy.json")),
                   "--scenario", str(data_path("pipe20.json")),
                   "--water", str(data_path("ocean_water.json")),
                   "--scene", str(data_path("demo_scene.json"))])
        assert rc == 0
        assert "OK" in capsys.readouterr().out

    def test_negative_mass_exit_2_with_field_path(self, tmp_path, capsys):
        cfg = json.loads(open(data_path("bluerov2_heavy.json")).read())
        cfg["rigid_body"]["mass"] = -5.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cfg))
        rc = main(["validate", "--vehicle", str(bad)])
        assert rc == 2
        err = capsys.readouterr().err
        assert "rigid_body.mass" in err

    def test_nothing_given_exit_2(self, capsys):
        assert main(["validate"]) == 2


class TestRender:
    def test_writes_ppm_and_pgm(self, tmp_path, capsys):
        out = tmp_path / "frame.ppm"
        depth = tmp_path / "frame.pgm"
        rc = main(["render", "--scene", str(data_path("demo_scene.json")),
                   "--water", str(data_path("ocean_water.json")),
                   "--pose", "2,0,7.7,0,0,0",
                   "--out", str(out), "--depth-out", str(depth)])
        assert rc == 0
        from hydrosim.camera import read_pgm16, read_ppm

        rgb = read_ppm(out)
        assert rgb.shape == (180, 320, 3)
        d = read_pgm16(depth)
        assert np.isfinite(d).any()

    def test_bad_pose_exit_2(self, tmp_path):
        rc = main(["render", "--scene", str(data_path("demo_scene.json")),
                   "--pose", "1,2,3", "--out", str(tmp_path / "x.ppm")])
        assert rc == 2


class TestRun:
    def test_run_writes_outputs(self, tmp_path, short_scenario, capsys):
        out_dir = tmp_path / "run1"
        rc = main(["run", "--scenario", short_scenario, "--seed", "3",
                   "--out", str(out_dir), "--synth-est"])
        assert rc == 0
        assert (out_dir / "gt.tum").exists()
        assert (out_dir / "scores.csv").exists()
        assert (out_dir / "synth_est.tum").exists()
        frames = list((out_dir / "frames").glob("*.ppm"))
        assert frames  # render defaults on: one frame per decision step
        stdout = capsys.readouterr().out
        assert "episode finished" in stdout

    def test_run_seed_determinism_byte_identical(self, tmp_path, short_scenario):
        outs = []
        for name in ("a", "b"):
            out_dir = tmp_path / name
            rc = main(["run", "--scenario", short_scenario, "--seed", "7",
                       "--out", str(out_dir), "--no-render"])
            assert rc == 0
            outs.append((
                (out_dir / "gt.tum").read_bytes(),
                (out_dir / "scores.csv").read_bytes(),
            ))
        assert outs[0][0] == outs[1][0]
        assert outs[0][1] == outs[1][1]


class TestUsage:
    def test_unknown_flag_exit_2(self):
        proc = subprocess.run([sys.executable, "-m", "hydrosim.cli", "bench", "--bogus"],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert "usage" in proc.stderr.lower()

    def test_console_entry_point(self):
        proc = subprocess.run(["hydrosim", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "bench" in proc.stdout


class TestBenchFlags:
    def test_rpe_delta_and_max_dt(self, tmp_path, capsys):
        gt = tmp_path / "gt.tum"
        est = tmp_path / "est.tum"
        identity_tum(gt, n=40)
        identity_tum(est, n=40)
        rc = main(["bench", "--gt", str(gt), "--est", str(est),
                   "--rpe-delta", "5", "--max-dt", "0.01", "--align", "none",
                   "--traj-name", "Line", "--algo-name", "Synth"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "| Line | Synth |" in out

    def test_rpe_delta_too_large_exit_2(self, tmp_path, capsys):
        gt = tmp_path / "gt.tum"
        identity_tum(gt, n=6)
        rc = main(["bench", "--gt", str(gt), "--est", str(gt), "--rpe-delta", "10"])
        assert rc == 2


class TestDivergenceExitCode:
    def test_run_exit_3_on_divergence(self, tmp_path, short_scenario, capsys):
        # an absurd constant disturbance overflows the dynamics within a step
        cfg = json.loads(open(data_path("bluerov2_heavy.json")).read())
        cfg["disturbance"] = {
            "kind": "constant",
            "components": [{"amplitude": [1e308, 0, 0, 0, 0, 0]}],
        }
        vehicle = tmp_path / "unstable.json"
        vehicle.write_text(json.dumps(cfg))
        rc = main(["run", "--vehicle", str(vehicle), "--scenario", short_scenario,
                   "--out", str(tmp_path / "div"), "--no-render"])
        assert rc == 3
        assert "diverged" in capsys.readouterr().err
