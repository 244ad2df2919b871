import csv
import os

import numpy as np
import pytest

from hydrosim_gym import ENV_ID, EnvSpec, EpisodeTerminatedError, PipeFollowEnv, make


def fixed_action_script(n=50, seed=7):
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.35, 0.35, (n, 2))


def read_reward_column(csv_path):
    with open(csv_path) as f:
        return [float(row["reward"]) for row in csv.DictReader(f)]


class TestMake:
    def test_registry(self, server):
        host, port = server
        env = make(ENV_ID, host=host, port=port)
        assert isinstance(env, PipeFollowEnv)
        env.close()

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            make("NopeEnv-v0")

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            EnvSpec(observation_mode="thermal")


class TestConnection:
    def test_unreachable_server_raises_fast(self):
        import time

        env = PipeFollowEnv(EnvSpec(host="127.0.0.1", port=1, timeout=2.0))
        t0 = time.monotonic()
        with pytest.raises(ConnectionError):
            env.reset()
        assert time.monotonic() - t0 < 5.0


class TestObservationModes:
    def test_state_mode_twelve_vector(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="state", session_dir=str(tmp_path / "state"))
        obs, info = env.reset(seed=1)
        assert obs.shape == (12,)
        assert obs[2] == pytest.approx(7.7)  # depth component of eta
        assert np.allclose(obs[6:], 0.0)  # starts at rest
        env.close()

    def test_rgb_mode_image(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="rgb", session_dir=str(tmp_path / "rgb"))
        obs, _ = env.reset(seed=1)
        assert obs.shape == (180, 320, 3)
        assert obs.dtype == np.float32
        assert obs.min() >= 0.0 and obs.max() <= 1.0
        assert obs.std() > 0.0  # pipe and floor are visible, not a flat frame
        env.close()

    def test_rgb_depth_mode(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="rgb+depth", session_dir=str(tmp_path / "rgbd"))
        obs, _ = env.reset(seed=1)
        assert set(obs) == {"rgb", "depth"}
        assert obs["depth"].shape == (180, 320)
        finite = np.isfinite(obs["depth"])
        assert finite.any()
        assert obs["depth"][finite].min() > 1.0  # nothing closer than the pipe
        env.close()


class TestResetDeterminism:
    def test_same_seed_pixel_identical(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="rgb", session_dir=str(tmp_path / "det"))
        a, _ = env.reset(seed=7)
        b, _ = env.reset(seed=7)
        assert np.array_equal(a, b)
        env.close()


class TestStep:
    def test_straight_action_reward_near_ten(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="state", session_dir=str(tmp_path / "stp"))
        env.reset(seed=0)
        obs, reward, terminated, truncated, info = env.step([0.0, 0.0])
        assert reward > 9.0
        assert not terminated
        assert {"e_p", "e_psi", "arc_progress", "reason", "step"} <= set(info)
        env.close()

    def test_max_steps_truncates_not_terminates(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="state", session_dir=str(tmp_path / "trunc"))
        env.reset(seed=0)
        outcome = None
        for _ in range(3):
            _, _, terminated, truncated, info = env.step([0.0, 0.3])
            outcome = (terminated, truncated, info["reason"])
        assert outcome == (False, True, "max_steps")
        env.close()

    def test_divergent_actions_terminate_pipe_lost(self, server, tmp_path):
        import json

        scen = {
            "pipe_waypoints": [[0, 0, 9.7], [8, 0, 9.7]],
            "pipe_radius": 0.3,
            "initial_pose": [0, 0, 7.7, 0, 0, 0],
            "max_steps": 20,
            "seed": 0,
        }
        path = tmp_path / "div.json"
        path.write_text(json.dumps(scen))
        host, port = server
        env = make(host=host, port=port, scenario=str(path),
                   observation_mode="state", session_dir=str(tmp_path / "div"))
        env.reset(seed=0)
        terminated = truncated = False
        info = {}
        steps = 0
        while not (terminated or truncated):
            _, _, terminated, truncated, info = env.step([1.0, 0.0])
            steps += 1
            assert steps <= 8
        assert terminated and not truncated
        assert info["reason"] == "pipe_lost"
        env.close()

    def test_step_after_terminate_raises(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="state", session_dir=str(tmp_path / "term"))
        env.reset(seed=0)
        done = False
        while not done:
            _, _, terminated, truncated, _ = env.step([0.0, 0.3])
            done = terminated or truncated
        with pytest.raises(EpisodeTerminatedError):
            env.step([0.0, 0.0])
        env.close()

    def test_raw_actions_transmitted_clamping_is_server_side(self, server, short_scenario, tmp_path):
        host, port = server
        env = make(host=host, port=port, scenario=short_scenario,
                   observation_mode="state", session_dir=str(tmp_path / "clamp"))
        env.reset(seed=0)
        # out-of-range action: the binding forwards it untouched and the
        # server clamps, so this must behave exactly like a = (1, 0)
        _, r_big, _, _, info_big = env.step([5.0, 0.0])
        env.reset(seed=0)
        _, r_one, _, _, info_one = env.step([1.0, 0.0])
        assert r_big == r_one
        assert info_big["e_p"] == info_one["e_p"]
        env.close()


class TestServerCsvPassthrough:
    def test_reward_sequence_bit_exact_vs_server_csv(self, server, tmp_path):
        """Acceptance: seed 7 + fixed 50-action script -> binding rewards
        equal the server-side episode CSV bit-exactly."""
        host, port = server
        session_dir = str(tmp_path / "passthrough")
        env = make(host=host, port=port, observation_mode="state",
                   seed=7, session_dir=session_dir)
        env.reset(seed=7)
        rewards = []
        for action in fixed_action_script(50, seed=7):
            _, reward, terminated, truncated, _ = env.step(action)
            rewards.append(reward)
            if terminated or truncated:
                break
        env.close()
        csv_rewards = read_reward_column(os.path.join(session_dir, "ep001_scores.csv"))
        assert len(csv_rewards) == len(rewards)
        for mine, server_side in zip(rewards, csv_rewards):
            assert mine == server_side  # bit-exact float equality
        print(f"[ACCEPTANCE] gym-passthrough: PASS ({len(rewards)} rewards bit-exact vs server CSV)")


class TestRandomAgentExample:
    def test_smoke(self, server, short_scenario, capsys, monkeypatch, tmp_path):
        import sys

        from hydrosim_gym import random_agent

        host, port = server
        monkeypatch.chdir(tmp_path)  # default session dir lands in tmp
        monkeypatch.setattr(sys, "argv", [
            "random_agent", "--host", host, "--port", str(port),
            "--episodes", "1", "--seed", "3", "--scenario", short_scenario,
        ])
        random_agent.main()
        out = capsys.readouterr().out
        assert "episode 0:" in out
