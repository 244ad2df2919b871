"""Minimal random-agent example against a running hydrosim server.

    hydrosim serve --port 7777 &
    python -m hydrosim_gym.random_agent --port 7777 --episodes 2
"""
import argparse

import numpy as np

from . import make


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7777)
    parser.add_argument("--episodes", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", default="state", choices=("state", "rgb", "rgb+depth"))
    parser.add_argument("--scenario", default=None, help="scenario JSON path (server default when omitted)")
    args = parser.parse_args()

    env = make(host=args.host, port=args.port, seed=args.seed, observation_mode=args.mode,
               scenario=args.scenario)
    rng = np.random.default_rng(args.seed)
    try:
        for ep in range(args.episodes):
            obs, _ = env.reset(seed=args.seed + ep)
            total, steps = 0.0, 0
            while True:
                action = rng.uniform(-0.3, 0.3, 2)
                obs, reward, terminated, truncated, info = env.step(action)
                total += reward
                steps += 1
                if terminated or truncated:
                    print(f"episode {ep}: steps={steps} return={total:.2f} reason={info['reason']}")
                    break
    finally:
        env.close()


if __name__ == "__main__":
    main()
