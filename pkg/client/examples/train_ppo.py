#!/usr/bin/env python3
"""Train an off-the-shelf PPO agent against the remote fee environment.

The wrapper class below adapts RemoteEnv to the gymnasium interface that
stable-baselines3 expects; the learning algorithm itself comes entirely
from stable-baselines3. Start from a snapshot:

    python train_ppo.py --snapshot snap.csv --merchants merchants.txt \
        --node 97851 --timesteps 20000
"""

import argparse
import sys

import numpy as np

from feesim_client import RemoteEnv

try:
    import gymnasium

    class GymRemoteEnv(gymnasium.Env):
        """gymnasium adapter: float32 boxes and the 5-tuple step contract."""

        def __init__(self, remote: RemoteEnv):
            self.remote = remote
            self.action_space = gymnasium.spaces.Box(
                low=remote.action_space.low.astype(np.float32),
                high=remote.action_space.high.astype(np.float32),
                dtype=np.float32,
            )
            self.observation_space = gymnasium.spaces.Box(
                low=0.0, high=np.inf, shape=(2 * remote.k,), dtype=np.float64
            )

        def reset(self, *, seed=None, options=None):
            obs = self.remote.reset(seed=seed)
            return obs.astype(np.float64), {}

        def step(self, action):
            obs, reward, done, info = self.remote.step(np.asarray(action, dtype=np.float64))
            return obs.astype(np.float64), float(reward), done, False, info

        def close(self):
            self.remote.close()

except ImportError:
    gymnasium = None


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--snapshot", required=True)
    parser.add_argument("--merchants")
    parser.add_argument("--node", default="76620")
    parser.add_argument("--episode-length", type=int, default=200)
    parser.add_argument("--timesteps", type=int, default=20_000)
    args = parser.parse_args()

    command = [
        sys.executable, "-m", "feesim.cli", "serve", "--stdio",
        "--snapshot", args.snapshot, "--node", args.node,
        "--episode-length", str(args.episode_length),
    ]
    if args.merchants:
        command += ["--merchants", args.merchants]

    if gymnasium is None:
        print("gymnasium is not installed; install gymnasium and stable-baselines3 to train")
        return 1
    try:
        from stable_baselines3 import PPO
    except ImportError:
        print("stable-baselines3 is not installed; pip install stable-baselines3")
        return 1

    env = GymRemoteEnv(RemoteEnv(command=command))
    model = PPO("MlpPolicy", env, verbose=1)
    model.learn(total_timesteps=args.timesteps)
    model.save("ppo_fee_policy")
    env.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
