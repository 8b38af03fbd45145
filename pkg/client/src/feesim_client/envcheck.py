"""Gym-style environment contract checker.

Verifies the conventional reset/step surface: declared spaces, observation
shape and membership, step return types, seeded-reset determinism, action
dimension enforcement, and the done flag at the episode boundary. Raises
AssertionError with a readable message on the first violation and returns
the list of checks performed.
"""

from __future__ import annotations

import numpy as np


def check_env(env, seed: int = 0, episode_steps: int | None = None) -> list[str]:
    performed = []

    def check(name, condition, detail=""):
        assert condition, f"env check failed: {name} {detail}"
        performed.append(name)

    action_space = env.action_space
    observation_space = env.observation_space
    check("spaces-declared", action_space is not None and observation_space is not None)
    check(
        "space-shapes-consistent",
        len(action_space.shape) == 1 and len(observation_space.shape) == 1,
    )
    check(
        "bounds-ordered",
        bool(np.all(action_space.low <= action_space.high)),
    )

    obs = env.reset(seed=seed)
    check("reset-returns-array", isinstance(obs, np.ndarray), f"got {type(obs)}")
    check(
        "reset-shape",
        obs.shape == observation_space.shape,
        f"{obs.shape} != {observation_space.shape}",
    )
    check("reset-in-space", observation_space.contains(obs))

    again = env.reset(seed=seed)
    check("reset-seed-deterministic", bool(np.array_equal(obs, again)))

    rng = np.random.default_rng(seed)
    action = action_space.sample(rng)
    check("sampled-action-in-space", action_space.contains(action))
    result = env.step(action)
    check("step-returns-4-tuple", isinstance(result, tuple) and len(result) == 4)
    obs2, reward, done, info = result
    check("step-observation-shape", obs2.shape == observation_space.shape)
    check("step-observation-in-space", observation_space.contains(obs2))
    check("step-reward-numeric", isinstance(reward, (int, float)) and not isinstance(reward, bool))
    check("step-done-bool", isinstance(done, bool))
    check("step-info-dict", isinstance(info, dict))

    bad = np.zeros(action_space.shape[0] + 1)
    try:
        env.step(bad)
    except Exception:
        performed.append("wrong-dimension-rejected")
    else:
        raise AssertionError("env check failed: wrong-dimension-rejected")

    steps = episode_steps if episode_steps is not None else getattr(env, "episode_length", None)
    if steps is not None:
        env.reset(seed=seed)
        flags = [env.step(action_space.sample(rng))[2] for _ in range(int(steps))]
        check("done-only-at-episode-end", not any(flags[:-1]) and flags[-1])
        post = env.reset(seed=seed + 1)
        check("reset-after-done", observation_space.contains(post))

    return performed
