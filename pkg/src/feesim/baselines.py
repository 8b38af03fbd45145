"""Heuristic fee policies, policy evaluation, and a random-search agent.

Policies map observations to in-bounds actions. The static and match-peer
variants emit a fixed vector (peers never change fees during an episode);
the proportional variant recomputes rates from the current balances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import ActionSpace, FeeEnv


def _clip_to_space(action: np.ndarray, space: ActionSpace) -> np.ndarray:
    return np.clip(np.asarray(action, dtype=np.float64), space.low, space.high)


@dataclass
class StaticPolicy:
    """Emits the same action every step."""

    name: str
    action: np.ndarray

    def act(self, observation) -> np.ndarray:
        return self.action.copy()


@dataclass
class ProportionalPolicy:
    """Zero base fee; rate scales with how depleted each channel is:
    alpha_i = round(alpha_max * (1 - balance_i / capacity_i))."""

    name: str
    alpha_max: float
    capacities: np.ndarray
    k: int

    def act(self, observation) -> np.ndarray:
        balances = np.asarray(observation[: self.k], dtype=np.float64)
        frac = 1.0 - balances / self.capacities.astype(np.float64)
        alphas = np.floor(self.alpha_max * frac + 0.5)
        return np.concatenate([alphas, np.zeros(self.k)])


def static_policy(env: FeeEnv, alpha: float, beta: float) -> StaticPolicy:
    """Fixed explicit fee rate and base fee on every channel, clipped to bounds."""
    k = env.k
    action = np.concatenate([np.full(k, float(alpha)), np.full(k, float(beta))])
    return StaticPolicy(name="static", action=_clip_to_space(action, env.action_space()))


def snapshot_fee_policy(env: FeeEnv) -> StaticPolicy:
    """Static policy using the center node's own fees from the snapshot."""
    alphas = [p.fee_rate for p in env.snapshot_policies]
    betas = [p.base_fee for p in env.snapshot_policies]
    action = np.array(alphas + betas, dtype=np.float64)
    return StaticPolicy(name="snapshot", action=_clip_to_space(action, env.action_space()))


def match_peer_policy(env: FeeEnv) -> StaticPolicy:
    """Copy each channel peer's fee policy, clipped to the action bounds."""
    alphas = [p.fee_rate for p in env.peer_policies]
    betas = [p.base_fee for p in env.peer_policies]
    action = np.array(alphas + betas, dtype=np.float64)
    return StaticPolicy(name="match-peer", action=_clip_to_space(action, env.action_space()))


def proportional_policy(env: FeeEnv, alpha_max: float | None = None) -> ProportionalPolicy:
    if alpha_max is None:
        alpha_max = env.config.fee_rate_upper
    return ProportionalPolicy(
        name="proportional",
        alpha_max=float(alpha_max),
        capacities=env.capacities.copy(),
        k=env.k,
    )


def episode_seed(seed: int, episode: int) -> int:
    """Stable per-episode reset seed derived from (seed, episode)."""
    return int(np.random.SeedSequence([int(seed), int(episode)]).generate_state(1)[0])


def run_episode(env: FeeEnv, policy, seed: int, gamma: float | None = None) -> float:
    """One episode's discounted income sum(gamma^t * r_t)."""
    if gamma is None:
        gamma = env.config.gamma
    obs = env.reset(seed=seed)
    total = 0.0
    discount = 1.0
    done = False
    while not done:
        result = env.step(policy.act(obs))
        total += discount * result.reward
        discount *= gamma
        obs = result.observation
        done = result.done
    return total


@dataclass
class EvalResult:
    mean: float
    std: float
    rows: list[tuple[int, int, float]]  # (seed, episode, discounted income)


def evaluate_policy(
    env: FeeEnv,
    policy,
    episodes: int = 1,
    gamma: float | None = None,
    seeds=(0, 1, 2, 3, 4),
) -> EvalResult:
    """Run `episodes` episodes per seed; mean/std over all runs."""
    rows: list[tuple[int, int, float]] = []
    for seed in seeds:
        for ep in range(episodes):
            income = run_episode(env, policy, seed=episode_seed(seed, ep), gamma=gamma)
            rows.append((int(seed), ep, income))
    incomes = np.array([r[2] for r in rows])
    return EvalResult(mean=float(incomes.mean()), std=float(incomes.std()), rows=rows)


def random_search_agent(
    env: FeeEnv, budget: int, seed: int = 0, gamma: float | None = None
) -> tuple[np.ndarray, float]:
    """Sample `budget` uniform in-bounds static actions, evaluate each over
    one episode (same reset seed for a fair comparison), return the best."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    space = env.action_space()
    best_action = None
    best_income = -np.inf
    for _ in range(budget):
        action = space.sample(rng)
        income = run_episode(env, StaticPolicy("candidate", action), seed=seed, gamma=gamma)
        if income > best_income:
            best_income = income
            best_action = action
    return best_action, float(best_income)
