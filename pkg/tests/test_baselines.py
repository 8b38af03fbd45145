import numpy as np
import pytest

from feesim.baselines import (
    episode_seed,
    evaluate_policy,
    match_peer_policy,
    proportional_policy,
    random_search_agent,
    run_episode,
    snapshot_fee_policy,
    static_policy,
)
from feesim.env import make_env
from feesim.synth import HUB_BASE_FEE, HUB_FEE_RATE


@pytest.fixture()
def env(synth_graph):
    return make_env(synth_graph, node_index="97851", episode_length=5)


class TestStaticPolicies:
    def test_static_emits_constant(self, env):
        policy = static_policy(env, alpha=1, beta=1000)
        obs = env.reset(seed=0)
        a1 = policy.act(obs)
        a2 = policy.act(obs * 2)
        assert np.array_equal(a1, a2)
        assert np.array_equal(a1, np.array([1.0] * 6 + [1000.0] * 6))

    def test_static_clips_to_bounds(self, env):
        policy = static_policy(env, alpha=64065.05, beta=277928.18)
        action = policy.act(env.reset(seed=0))
        assert env.action_space().contains(action)
        assert np.array_equal(action, np.array([1000.0] * 6 + [10000.0] * 6))

    def test_snapshot_policy_uses_center_fees(self, env):
        policy = snapshot_fee_policy(env)
        action = policy.act(env.reset(seed=0))
        # synthetic hubs carry fees above the action bounds, so they clip
        assert HUB_FEE_RATE > env.config.fee_rate_upper
        assert HUB_BASE_FEE > env.config.base_fee_upper
        assert np.array_equal(action[:6], np.full(6, env.config.fee_rate_upper))
        assert np.array_equal(action[6:], np.full(6, float(env.config.base_fee_upper)))

    def test_match_peer_copies_peer_fees(self, env):
        policy = match_peer_policy(env)
        action = policy.act(env.reset(seed=0))
        expected_alphas = [p.fee_rate for p in env.peer_policies]
        expected_betas = [float(p.base_fee) for p in env.peer_policies]
        assert list(action[:6]) == expected_alphas
        assert list(action[6:]) == expected_betas
        assert env.action_space().contains(action)


class TestProportionalPolicy:
    def test_formula_endpoints(self, env):
        policy = proportional_policy(env, alpha_max=1000)
        caps = env.capacities.astype(np.float64)
        full = np.concatenate([caps, np.zeros(6)])
        empty = np.concatenate([np.zeros(6), np.zeros(6)])
        half = np.concatenate([caps / 2, np.zeros(6)])
        assert np.array_equal(policy.act(full)[:6], np.zeros(6))
        assert np.array_equal(policy.act(empty)[:6], np.full(6, 1000.0))
        assert np.array_equal(policy.act(half)[:6], np.full(6, 500.0))

    def test_beta_always_zero(self, env):
        policy = proportional_policy(env)
        obs = env.reset(seed=1)
        assert np.array_equal(policy.act(obs)[6:], np.zeros(6))

    def test_defaults_to_rate_upper(self, env):
        assert proportional_policy(env).alpha_max == env.config.fee_rate_upper

    def test_deterministic_in_observation(self, env):
        policy = proportional_policy(env)
        obs = env.reset(seed=2)
        assert np.array_equal(policy.act(obs), policy.act(obs.copy()))


class TestEvaluatePolicy:
    def test_zero_policy_zero_income(self, env):
        result = evaluate_policy(env, static_policy(env, 0, 0), seeds=(0, 1))
        assert result.mean == 0.0
        assert result.std == 0.0

    def test_gamma_zero_is_first_step_reward(self, env):
        policy = static_policy(env, alpha=1, beta=1000)
        result = evaluate_policy(env, policy, gamma=0.0, seeds=(0, 1, 2))
        firsts = []
        for seed in (0, 1, 2):
            env.reset(seed=episode_seed(seed, 0))
            firsts.append(float(env.step(policy.act(None)).reward))
        assert result.mean == pytest.approx(np.mean(firsts))

    def test_reproducible(self, env):
        policy = static_policy(env, alpha=1, beta=1000)
        a = evaluate_policy(env, policy, seeds=(0, 1))
        b = evaluate_policy(env, policy, seeds=(0, 1))
        assert a.rows == b.rows

    def test_positive_income_with_spread(self, env):
        result = evaluate_policy(env, static_policy(env, 1, 1000), seeds=(0, 1, 2, 3, 4))
        assert result.mean > 0
        assert result.std > 0


class TestRandomSearch:
    def test_budget_one_returns_first_sample(self, env):
        action, income = random_search_agent(env, budget=1, seed=7)
        rng = np.random.default_rng(7)
        expected = env.action_space().sample(rng)
        assert np.array_equal(action, expected)
        assert income == run_episode(env, _Static(expected), seed=7)

    def test_deterministic(self, env):
        a1, i1 = random_search_agent(env, budget=5, seed=3)
        a2, i2 = random_search_agent(env, budget=5, seed=3)
        assert np.array_equal(a1, a2)
        assert i1 == i2

    def test_improves_over_budget_one(self, env):
        _, one = random_search_agent(env, budget=1, seed=11)
        _, twenty = random_search_agent(env, budget=20, seed=11)
        assert twenty >= one

    def test_budget_validation(self, env):
        with pytest.raises(ValueError):
            random_search_agent(env, budget=0, seed=0)


class _Static:
    def __init__(self, action):
        self.action = action

    def act(self, obs):
        return self.action
