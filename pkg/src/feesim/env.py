"""Episodic fee-setting environment over a center node's channels.

Observations are (b_1..b_k, m_1..m_k): the center-side channel balances
after the round and the amounts routed through each channel during it.
Actions are (alpha_1..alpha_k, beta_1..beta_k): the fee rate (ppm) and
base fee (msat) the center sets per channel for the next round. Reward is
the fee income implied by the round: sum_i round(alpha_i*m_i/1e6) +
beta_i*n_i, in msat.

Channels are ordered by peer node id; only the center's side of each
channel is controlled, peers keep their snapshot policies. Episodes are
deterministic given (config, seed, action sequence).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatchError, NodeHasNoChannelsError
from .graph import NetworkGraph, localize, ppm_fee
from .simulate import SimulationReport, simulate_round
from .snapshot import BalanceInitMode, HalfHalf, UniformRandom
from .traffic import TrafficSpec, default_traffic


@dataclass(frozen=True)
class EnvConfig:
    node_index: str = "76620"
    localization_size: int = 100
    fee_rate_upper: float = 1000.0
    base_fee_upper: int = 10000
    traffic: TrafficSpec = field(default_factory=default_traffic)
    episode_length: int = 200
    gamma: float = 0.99
    balance_init: BalanceInitMode = field(default_factory=HalfHalf)
    seed: int = 0
    charge_sender_fee: bool = False
    prefilter: bool = True

    def __post_init__(self):
        if self.localization_size < 1:
            raise ValueError("localization_size must be >= 1")
        if self.fee_rate_upper <= 0 or self.base_fee_upper <= 0:
            raise ValueError("action upper bounds must be positive")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")


@dataclass(frozen=True)
class ActionSpace:
    """Box of valid actions: k fee rates in [0, fee_rate_upper), then k
    base fees in [0, base_fee_upper). Clipping treats the bounds as a
    closed hull, so an exact upper bound survives unflagged."""

    k: int
    fee_rate_upper: float
    base_fee_upper: int

    @property
    def shape(self) -> tuple[int]:
        return (2 * self.k,)

    @property
    def low(self) -> np.ndarray:
        return np.zeros(2 * self.k, dtype=np.float64)

    @property
    def high(self) -> np.ndarray:
        return np.concatenate(
            [
                np.full(self.k, float(self.fee_rate_upper)),
                np.full(self.k, float(self.base_fee_upper)),
            ]
        )

    def contains(self, action) -> bool:
        arr = np.asarray(action, dtype=np.float64)
        return arr.shape == self.shape and bool(
            (arr >= self.low).all() and (arr <= self.high).all()
        )

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)


@dataclass
class StepResult:
    observation: np.ndarray
    reward: int
    done: bool
    info: dict


def compute_reward(report: SimulationReport, action) -> int:
    """Fee income implied by a round: sum round(alpha_i*m_i/1e6) + beta_i*n_i."""
    k = report.k
    arr = np.asarray(action, dtype=np.float64)
    if arr.shape != (2 * k,):
        raise DimensionMismatchError(
            f"action length {arr.shape} does not match 2k={2 * k}"
        )
    total = 0
    for i in range(k):
        m_i = int(report.routed_amounts[i])
        n_i = int(report.routed_counts[i])
        total += ppm_fee(float(arr[i]), m_i) + int(arr[k + i]) * n_i
    return total


class FeeEnv:
    """reset/step environment over a localized payment-channel network."""

    def __init__(self, graph: NetworkGraph, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        self._template = localize(graph, self.config.node_index, self.config.localization_size)
        self.center = self.config.node_index
        self.channel_indices = tuple(self._template.node_channels(self.center))
        if not self.channel_indices:
            raise NodeHasNoChannelsError(f"node {self.center} has no channels after localization")
        self.k = len(self.channel_indices)
        center_idx = self._template.node_index(self.center)
        self.capacities = np.array(
            [self._template.cap[c] for c in self.channel_indices], dtype=np.int64
        )
        self.peers = tuple(
            self._template.payment_channel(c).peer_of(self.center) for c in self.channel_indices
        )
        # snapshot-time policies, per channel: the center's own and the peer's
        self.snapshot_policies = tuple(
            self._template.policy(c, self.center) for c in self.channel_indices
        )
        self.peer_policies = tuple(
            self._template.policy(c, peer) for c, peer in zip(self.channel_indices, self.peers)
        )
        self._active = set(self.channel_indices)
        center_i = center_idx
        self._center_edges = np.array(
            [2 * c if self._template.ea[c] == center_i else 2 * c + 1 for c in self.channel_indices],
            dtype=np.int64,
        )
        space = self.action_space()
        self._low = space.low
        self._high = space.high
        self.g: NetworkGraph | None = None
        self._rng: np.random.Generator | None = None
        self._step_count = 0

    def action_space(self) -> ActionSpace:
        return ActionSpace(
            k=self.k,
            fee_rate_upper=self.config.fee_rate_upper,
            base_fee_upper=self.config.base_fee_upper,
        )

    @property
    def observation_size(self) -> int:
        return 2 * self.k

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a fresh episode; identical seeds give identical episodes."""
        if seed is None:
            seed = self.config.seed
        root = np.random.SeedSequence(int(seed))
        balance_seq, traffic_seq = root.spawn(2)
        self.g = self._template.copy()
        mode = self.config.balance_init
        if isinstance(mode, UniformRandom) and mode.seed is None:
            self.g.init_balances(mode, rng=np.random.default_rng(balance_seq))
        else:
            self.g.init_balances(mode)
        self._rng = np.random.default_rng(traffic_seq)
        self._step_count = 0
        balances = self._center_balances()
        return np.concatenate([balances, np.zeros(self.k, dtype=np.int64)])

    def _center_balances(self) -> np.ndarray:
        return np.array(
            [self.g.balance(c, self.center) for c in self.channel_indices], dtype=np.int64
        )

    def _apply_action(self, action) -> tuple[np.ndarray, np.ndarray, bool]:
        arr = np.asarray(action, dtype=np.float64)
        if arr.shape != (2 * self.k,):
            raise DimensionMismatchError(
                f"action length {arr.shape} does not match 2k={2 * self.k}"
            )
        clipped = bool((arr < self._low).any() or (arr > self._high).any())
        if clipped:
            arr = np.clip(arr, self._low, self._high)
        alphas = arr[: self.k]
        betas = np.floor(arr[self.k :] + 0.5).astype(np.int64)  # base fees are integer msat
        edges = self._center_edges
        if not (
            np.array_equal(self.g.rate_dir[edges], alphas)
            and np.array_equal(self.g.base_dir[edges], betas)
        ):
            self.g.rate_dir[edges] = alphas
            self.g.base_dir[edges] = betas
            self.g.fee_version += 1
        return alphas, betas, clipped

    def step(self, action) -> StepResult:
        """Apply the action, run one traffic round, and report the outcome."""
        if self.g is None:
            raise RuntimeError("reset() must be called before step()")
        alphas, betas, clipped = self._apply_action(action)
        report = simulate_round(
            self.g,
            self.config.traffic,
            self.center,
            active_set=self._active,
            rng=self._rng,
            prefilter=self.config.prefilter,
            charge_sender_fee=self.config.charge_sender_fee,
        )
        applied = np.concatenate([alphas, betas.astype(np.float64)])
        reward = compute_reward(report, applied)
        self._step_count += 1
        done = self._step_count >= self.config.episode_length
        observation = np.concatenate([report.balances, report.routed_amounts])
        info = {
            "settled": report.settled,
            "failed": report.failed,
            "routed_counts": [int(v) for v in report.routed_counts],
            "routed_amounts": [int(v) for v in report.routed_amounts],
            "action_clipped": clipped,
            "applied_action": [float(a) for a in alphas] + [int(b) for b in betas],
            "step": self._step_count,
        }
        return StepResult(observation=observation, reward=int(reward), done=done, info=info)

    def config_payload(self) -> dict:
        """Resolved configuration, JSON-friendly (for the wire and manifests)."""
        cfg = self.config
        mode = cfg.balance_init
        if isinstance(mode, HalfHalf):
            init = {"mode": "half"}
        elif isinstance(mode, UniformRandom):
            init = {"mode": "uniform", "seed": mode.seed}
        else:
            init = {"mode": "manual"}
        return {
            "node_index": cfg.node_index,
            "localization_size": cfg.localization_size,
            "fee_rate_upper": cfg.fee_rate_upper,
            "base_fee_upper": cfg.base_fee_upper,
            "traffic": [
                {"count": e.count, "amount_msat": e.amount, "epsilon": e.epsilon}
                for e in cfg.traffic.entries
            ],
            "episode_length": cfg.episode_length,
            "gamma": cfg.gamma,
            "balance_init": init,
            "seed": cfg.seed,
            "k": self.k,
            "charge_sender_fee": cfg.charge_sender_fee,
        }


def make_env(graph: NetworkGraph, config: EnvConfig | None = None, **overrides) -> FeeEnv:
    """Build an environment, optionally overriding config fields."""
    cfg = config or EnvConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    return FeeEnv(graph, cfg)
