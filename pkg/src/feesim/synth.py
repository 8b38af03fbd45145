"""Deterministic synthetic snapshot generation.

Builds a ring-of-communities network: routers on a chorded ring, each
carrying a handful of leaf nodes, plus a few well-connected hub nodes that
bridge nearby ring positions. Hubs exist so that fee-policy experiments
have a node whose traffic share genuinely depends on its fees: with cheap
fees a hub is the shortest cut between its ring arcs, with expensive fees
every pair still has a ring route around it. Roughly a quarter of the
leaves are merchants.

All draws come from one seeded PCG64 stream, so a given config always
produces the identical snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import NetworkGraph
from .snapshot import ChannelRecord, HalfHalf, aggregate_channels, init_balances

BASE_TIMESTAMP = 1_618_185_600  # 2021-04-12

# hub id -> (ring positions of its peers, per-channel capacities in sat)
HUBS: dict[str, tuple[tuple[int, ...], tuple[int, ...]]] = {
    "97851": (
        (3, 6, 9, 12, 15, 18),
        (6_000_000, 5_500_000, 5_000_000, 4_700_000, 3_900_000, 3_054_272),
    ),
    "71555": (
        (30, 33, 36, 39, 42, 45),
        (5_000_000, 4_500_000, 4_000_000, 3_500_000, 2_498_650, 2_000_000),
    ),
    "109618": (
        (55, 58, 61, 64, 67, 70, 73),
        (3_000_000, 2_800_000, 2_600_000, 2_400_000, 2_200_000, 2_000_000, 1_700_000),
    ),
    "76620": (
        (85, 88, 91, 94, 97),
        (3_000_000, 3_000_000, 3_000_000, 3_000_000, 3_000_000),
    ),
}

HUB_FEE_RATE = 2500.0  # ppm; deliberately uncompetitive, like most real nodes
HUB_BASE_FEE = 25000  # msat

_RATES = np.array([1.0, 10.0, 25.0, 50.0, 100.0, 200.0, 500.0])
_RATE_P = np.array([0.15, 0.10, 0.15, 0.30, 0.15, 0.10, 0.05])
_BASES = np.array([0, 100, 500, 1000, 2000])
_BASE_P = np.array([0.05, 0.10, 0.15, 0.55, 0.15])


@dataclass(frozen=True)
class SynthConfig:
    n_routers: int = 100
    leaves_min: int = 4  # per-router leaf count cycles leaves_min..leaves_min+3
    seed: int = 7

    def __post_init__(self):
        if self.n_routers < 100:
            raise ValueError("n_routers must be >= 100 (hub positions assume it)")


def _router_id(i: int) -> str:
    return str(10000 + i)


def _leaf_id(j: int) -> str:
    return str(20000 + j)


class _RecordBuilder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.records: list[ChannelRecord] = []
        self._next_channel = 0

    def _draw_policy(self) -> tuple[float, int]:
        rate = float(self.rng.choice(_RATES, p=_RATE_P))
        base = int(self.rng.choice(_BASES, p=_BASE_P))
        return rate, base

    def add_channel(self, u: str, v: str, capacity_sat: int, policy_u=None, policy_v=None) -> None:
        """Append both directional records of one channel; unspecified
        directional policies are drawn from the stream."""
        channel_id = f"c{self._next_channel}"
        self._next_channel += 1
        pol_u = policy_u if policy_u is not None else self._draw_policy()
        pol_v = policy_v if policy_v is not None else self._draw_policy()
        for src, dst, (rate, base) in ((u, v, pol_u), (v, u, pol_v)):
            self.records.append(
                ChannelRecord(
                    source_id=src,
                    target_id=dst,
                    channel_id=channel_id,
                    capacity=capacity_sat,
                    base_fee=base,
                    fee_rate=rate,
                    min_htlc=1000,
                    last_update=BASE_TIMESTAMP + len(self.records),
                )
            )


def synthetic_records(config: SynthConfig = SynthConfig()) -> tuple[list[ChannelRecord], list[str]]:
    """Generate directed snapshot records and the merchant id list."""
    rng = np.random.default_rng(config.seed)
    builder = _RecordBuilder(rng)
    n = config.n_routers

    # ring backbone plus chords that shorten long arcs
    for i in range(n):
        cap = int(rng.integers(4_000_000, 10_000_001))
        builder.add_channel(_router_id(i), _router_id((i + 1) % n), cap)
    for i in range(0, n, 10):
        cap = int(rng.integers(4_000_000, 10_000_001))
        builder.add_channel(_router_id(i), _router_id((i + n // 4) % n), cap)

    # a few parallel router-router channels to exercise aggregation
    for i in (0, 40, 70):
        cap = int(rng.integers(2_000_000, 4_000_001))
        builder.add_channel(_router_id(i), _router_id((i + 1) % n), cap)

    # leaf communities; capacities skew small like the public network, so a
    # sizable share of leaf channels cannot route the larger amounts
    merchants: list[str] = []
    leaf_counter = 0
    for i in range(n):
        count = config.leaves_min + (i % 4)
        router = _router_id(i)
        prev_leaf = None
        for _ in range(count):
            leaf = _leaf_id(leaf_counter)
            tier = leaf_counter % 10
            if tier < 3:
                cap = int(rng.integers(120_000, 200_001))
            elif tier < 4:
                cap = int(rng.integers(60_000, 100_001))
            elif tier < 6:
                cap = int(rng.integers(200_000, 400_001))
            else:
                cap = int(rng.integers(400_000, 1_200_001))
            builder.add_channel(router, leaf, cap)
            if leaf_counter % 2 == 1 and prev_leaf is not None:
                builder.add_channel(prev_leaf, leaf, int(rng.integers(150_000, 800_001)))
            if leaf_counter % 4 == 0:
                merchants.append(leaf)
            prev_leaf = leaf
            leaf_counter += 1

    # hubs bridging nearby ring positions
    for hub, (positions, capacities) in HUBS.items():
        for pos, cap in zip(positions, capacities):
            builder.add_channel(
                hub,
                _router_id(pos % n),
                cap,
                policy_u=(HUB_FEE_RATE, HUB_BASE_FEE),
            )

    return builder.records, merchants


def synthetic_network(config: SynthConfig = SynthConfig()) -> NetworkGraph:
    """Aggregated synthetic network with half/half balances."""
    records, merchants = synthetic_records(config)
    channels = init_balances(aggregate_channels(records), HalfHalf())
    return NetworkGraph(channels, merchants=merchants)


def write_snapshot_csv(records: list[ChannelRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source_id,target_id,channel_id,capacity,base_fee,fee_rate,min_htlc,last_update\n")
        for r in records:
            rate = int(r.fee_rate) if float(r.fee_rate).is_integer() else r.fee_rate
            fh.write(
                f"{r.source_id},{r.target_id},{r.channel_id},{r.capacity},"
                f"{r.base_fee},{rate},{r.min_htlc},{r.last_update}\n"
            )


def write_merchants(merchants, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in merchants:
            fh.write(f"{m}\n")
