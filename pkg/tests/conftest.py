import numpy as np
import pytest

from feesim.graph import NetworkGraph
from feesim.snapshot import FeePolicy, PaymentChannel
from feesim.synth import SynthConfig, synthetic_network, synthetic_records
from feesim.synth import write_merchants, write_snapshot_csv

BTC = 10**11  # msat


def make_channel(u, v, capacity, policy_u=None, policy_v=None, balance_u=None, min_htlc=0):
    """Channel with explicit per-endpoint policies and optional balance for u."""
    a, b = sorted((u, v))
    policy_u = policy_u or FeePolicy(0.0, 0)
    policy_v = policy_v or FeePolicy(0.0, 0)
    if balance_u is None:
        balance_u = capacity // 2
    if a == u:
        return PaymentChannel(
            node_a=a, node_b=b, capacity=capacity,
            policy_a=policy_u, policy_b=policy_v,
            balance_a=balance_u, balance_b=capacity - balance_u,
            min_htlc=min_htlc,
        )
    return PaymentChannel(
        node_a=a, node_b=b, capacity=capacity,
        policy_a=policy_v, policy_b=policy_u,
        balance_a=capacity - balance_u, balance_b=balance_u,
        min_htlc=min_htlc,
    )


def figure_graph():
    """Four-route toy network: sender bob, receiver alice, three two-hop
    paths with fees 1.4 / 2.4 BTC and one underfunded cheap path."""
    free = FeePolicy(0.0, 0)
    eve = FeePolicy(200000.0, 1 * BTC)
    mall = FeePolicy(200000.0, 2 * BTC)
    trent = FeePolicy(100000.0, BTC // 2)
    channels = [
        make_channel("bob", "eve", 10 * BTC, free, free),
        make_channel("eve", "alice", 10 * BTC, eve, free),
        make_channel("bob", "mall", 10 * BTC, free, free),
        make_channel("mall", "alice", 10 * BTC, mall, free),
        make_channel("bob", "trent", 10 * BTC, free, free),
        make_channel("trent", "alice", 3 * BTC, trent, free),  # trent side: 1.5 BTC
    ]
    return NetworkGraph(channels, merchants=["alice"])


def random_graph(rng, max_nodes=10, max_channels=20, min_htlc_choices=(0, 0, 1000)):
    """Random small network for oracle comparisons."""
    n = int(rng.integers(2, max_nodes + 1))
    ids = [f"n{i:02d}" for i in range(n)]
    pairs = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    count = int(rng.integers(1, min(max_channels, len(pairs)) + 1))
    channels = []
    for u, v in pairs[:count]:
        cap = int(rng.integers(1, 2_000_001))
        bal_u = int(rng.integers(0, cap + 1))
        pol_u = FeePolicy(float(rng.integers(0, 500_001)), int(rng.integers(0, 100_001)))
        pol_v = FeePolicy(float(rng.integers(0, 500_001)), int(rng.integers(0, 100_001)))
        channels.append(
            make_channel(
                u, v, cap, pol_u, pol_v, balance_u=bal_u,
                min_htlc=int(rng.choice(min_htlc_choices)),
            )
        )
    merchants = [i for i in ids if rng.random() < 0.3]
    return NetworkGraph(channels, merchants=merchants)


@pytest.fixture(scope="session")
def synth_graph():
    return synthetic_network()


@pytest.fixture(scope="session")
def snapshot_files(tmp_path_factory):
    directory = tmp_path_factory.mktemp("synth")
    records, merchants = synthetic_records(SynthConfig())
    snapshot = directory / "snapshot.csv"
    merch = directory / "merchants.txt"
    write_snapshot_csv(records, snapshot)
    write_merchants(merchants, merch)
    return str(snapshot), str(merch)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
