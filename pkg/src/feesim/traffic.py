"""Random transaction generation.

Senders are uniform over all nodes. Receivers follow a two-stage mixture:
with probability epsilon the receiver is uniform over merchants (minus
the sender), otherwise uniform over non-merchants (minus the sender); an
empty branch falls back to the other one. Streams are numpy PCG64
generators, so trajectories are bit-reproducible across platforms for a
fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoEligibleReceiverError
from .graph import NetworkGraph

MSAT_PER_SAT = 1000


@dataclass(frozen=True)
class TrafficEntry:
    """One transaction type: how many payments, of what amount (msat), and
    how strongly receivers skew toward merchants."""

    count: int
    amount: int
    epsilon: float

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.amount <= 0:
            raise ValueError("amount must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")


@dataclass(frozen=True)
class TrafficSpec:
    entries: tuple[TrafficEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("traffic spec needs at least one entry")

    @classmethod
    def from_sat(cls, amounts_sat, counts, epsilons) -> "TrafficSpec":
        """Build a spec from satoshi amounts (converted to msat)."""
        if not (len(amounts_sat) == len(counts) == len(epsilons)):
            raise ValueError("amounts, counts, and epsilons must have equal length")
        return cls(
            tuple(
                TrafficEntry(count=int(c), amount=int(a) * MSAT_PER_SAT, epsilon=float(e))
                for a, c, e in zip(amounts_sat, counts, epsilons)
            )
        )

    @property
    def total_count(self) -> int:
        return sum(e.count for e in self.entries)


def default_traffic() -> TrafficSpec:
    return TrafficSpec.from_sat((10000, 50000, 100000), (10, 10, 10), (0.6, 0.6, 0.6))


@dataclass(frozen=True)
class Transaction:
    amount: int
    sender: str
    receiver: str

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ValueError("sender and receiver must differ")


def _choice_excluding(pool: np.ndarray, exclude: int, rng: np.random.Generator) -> int:
    """Uniform draw from a sorted index array, skipping `exclude` if present.

    Returns -1 when the pool (minus the excluded index) is empty.
    """
    size = len(pool)
    pos = int(np.searchsorted(pool, exclude))
    present = pos < size and pool[pos] == exclude
    if present:
        size -= 1
    if size == 0:
        return -1
    j = int(rng.integers(size))
    if present and j >= pos:
        j += 1
    return int(pool[j])


def _sample_receiver_idx(
    sender_idx: int, g: NetworkGraph, branch_merchant: bool, rng: np.random.Generator
) -> int:
    first = g.merchant_idx if branch_merchant else g.nonmerchant_idx
    second = g.nonmerchant_idx if branch_merchant else g.merchant_idx
    idx = _choice_excluding(first, sender_idx, rng)
    if idx < 0:
        idx = _choice_excluding(second, sender_idx, rng)
    if idx < 0:
        raise NoEligibleReceiverError("graph has no eligible receiver")
    return idx


def sample_receiver(
    sender: str, g: NetworkGraph, epsilon: float, rng: np.random.Generator
) -> str:
    """Sample one receiver for the given sender (never the sender itself)."""
    if g.n < 2:
        raise NoEligibleReceiverError("need at least two nodes")
    sender_idx = g.node_index(sender)
    branch_merchant = bool(rng.random() < epsilon)
    return g.ids[_sample_receiver_idx(sender_idx, g, branch_merchant, rng)]


def sample_spec_indices(
    spec: TrafficSpec, g: NetworkGraph, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample the whole spec's (senders, receivers) as node-index arrays,
    entry order then index order.

    Same distribution as sample_receiver, drawn in three vectorized calls
    (senders, branch choices, receiver positions); only degenerate pools
    fall back to per-transaction draws.
    """
    if g.n < 2:
        raise NoEligibleReceiverError("need at least two nodes")
    total = spec.total_count
    senders = rng.integers(0, g.n, size=total).astype(np.int32)
    eps = np.repeat(
        [e.epsilon for e in spec.entries], [e.count for e in spec.entries]
    )
    merchant_branch = rng.random(total) < eps
    receivers = np.empty(total, dtype=np.int32)
    for branch in (True, False):
        idxs = np.flatnonzero(merchant_branch == branch)
        if len(idxs) == 0:
            continue
        pool = g.merchant_idx if branch else g.nonmerchant_idx
        other = g.nonmerchant_idx if branch else g.merchant_idx
        if len(pool) == 0:
            pool, other = other, pool
        s = senders[idxs].astype(np.int64)
        pos = np.searchsorted(pool, s)
        present = (pos < len(pool)) & (pool[np.minimum(pos, len(pool) - 1)] == s)
        sizes = len(pool) - present.astype(np.int64)
        ok = sizes > 0
        js = rng.integers(0, np.maximum(sizes, 1))
        js = js + (present & (js >= pos))
        receivers[idxs[ok]] = pool[js[ok]]
        for t in idxs[~ok]:  # pool minus sender is empty: use the other pool
            r = _choice_excluding(other, int(senders[t]), rng)
            if r < 0:
                raise NoEligibleReceiverError("graph has no eligible receiver")
            receivers[t] = r
    return senders, receivers


def sample_entry_indices(
    entry: TrafficEntry, g: NetworkGraph, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample one entry's (senders, receivers) as node-index arrays."""
    return sample_spec_indices(TrafficSpec((entry,)), g, rng)


def generate_transactions(
    spec: TrafficSpec, g: NetworkGraph, rng: np.random.Generator
) -> list[Transaction]:
    """Generate every entry's transactions, entry order then index order."""
    senders, receivers = sample_spec_indices(spec, g, rng)
    amounts = np.repeat(
        [e.amount for e in spec.entries], [e.count for e in spec.entries]
    )
    return [
        Transaction(amount=int(a), sender=g.ids[s], receiver=g.ids[r])
        for a, s, r in zip(amounts, senders, receivers)
    ]
