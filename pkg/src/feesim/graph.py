"""In-memory network graph, fee computation, and amount-specific routing graphs.

NetworkGraph stores the aggregated channels in flat numpy arrays shared
with the routing kernels. Nodes are indexed by the lexicographic rank of
their id, so index comparisons double as id tie-breaks. Each channel c
yields two directed edges: edge 2c runs from the smaller endpoint (a) to
the larger (b), edge 2c+1 the reverse. Balance is stored for endpoint a
only; the b side is capacity - balance_a, so conservation is exact by
construction.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import UnknownCenterError
from .snapshot import (
    BalanceInitMode,
    FeePolicy,
    HalfHalf,
    Manual,
    ManualSumMismatchError,
    PaymentChannel,
    UniformRandom,
    split_half,
)


def ppm_fee(rate: float, amount: int) -> int:
    """Proportional fee in msat, rounded half-up to an integer."""
    return int(math.floor(rate * float(amount) / 1.0e6 + 0.5))


def compute_fee(policy: FeePolicy, amount: int) -> int:
    """Total forwarding fee in msat: rate ppm applied to amount, plus base."""
    if amount < 0:
        raise ValueError("amount must be non-negative")
    return ppm_fee(policy.fee_rate, amount) + policy.base_fee


class NetworkGraph:
    """Aggregated channel network with merchant annotations.

    Construction is immutable except for balances and fee policies, which
    the simulator mutates through the setters below. Reads are safe from
    any thread; mutation requires exclusive access (the simulation loop is
    the single writer).
    """

    def __init__(
        self,
        channels: list[PaymentChannel],
        merchants=(),
        extra_nodes: list[str] | None = None,
    ):
        node_set = set(extra_nodes or ())
        for ch in channels:
            node_set.add(ch.node_a)
            node_set.add(ch.node_b)
        self.ids: list[str] = sorted(node_set)
        self._index: dict[str, int] = {v: i for i, v in enumerate(self.ids)}
        self.n = len(self.ids)
        self.m = len(channels)

        self.merchants = frozenset(m for m in merchants if m in self._index)
        merch_idx = sorted(self._index[m] for m in self.merchants)
        self.merchant_idx = np.asarray(merch_idx, dtype=np.int64)
        self.nonmerchant_idx = np.asarray(
            [i for i in range(self.n) if self.ids[i] not in self.merchants], dtype=np.int64
        )

        m = self.m
        self.ea = np.empty(m, dtype=np.int32)
        self.eb = np.empty(m, dtype=np.int32)
        self.cap = np.empty(m, dtype=np.int64)
        self.bal_a = np.empty(m, dtype=np.int64)
        self.minh = np.empty(m, dtype=np.int64)
        self.rate_dir = np.empty(2 * m, dtype=np.float64)
        self.base_dir = np.empty(2 * m, dtype=np.int64)
        self._channel_ids: list[tuple[str, ...]] = []
        for c, ch in enumerate(channels):
            ia, ib = self._index[ch.node_a], self._index[ch.node_b]
            if self.ids[ia] > self.ids[ib]:
                raise ValueError("channel endpoints not ordered")
            self.ea[c], self.eb[c] = ia, ib
            self.cap[c] = ch.capacity
            if ch.balance_a + ch.balance_b not in (0, ch.capacity):
                raise ValueError("channel balances do not sum to capacity")
            self.bal_a[c] = ch.balance_a
            self.minh[c] = ch.min_htlc
            self.rate_dir[2 * c] = ch.policy_a.fee_rate
            self.base_dir[2 * c] = ch.policy_a.base_fee
            self.rate_dir[2 * c + 1] = ch.policy_b.fee_rate
            self.base_dir[2 * c + 1] = ch.policy_b.base_fee
            self._channel_ids.append(ch.channel_ids)

        # directed edge endpoints: even edges a->b, odd edges b->a
        self.esrc = np.empty(2 * m, dtype=np.int32)
        self.edst = np.empty(2 * m, dtype=np.int32)
        self.esrc[0::2], self.edst[0::2] = self.ea, self.eb
        self.esrc[1::2], self.edst[1::2] = self.eb, self.ea
        self.out_indptr, self.out_eids = _build_csr(self.esrc, self.edst, self.n)
        self.in_indptr, self.in_eids = _build_csr(self.edst, self.esrc, self.n)
        self._src_of_out = self.esrc[self.out_eids]
        self._dst_of_in = self.edst[self.in_eids]
        # version counters let cached amount graphs skip redundant syncs
        self.fee_version = 0
        self.bal_version = 0
        self._ag_cache: dict[int, "AmountGraph"] = {}
        self._node_channels_cache: dict[str, list[int]] = {}

    # --- lookups ---

    def __contains__(self, node: str) -> bool:
        return node in self._index

    def node_index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise UnknownCenterError(f"unknown node: {node}") from None

    def endpoints(self, c: int) -> tuple[str, str]:
        return self.ids[self.ea[c]], self.ids[self.eb[c]]

    def balance(self, c: int, node: str) -> int:
        i = self.node_index(node)
        if i == self.ea[c]:
            return int(self.bal_a[c])
        if i == self.eb[c]:
            return int(self.cap[c] - self.bal_a[c])
        raise KeyError(node)

    def capacity(self, c: int) -> int:
        return int(self.cap[c])

    def _edge_of(self, c: int, node: str) -> int:
        i = self.node_index(node)
        if i == self.ea[c]:
            return 2 * c
        if i == self.eb[c]:
            return 2 * c + 1
        raise KeyError(node)

    def policy(self, c: int, node: str) -> FeePolicy:
        e = self._edge_of(c, node)
        return FeePolicy(fee_rate=float(self.rate_dir[e]), base_fee=int(self.base_dir[e]))

    def set_policy(self, c: int, node: str, policy: FeePolicy) -> None:
        e = self._edge_of(c, node)
        self.rate_dir[e] = policy.fee_rate
        self.base_dir[e] = policy.base_fee
        self.fee_version += 1

    def node_channels(self, node: str) -> list[int]:
        """Indices of the node's channels, ordered by peer id (ascending)."""
        cached = self._node_channels_cache.get(node)
        if cached is not None:
            return cached
        i = self.node_index(node)
        incident = np.flatnonzero((self.ea == i) | (self.eb == i))
        peers = np.where(self.ea[incident] == i, self.eb[incident], self.ea[incident])
        order = np.lexsort((incident, peers))
        result = [int(c) for c in incident[order]]
        self._node_channels_cache[node] = result
        return result

    def amount_graph(self, amount: int) -> "AmountGraph":
        """Cached amount graph, synced to current fees and balances."""
        ag = self._ag_cache.get(amount)
        if ag is None:
            ag = AmountGraph(self, amount)
            self._ag_cache[amount] = ag
        else:
            ag.sync()
        return ag

    def payment_channel(self, c: int) -> PaymentChannel:
        """Materialize a channel view (a detached copy of the array state)."""
        a, b = self.endpoints(c)
        bal_a = int(self.bal_a[c])
        return PaymentChannel(
            node_a=a,
            node_b=b,
            capacity=int(self.cap[c]),
            policy_a=FeePolicy(float(self.rate_dir[2 * c]), int(self.base_dir[2 * c])),
            policy_b=FeePolicy(float(self.rate_dir[2 * c + 1]), int(self.base_dir[2 * c + 1])),
            min_htlc=int(self.minh[c]),
            balance_a=bal_a,
            balance_b=int(self.cap[c]) - bal_a,
            channel_ids=self._channel_ids[c],
        )

    def payment_channels(self) -> list[PaymentChannel]:
        return [self.payment_channel(c) for c in range(self.m)]

    def copy(self) -> "NetworkGraph":
        g = NetworkGraph.__new__(NetworkGraph)
        g.ids = self.ids
        g._index = self._index
        g.n, g.m = self.n, self.m
        g.merchants = self.merchants
        g.merchant_idx = self.merchant_idx
        g.nonmerchant_idx = self.nonmerchant_idx
        g.ea, g.eb = self.ea, self.eb
        g.cap = self.cap
        g.bal_a = self.bal_a.copy()
        g.minh = self.minh
        g.rate_dir = self.rate_dir.copy()
        g.base_dir = self.base_dir.copy()
        g._channel_ids = self._channel_ids
        g.esrc, g.edst = self.esrc, self.edst
        g.out_indptr, g.out_eids = self.out_indptr, self.out_eids
        g.in_indptr, g.in_eids = self.in_indptr, self.in_eids
        g._src_of_out = self._src_of_out
        g._dst_of_in = self._dst_of_in
        g.fee_version = 0
        g.bal_version = 0
        g._ag_cache = {}
        g._node_channels_cache = self._node_channels_cache
        return g

    def total_balance_msat(self) -> int:
        return int(self.cap.sum())

    def init_balances(self, mode: BalanceInitMode, rng: np.random.Generator | None = None) -> None:
        """Re-initialize all channel balances in place.

        Matches snapshot.init_balances; rng overrides UniformRandom's own
        seed (the environment passes a stream derived from its reset seed).
        """
        self.bal_version += 1
        if isinstance(mode, HalfHalf):
            self.bal_a[:] = self.cap - self.cap // 2
        elif isinstance(mode, UniformRandom):
            if rng is None:
                rng = np.random.default_rng(mode.seed)
            for c in range(self.m):
                self.bal_a[c] = rng.integers(0, self.cap[c] + 1)
        elif isinstance(mode, Manual):
            for c in range(self.m):
                a, b = self.endpoints(c)
                if (a, b) in mode.balances:
                    bal_a, bal_b = mode.balances[(a, b)]
                elif (b, a) in mode.balances:
                    bal_b, bal_a = mode.balances[(b, a)]
                else:
                    bal_a, bal_b = split_half(int(self.cap[c]))
                if bal_a < 0 or bal_b < 0 or bal_a + bal_b != self.cap[c]:
                    raise ManualSumMismatchError(
                        f"balances {bal_a}+{bal_b} != capacity {int(self.cap[c])} for channel {a}--{b}"
                    )
                self.bal_a[c] = bal_a
        else:
            raise TypeError(f"unknown balance init mode: {mode!r}")


def _build_csr(keys: np.ndarray, secondary: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Group directed edge ids by `keys`, ordered by (key, secondary)."""
    order = np.lexsort((secondary, keys)).astype(np.int32)
    counts = np.bincount(keys, minlength=n) if len(keys) else np.zeros(n, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order


class AmountGraph:
    """Directed routing graph for one payment amount.

    Edge u->v exists iff the channel {u,v} exists, u's balance covers the
    amount, and the amount is at least the channel's min_htlc; its weight
    is u's forwarding fee for the amount. The liquidity filter is applied
    up front (compacted adjacency); `refresh_channels` re-applies it after
    settlements change balances, and `sync` brings a cached instance back
    in line with the graph's current fees and balances.
    """

    def __init__(self, graph: NetworkGraph, amount: int):
        if amount <= 0:
            raise ValueError("amount must be positive")
        self.graph = graph
        self.amount = int(amount)
        g = graph
        E = 2 * g.m
        self.wt = np.empty(E, dtype=np.int64)
        self.passable = np.zeros(E, dtype=np.uint8)
        self._minh_ok = (self.amount >= np.repeat(g.minh, 2))
        self._fbuf = np.empty(E, dtype=np.float64)
        self._bal_dir = np.empty(E, dtype=np.int64)
        self._pass_buf = np.empty(E, dtype=bool)
        # compacted adjacency lives in fixed buffers so kernel runners can
        # bind them once; indptr delimits the live prefix of each eid buffer
        self.cout_indptr = np.zeros(g.n + 1, dtype=np.int64)
        self.cin_indptr = np.zeros(g.n + 1, dtype=np.int64)
        self._cout_buf = np.empty(E, dtype=np.int32)
        self._cin_buf = np.empty(E, dtype=np.int32)
        self._runners: dict = {}
        self._fee_v = -1
        self._bal_v = -1
        self._compacted = False
        self.sync()

    def sync(self) -> None:
        """Bring weights and the liquidity filter in line with the graph;
        version counters skip the recompute when nothing changed, and the
        compacted adjacency is rebuilt only when the filter changed."""
        g = self.graph
        if self._fee_v != g.fee_version:
            np.multiply(g.rate_dir, float(self.amount), out=self._fbuf)
            self._fbuf /= 1.0e6
            self._fbuf += 0.5
            np.floor(self._fbuf, out=self._fbuf)
            np.copyto(self.wt, self._fbuf, casting="unsafe")
            self.wt += g.base_dir
            self._fee_v = g.fee_version

        if self._bal_v != g.bal_version or not self._compacted:
            np.copyto(self._bal_dir[0::2], g.bal_a)
            np.subtract(g.cap, g.bal_a, out=self._bal_dir[1::2])
            np.greater_equal(self._bal_dir, self.amount, out=self._pass_buf)
            self._pass_buf &= self._minh_ok
            if not self._compacted or not np.array_equal(
                self.passable.view(bool), self._pass_buf
            ):
                np.copyto(self.passable, self._pass_buf, casting="unsafe")
                self._compact()
                self._compacted = True
            self._bal_v = g.bal_version

    def _compact(self) -> None:
        g = self.graph
        live = self.passable.view(bool)
        keep_out = np.flatnonzero(live[g.out_eids])
        np.take(g.out_eids, keep_out, out=self._cout_buf[: len(keep_out)])
        counts = np.bincount(g._src_of_out[keep_out], minlength=g.n)
        np.cumsum(counts, out=self.cout_indptr[1:])
        keep_in = np.flatnonzero(live[g.in_eids])
        np.take(g.in_eids, keep_in, out=self._cin_buf[: len(keep_in)])
        counts = np.bincount(g._dst_of_in[keep_in], minlength=g.n)
        np.cumsum(counts, out=self.cin_indptr[1:])

    @property
    def cout_eids(self) -> np.ndarray:
        return self._cout_buf[: int(self.cout_indptr[-1])]

    @property
    def cin_eids(self) -> np.ndarray:
        return self._cin_buf[: int(self.cin_indptr[-1])]

    def runner(self, impl):
        """Kernel entry runner bound to this amount graph's buffers."""
        r = self._runners.get(impl)
        if r is None:
            g = self.graph
            r = impl.EntryRunner(
                g.out_indptr, g.out_eids, g.in_indptr, g.in_eids,
                self.cout_indptr, self._cout_buf, self.cin_indptr, self._cin_buf,
                g.esrc, g.edst, self.wt, self.passable, g.bal_a, g.cap, g.minh,
            )
            self._runners[impl] = r
        return r

    def recompact(self) -> None:
        self._compact()

    def refresh_channels(self, channels) -> bool:
        """Re-evaluate the filter for the given channels; recompact and
        report True when any edge's status flipped."""
        g = self.graph
        changed = False
        for c in channels:
            bal_a = int(g.bal_a[c])
            ok_ab = bal_a >= self.amount and self.amount >= g.minh[c]
            ok_ba = (g.cap[c] - bal_a) >= self.amount and self.amount >= g.minh[c]
            if bool(self.passable[2 * c]) != ok_ab:
                self.passable[2 * c] = ok_ab
                changed = True
            if bool(self.passable[2 * c + 1]) != ok_ba:
                self.passable[2 * c + 1] = ok_ba
                changed = True
        if changed:
            self._compact()
        return changed

    def edge_count(self) -> int:
        return int(self.passable.sum())

    def has_edge(self, u: str, v: str) -> bool:
        ui, vi = self.graph.node_index(u), self.graph.node_index(v)
        for idx in range(self.cout_indptr[ui], self.cout_indptr[ui + 1]):
            if self.graph.edst[self.cout_eids[idx]] == vi:
                return True
        return False

    def directed_edges(self) -> list[tuple[str, str, int, int]]:
        """Materialize (from, to, weight, channel index) for every live edge."""
        g = self.graph
        out = []
        for e in np.flatnonzero(self.passable):
            out.append((g.ids[g.esrc[e]], g.ids[g.edst[e]], int(self.wt[e]), int(e) // 2))
        return out


def build_amount_graph(graph: NetworkGraph, amount: int) -> AmountGraph:
    """Build the filtered, weighted routing graph for one payment amount."""
    return AmountGraph(graph, amount)


def localize(graph: NetworkGraph, center: str, size: int) -> NetworkGraph:
    """Induced subgraph on the `size` nodes nearest to center by hop count.

    Ties within a hop-distance tier break by ascending node id. Channels
    keep their current balances and policies; merchants are restricted to
    the surviving nodes. If fewer than `size` nodes are reachable, the
    whole connected component is returned.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    ci = graph.node_index(center)
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[ci] = 0
    queue = deque([ci])
    while queue:
        u = queue.popleft()
        for idx in range(graph.out_indptr[u], graph.out_indptr[u + 1]):
            v = int(graph.edst[graph.out_eids[idx]])
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    reached = np.flatnonzero(dist >= 0)
    order = np.lexsort((reached, dist[reached]))  # node index breaks ties within a tier
    selected = set(int(i) for i in reached[order][:size])
    keep_ids = {graph.ids[i] for i in selected}
    channels = [
        graph.payment_channel(c)
        for c in range(graph.m)
        if int(graph.ea[c]) in selected and int(graph.eb[c]) in selected
    ]
    return NetworkGraph(
        channels,
        merchants=[m for m in graph.merchants if m in keep_ids],
        extra_nodes=sorted(keep_ids),
    )
