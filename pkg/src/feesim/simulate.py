"""One simulation round: generate traffic, route, settle, report.

The round processes traffic entries in order, building the amount graph
once per entry and patching its liquidity filter whenever a settlement
flips an edge's status. Per-channel routed amount (m_i) and count (n_i)
are accumulated for the center node's channels over transactions where
the center sits strictly inside the route (forwarded traffic only;
payments the center sends or receives earn no fees).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernel import kernel
from .errors import NodeHasNoChannelsError, StaleRouteError
from .graph import NetworkGraph
from .routing import TransactionOutcome, TxStatus, find_cheapest_route, settle_transaction
from .traffic import Transaction, TrafficSpec, sample_spec_indices


@dataclass
class SimulationReport:
    """Per-center-channel statistics for one round plus round totals."""

    center: str
    channel_indices: tuple[int, ...]
    balances: np.ndarray        # end-of-round center-side balances, msat
    routed_amounts: np.ndarray  # m_i, msat
    routed_counts: np.ndarray   # n_i
    settled: int
    failed: int
    outcomes: list[TransactionOutcome] | None = None

    @property
    def k(self) -> int:
        return len(self.channel_indices)


def _center_side_balances(g: NetworkGraph, center_idx: int, channels: np.ndarray) -> np.ndarray:
    bal_a = g.bal_a[channels]
    return np.where(g.ea[channels] == center_idx, bal_a, g.cap[channels] - bal_a)


def simulate_round(
    g: NetworkGraph,
    spec: TrafficSpec,
    center: str,
    active_set=None,
    rng: np.random.Generator | None = None,
    *,
    prefilter: bool = True,
    charge_sender_fee: bool = False,
    record_outcomes: bool = False,
    backend=None,
) -> SimulationReport:
    """Run one traffic round against the graph, mutating active balances.

    active_set defaults to the center node's channels. prefilter=False
    routes on the unfiltered adjacency with in-search balance checks;
    results are identical, only slower. record_outcomes switches to the
    per-transaction path (routing + settlement through the public ops,
    with the one re-route retry on stale routes) and attaches the full
    outcome list to the report.
    """
    center_idx = g.node_index(center)
    center_channels = g.node_channels(center)
    if not center_channels:
        raise NodeHasNoChannelsError(f"node {center} has no channels")
    if rng is None:
        rng = np.random.default_rng()
    if active_set is None:
        active_set = set(center_channels)
    else:
        active_set = set(int(c) for c in active_set)
    active = np.zeros(g.m, dtype=np.uint8)
    active[list(active_set)] = 1
    center_arr = np.asarray(center_channels, dtype=np.int64)

    impl = backend or kernel
    m_acc = np.zeros(g.m, dtype=np.int64)
    n_acc = np.zeros(g.m, dtype=np.int64)
    outcomes: list[TransactionOutcome] | None = [] if record_outcomes else None
    check_balance = not prefilter

    total = spec.total_count
    all_senders, all_receivers = sample_spec_indices(spec, g, rng)
    status = np.empty(total, dtype=np.uint8)
    fee = np.empty(total, dtype=np.int64)

    offset = 0
    settled = 0
    failed = 0
    for entry in spec.entries:
        senders = all_senders[offset : offset + entry.count]
        receivers = all_receivers[offset : offset + entry.count]
        ag = g.amount_graph(entry.amount)
        if record_outcomes:
            s, f = _run_entry_recorded(
                g, ag, entry.amount, senders, receivers, center_idx, active_set,
                m_acc, n_acc, outcomes, charge_sender_fee, check_balance,
            )
            settled += s
            failed += f
            offset += entry.count
            continue
        runner = ag.runner(impl)
        done = 0
        while done < entry.count:
            processed, recompact = runner.run(
                senders[done:],
                receivers[done:],
                entry.amount,
                active,
                center_idx,
                not charge_sender_fee,
                check_balance,
                status[offset + done : offset + entry.count],
                fee[offset + done : offset + entry.count],
                m_acc,
                n_acc,
            )
            done += processed
            if recompact:
                ag.recompact()
        g.bal_version += 1  # kernel settlements may have moved balances
        offset += entry.count
    if not record_outcomes:
        settled = int((status == 1).sum())
        failed = total - settled

    return SimulationReport(
        center=center,
        channel_indices=tuple(center_channels),
        balances=_center_side_balances(g, center_idx, center_arr),
        routed_amounts=m_acc[center_arr],
        routed_counts=n_acc[center_arr],
        settled=settled,
        failed=failed,
        outcomes=outcomes,
    )


def _run_entry_recorded(
    g, ag, amount, senders, receivers, center_idx, active_set,
    m_acc, n_acc, outcomes, charge_sender_fee, check_balance,
):
    """Per-transaction loop through the public routing/settlement ops."""
    settled = 0
    failed = 0
    center = g.ids[center_idx]
    for s, r in zip(senders, receivers):
        tx = Transaction(amount=amount, sender=g.ids[s], receiver=g.ids[r])
        route = find_cheapest_route(
            ag, tx.sender, tx.receiver,
            charge_sender_fee=charge_sender_fee, check_balance=check_balance,
        )
        outcome = None
        for attempt in range(2):
            if route is None:
                break
            try:
                outcome = settle_transaction(g, tx, route, active_set)
                break
            except StaleRouteError:
                # re-route once against refreshed state, then give up
                ag.refresh_channels(set(route.channels))
                route = (
                    find_cheapest_route(
                        ag, tx.sender, tx.receiver,
                        charge_sender_fee=charge_sender_fee, check_balance=check_balance,
                    )
                    if attempt == 0
                    else None
                )
        if outcome is None:
            outcomes.append(
                TransactionOutcome(transaction=tx, status=TxStatus.NO_PATH, route=None, fee_paid=0)
            )
            failed += 1
            continue
        outcomes.append(outcome)
        settled += 1
        if not check_balance:
            ag.refresh_channels(set(c for c in outcome.route.channels if c in active_set))
        if tx.sender != center and tx.receiver != center:
            nodes = outcome.route.nodes
            for j in range(1, len(nodes) - 1):
                if nodes[j] == center:
                    for c in (outcome.route.channels[j - 1], outcome.route.channels[j]):
                        n_acc[c] += 1
                        m_acc[c] += amount
                    break
    return settled, failed
