"""Cheapest-route search and settlement.

Route cost is the sum of forwarding fees charged by intermediate nodes;
the sender's own outgoing edge is free by default (charge_sender_fee
selects the literal edge-weight behavior instead) and the receiver never
charges. Ties break by fewer hops, then by the lexicographically smallest
node-id sequence, so results are unique and platform-independent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ._kernel import kernel
from .errors import StaleRouteError
from .graph import AmountGraph, NetworkGraph
from .traffic import Transaction


@dataclass(frozen=True)
class Route:
    """A path as visited nodes plus the channel crossed at each hop."""

    nodes: tuple[str, ...]
    channels: tuple[int, ...]
    total_fee: int

    @property
    def hops(self) -> tuple[tuple[str, int], ...]:
        """(forwarding node, channel index) per hop."""
        return tuple(zip(self.nodes[:-1], self.channels))

    @property
    def sender(self) -> str:
        return self.nodes[0]

    @property
    def receiver(self) -> str:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.channels)


class TxStatus(enum.Enum):
    SETTLED = "settled"
    NO_PATH = "no_path"


@dataclass(frozen=True)
class TransactionOutcome:
    transaction: Transaction
    status: TxStatus
    route: Route | None
    fee_paid: int

    def __post_init__(self):
        if (self.status is TxStatus.SETTLED) != (self.route is not None):
            raise ValueError("settled outcomes carry a route, failed ones do not")


def find_cheapest_route(
    ag: AmountGraph,
    sender: str,
    receiver: str,
    *,
    charge_sender_fee: bool = False,
    check_balance: bool = False,
    backend=None,
) -> Route | None:
    """Minimum-fee well-funded route in the amount graph, or None.

    check_balance=True evaluates the liquidity filter edge by edge during
    the search (on the unfiltered adjacency) instead of using the
    pre-filtered one; both must return identical routes.
    """
    g = ag.graph
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    si, ri = g.node_index(sender), g.node_index(receiver)
    if check_balance:
        out_indptr, out_eids = g.out_indptr, g.out_eids
        in_indptr, in_eids = g.in_indptr, g.in_eids
    else:
        out_indptr, out_eids = ag.cout_indptr, ag.cout_eids
        in_indptr, in_eids = ag.cin_indptr, ag.cin_eids
    impl = backend or kernel
    res = impl.find_route(
        out_indptr,
        out_eids,
        in_indptr,
        in_eids,
        g.esrc,
        g.edst,
        ag.wt,
        si,
        ri,
        not charge_sender_fee,
        check_balance,
        ag.amount,
        g.bal_a,
        g.cap,
        g.minh,
    )
    if res is None:
        return None
    total, nodes, eids = res
    return Route(
        nodes=tuple(g.ids[i] for i in nodes),
        channels=tuple(int(e) >> 1 for e in eids),
        total_fee=int(total),
    )


def route_is_well_funded(g: NetworkGraph, route: Route, amount: int) -> bool:
    """Check the liquidity filter for every hop at current balances."""
    for node, c in route.hops:
        if g.balance(c, node) < amount or amount < g.minh[c]:
            return False
    return True


def settle_transaction(
    g: NetworkGraph,
    tx: Transaction,
    route: Route,
    active_set,
) -> TransactionOutcome:
    """Apply a routed transaction to channel balances.

    Only channels in active_set move (sender side down, receiver side up
    by the amount); all others stay frozen. Raises StaleRouteError when a
    hop is no longer well funded, leaving all balances untouched.
    """
    if not route_is_well_funded(g, route, tx.amount):
        raise StaleRouteError(
            f"route {route.nodes} no longer well funded for amount {tx.amount}"
        )
    moved = False
    for node, c in route.hops:
        if c not in active_set:
            continue
        if g.node_index(node) == g.ea[c]:
            g.bal_a[c] -= tx.amount
        else:
            g.bal_a[c] += tx.amount
        moved = True
    if moved:
        g.bal_version += 1
    return TransactionOutcome(
        transaction=tx, status=TxStatus.SETTLED, route=route, fee_paid=route.total_fee
    )
