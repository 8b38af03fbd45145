"""Brute-force routing oracle, independent of the kernel implementation.

Enumerates every simple well-funded path by depth-first search over a
plain dict adjacency built from channel views, computing fees with its
own arithmetic, and returns the minimum by (total fee, hop count, node
sequence). Only suitable for small graphs.
"""

import math


def _fee(rate, base, amount):
    return math.floor(rate * float(amount) / 1.0e6 + 0.5) + base


def brute_force_route(graph, sender, receiver, amount, charge_sender_fee=False):
    """Returns (total_fee, node_tuple) for the best path, or None.

    `graph` is a NetworkGraph, but only channel views are consumed.
    """
    adjacency = {}
    for c in range(graph.m):
        ch = graph.payment_channel(c)
        for src, dst in ((ch.node_a, ch.node_b), (ch.node_b, ch.node_a)):
            if ch.balance_at(src) >= amount and amount >= ch.min_htlc:
                pol = ch.policy_at(src)
                adjacency.setdefault(src, []).append(
                    (dst, _fee(pol.fee_rate, pol.base_fee, amount))
                )

    best = None  # (fee, hops, nodes)
    path = [sender]
    on_path = {sender}

    def dfs(node, fee_sum):
        nonlocal best
        if node == receiver:
            cand = (fee_sum, len(path) - 1, tuple(path))
            if best is None or cand < best:
                best = cand
            return
        for nxt, fee in adjacency.get(node, ()):
            if nxt in on_path:
                continue
            hop_fee = 0 if (node == sender and not charge_sender_fee) else fee
            path.append(nxt)
            on_path.add(nxt)
            dfs(nxt, fee_sum + hop_fee)
            path.pop()
            on_path.remove(nxt)

    dfs(sender, 0)
    if best is None:
        return None
    return best[0], best[2]
