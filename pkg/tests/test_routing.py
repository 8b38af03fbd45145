import numpy as np
import pytest

from conftest import BTC, figure_graph, make_channel, random_graph
from feesim._kernel import get_kernel, kernel
from feesim.errors import StaleRouteError
from feesim.graph import NetworkGraph, build_amount_graph, compute_fee
from feesim.routing import Route, TxStatus, find_cheapest_route, settle_transaction
from feesim.snapshot import FeePolicy
from feesim.traffic import Transaction
from oracle import brute_force_route

PURE = get_kernel("pure")


class TestFindCheapestRoute:
    def test_figure_route_via_cheapest_intermediary(self):
        g = figure_graph()
        ag = build_amount_graph(g, 2 * BTC)
        route = find_cheapest_route(ag, "bob", "alice")
        assert route.nodes == ("bob", "eve", "alice")
        assert route.total_fee == int(1.4 * BTC)

    def test_direct_hop_is_free(self):
        g = NetworkGraph([make_channel("s", "r", 1000, FeePolicy(1000.0, 50), FeePolicy(0, 0))])
        route = find_cheapest_route(build_amount_graph(g, 100), "s", "r")
        assert route.nodes == ("s", "r")
        assert route.total_fee == 0

    def test_no_path_returns_none(self):
        channels = [make_channel("a", "b", 1000), make_channel("c", "d", 1000)]
        g = NetworkGraph(channels)
        assert find_cheapest_route(build_amount_graph(g, 10), "a", "c") is None

    def test_fewer_hops_breaks_cost_ties(self):
        fee10 = FeePolicy(0.0, 10)
        fee5 = FeePolicy(0.0, 5)
        channels = [
            make_channel("s", "m", 10_000, policy_u=FeePolicy(0, 0)),
            make_channel("m", "r", 10_000, policy_u=fee10),   # 2 hops, fee 10
            make_channel("s", "x", 10_000, policy_u=FeePolicy(0, 0)),
            make_channel("x", "y", 10_000, policy_u=fee5),
            make_channel("y", "r", 10_000, policy_u=fee5),    # 3 hops, fee 10
        ]
        g = NetworkGraph(channels)
        route = find_cheapest_route(build_amount_graph(g, 100), "s", "r")
        assert route.nodes == ("s", "m", "r")

    def test_lexicographic_breaks_full_ties(self):
        fee = FeePolicy(0.0, 10)
        channels = [
            make_channel("s", "b", 10_000, policy_u=FeePolicy(0, 0)),
            make_channel("b", "r", 10_000, policy_u=fee),
            make_channel("s", "a", 10_000, policy_u=FeePolicy(0, 0)),
            make_channel("a", "r", 10_000, policy_u=fee),
        ]
        g = NetworkGraph(channels)
        route = find_cheapest_route(build_amount_graph(g, 100), "s", "r")
        assert route.nodes == ("s", "a", "r")

    def test_literal_mode_charges_sender_edge(self):
        g = NetworkGraph(
            [
                make_channel("s", "m", 10_000, policy_u=FeePolicy(0.0, 7)),
                make_channel("m", "r", 10_000, policy_u=FeePolicy(0.0, 3)),
            ]
        )
        ag = build_amount_graph(g, 100)
        assert find_cheapest_route(ag, "s", "r").total_fee == 3
        assert find_cheapest_route(ag, "s", "r", charge_sender_fee=True).total_fee == 10

    def test_sender_equals_receiver_rejected(self):
        g = figure_graph()
        with pytest.raises(ValueError):
            find_cheapest_route(build_amount_graph(g, 1), "bob", "bob")

    @pytest.mark.parametrize("charge_sender_fee", [False, True])
    def test_matches_brute_force_oracle(self, charge_sender_fee):
        rng = np.random.default_rng(777)
        checked = 0
        for _ in range(250):
            g = random_graph(rng)
            amount = int(rng.integers(1, 2_000_001))
            ids = g.ids
            sender, receiver = rng.choice(len(ids), size=2, replace=False)
            sender, receiver = ids[int(sender)], ids[int(receiver)]
            ag = build_amount_graph(g, amount)
            route = find_cheapest_route(
                ag, sender, receiver, charge_sender_fee=charge_sender_fee
            )
            expected = brute_force_route(
                g, sender, receiver, amount, charge_sender_fee=charge_sender_fee
            )
            if expected is None:
                assert route is None
            else:
                assert route is not None
                assert route.total_fee == expected[0]
                assert route.nodes == expected[1]
                checked += 1
        assert checked > 50

    def test_backends_agree(self):
        rng = np.random.default_rng(31)
        for _ in range(150):
            g = random_graph(rng)
            amount = int(rng.integers(1, 1_000_001))
            sender, receiver = (g.ids[i] for i in rng.choice(g.n, size=2, replace=False))
            ag = build_amount_graph(g, amount)
            for check in (False, True):
                fast = find_cheapest_route(ag, sender, receiver, check_balance=check, backend=kernel)
                slow = find_cheapest_route(ag, sender, receiver, check_balance=check, backend=PURE)
                assert fast == slow

    def test_prefilter_equals_in_search_checks(self):
        rng = np.random.default_rng(99)
        for _ in range(150):
            g = random_graph(rng)
            amount = int(rng.integers(1, 1_000_001))
            sender, receiver = (g.ids[i] for i in rng.choice(g.n, size=2, replace=False))
            ag = build_amount_graph(g, amount)
            pre = find_cheapest_route(ag, sender, receiver)
            live = find_cheapest_route(ag, sender, receiver, check_balance=True)
            assert pre == live


class TestSettlement:
    def test_balances_shift_toward_receiver(self):
        g = figure_graph()
        ag = build_amount_graph(g, 2 * BTC)
        route = find_cheapest_route(ag, "bob", "alice")
        tx = Transaction(amount=2 * BTC, sender="bob", receiver="alice")
        outcome = settle_transaction(g, tx, route, set(range(g.m)))
        assert outcome.status is TxStatus.SETTLED
        assert outcome.fee_paid == int(1.4 * BTC)
        bob_eve = g.node_channels("eve")
        for c in bob_eve:
            ch = g.payment_channel(c)
            if ch.peer_of("eve") == "bob":
                assert ch.balance_at("bob") == 3 * BTC
                assert ch.balance_at("eve") == 7 * BTC
            if ch.peer_of("eve") == "alice":
                assert ch.balance_at("eve") == 3 * BTC
                assert ch.balance_at("alice") == 7 * BTC

    def test_inactive_channels_untouched(self):
        g = figure_graph()
        before = g.bal_a.copy()
        ag = build_amount_graph(g, 2 * BTC)
        route = find_cheapest_route(ag, "bob", "alice")
        tx = Transaction(amount=2 * BTC, sender="bob", receiver="alice")
        outcome = settle_transaction(g, tx, route, active_set=set())
        assert outcome.status is TxStatus.SETTLED
        assert np.array_equal(g.bal_a, before)

    def test_settle_then_reverse_restores(self):
        g = figure_graph()
        before = g.bal_a.copy()
        amount = 2 * BTC
        ag = build_amount_graph(g, amount)
        route = find_cheapest_route(ag, "bob", "alice")
        everything = set(range(g.m))
        settle_transaction(g, Transaction(amount=amount, sender="bob", receiver="alice"), route, everything)
        back = Route(
            nodes=tuple(reversed(route.nodes)),
            channels=tuple(reversed(route.channels)),
            total_fee=0,
        )
        settle_transaction(g, Transaction(amount=amount, sender="alice", receiver="bob"), back, everything)
        assert np.array_equal(g.bal_a, before)

    def test_stale_route_raises(self):
        g = NetworkGraph([make_channel("s", "r", 1000, balance_u=600)])
        ag = build_amount_graph(g, 500)
        route = find_cheapest_route(ag, "s", "r")
        # drain the sender side (node_a is "r", so s's balance is cap - bal_a)
        g.bal_a[0] = 950
        assert g.balance(0, "s") == 50
        with pytest.raises(StaleRouteError):
            settle_transaction(g, Transaction(amount=500, sender="s", receiver="r"), route, {0})

    def test_fee_recomputable_from_route(self):
        rng = np.random.default_rng(5)
        for _ in range(80):
            g = random_graph(rng)
            amount = int(rng.integers(1, 500_001))
            sender, receiver = (g.ids[i] for i in rng.choice(g.n, size=2, replace=False))
            route = find_cheapest_route(build_amount_graph(g, amount), sender, receiver)
            if route is None:
                continue
            recomputed = sum(
                compute_fee(g.policy(c, node), amount) for node, c in route.hops[1:]
            )
            assert route.total_fee == recomputed

    def test_conservation_after_settlements(self):
        rng = np.random.default_rng(17)
        g = random_graph(rng, max_nodes=8)
        everything = set(range(g.m))
        total_before = int(g.cap.sum())
        for _ in range(60):
            amount = int(rng.integers(1, 200_001))
            sender, receiver = (g.ids[i] for i in rng.choice(g.n, size=2, replace=False))
            route = find_cheapest_route(build_amount_graph(g, amount), sender, receiver)
            if route is None:
                continue
            settle_transaction(g, Transaction(amount=amount, sender=sender, receiver=receiver), route, everything)
            assert ((g.bal_a >= 0) & (g.bal_a <= g.cap)).all()
        assert int(g.cap.sum()) == total_before
        for c in range(g.m):
            ch = g.payment_channel(c)
            assert ch.balance_a + ch.balance_b == ch.capacity
