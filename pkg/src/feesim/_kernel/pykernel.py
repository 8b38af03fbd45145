"""Pure-Python routing kernel.

Reference implementation of the hot loop; the Cython kernel (ckernel.pyx)
mirrors it operation for operation so both produce bit-identical results.

Route search runs Dijkstra backward from the receiver with (cost, hops)
keys, then walks forward from the sender picking the smallest next node
among optimal continuations, which yields the unique path minimizing
(total fee, hop count, node-id sequence). The sender's own outgoing edge
costs 0 unless free_first_hop is disabled. With check_balance=True the
liquidity filter is evaluated per edge during the search (on the full
adjacency) instead of relying on the pre-filtered one.
"""

from __future__ import annotations

import heapq

import numpy as np

INF = 1 << 62


def _edge_ok(e, amount, bal_a, cap, minh):
    c = e >> 1
    bal = bal_a[c] if (e & 1) == 0 else cap[c] - bal_a[c]
    return bal >= amount and amount >= minh[c]


def find_route(
    out_indptr,
    out_eids,
    in_indptr,
    in_eids,
    esrc,
    edst,
    wt,
    sender,
    receiver,
    free_first_hop,
    check_balance,
    amount,
    bal_a,
    cap,
    minh,
):
    """Cheapest well-funded path from sender to receiver.

    Returns (total_fee, nodes, eids) with nodes/eids as int32 arrays, or
    None when the receiver is unreachable.
    """
    n = len(out_indptr) - 1
    dist = np.full(n, INF, dtype=np.int64)
    hops = np.zeros(n, dtype=np.int32)
    state = np.zeros(n, dtype=np.int8)  # 0 unknown, 1 queued, 2 settled

    dist[receiver] = 0
    state[receiver] = 1
    heap = [(0, 0, receiver)]
    while heap:
        d, h, v = heapq.heappop(heap)
        if state[v] == 2:
            continue
        state[v] = 2
        for idx in range(in_indptr[v], in_indptr[v + 1]):
            e = int(in_eids[idx])
            if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
                continue
            u = int(esrc[e])
            if state[u] == 2:
                continue
            nd = d + int(wt[e])
            nh = h + 1
            if state[u] == 0 or nd < dist[u] or (nd == dist[u] and nh < hops[u]):
                dist[u] = nd
                hops[u] = nh
                state[u] = 1
                heapq.heappush(heap, (nd, nh, u))

    # first hop: minimize (weight + remaining cost, hops, next node id)
    best_d, best_h, best_y, best_e = INF, 0, -1, -1
    for idx in range(out_indptr[sender], out_indptr[sender + 1]):
        e = int(out_eids[idx])
        if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
            continue
        y = int(edst[e])
        if state[y] != 2:
            continue
        nd = (0 if free_first_hop else int(wt[e])) + int(dist[y])
        nh = 1 + int(hops[y])
        if best_y < 0 or (nd, nh, y) < (best_d, best_h, best_y):
            best_d, best_h, best_y, best_e = nd, nh, y, e
    if best_y < 0:
        return None

    nodes = [sender, best_y]
    eids = [best_e]
    cur = best_y
    while cur != receiver:
        nxt_y, nxt_e = -1, -1
        for idx in range(out_indptr[cur], out_indptr[cur + 1]):
            e = int(out_eids[idx])
            if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
                continue
            z = int(edst[e])
            if state[z] != 2:
                continue
            if int(wt[e]) + int(dist[z]) == int(dist[cur]) and int(hops[z]) + 1 == int(hops[cur]):
                if nxt_y < 0 or z < nxt_y:
                    nxt_y, nxt_e = z, e
        if nxt_y < 0:
            raise AssertionError("optimal path reconstruction failed")
        nodes.append(nxt_y)
        eids.append(nxt_e)
        cur = nxt_y
    return best_d, np.asarray(nodes, dtype=np.int32), np.asarray(eids, dtype=np.int32)


class EntryRunner:
    """Routes and settles one traffic entry's transactions in order.

    Bound once per amount graph to the graph's adjacency and the amount
    graph's weight/filter buffers (all of which are updated in place by
    their owners), so per-call overhead stays small.
    """

    def __init__(
        self,
        out_indptr,
        out_eids,
        in_indptr,
        in_eids,
        cout_indptr,
        cout_eids,
        cin_indptr,
        cin_eids,
        esrc,
        edst,
        wt,
        passable,
        bal_a,
        cap,
        minh,
    ):
        self.out_indptr = out_indptr
        self.out_eids = out_eids
        self.in_indptr = in_indptr
        self.in_eids = in_eids
        self.cout_indptr = cout_indptr
        self.cout_eids = cout_eids
        self.cin_indptr = cin_indptr
        self.cin_eids = cin_eids
        self.esrc = esrc
        self.edst = edst
        self.wt = wt
        self.passable = passable
        self.bal_a = bal_a
        self.cap = cap
        self.minh = minh

    def run(
        self,
        senders,
        receivers,
        amount,
        active,
        center,
        free_first_hop,
        check_balance,
        status,
        fee,
        m_acc,
        n_acc,
    ):
        """Process transactions from index 0; settles routed ones by moving
        `amount` along the route for channels flagged in `active`, and
        accumulates per-channel routed amount/count when `center` sits
        strictly inside the path. In pre-filter mode (check_balance=False)
        returns early with needs_recompact=True whenever a settlement flips
        an edge's liquidity status so the caller can recompact and resume.

        Returns (processed, needs_recompact).
        """
        if check_balance:
            out_indptr, out_eids = self.out_indptr, self.out_eids
            in_indptr, in_eids = self.in_indptr, self.in_eids
        else:
            out_indptr, out_eids = self.cout_indptr, self.cout_eids
            in_indptr, in_eids = self.cin_indptr, self.cin_eids
        bal_a, cap, minh, passable = self.bal_a, self.cap, self.minh, self.passable
        t = len(senders)
        for i in range(t):
            res = find_route(
                out_indptr,
                out_eids,
                in_indptr,
                in_eids,
                self.esrc,
                self.edst,
                self.wt,
                int(senders[i]),
                int(receivers[i]),
                free_first_hop,
                check_balance,
                amount,
                bal_a,
                cap,
                minh,
            )
            if res is None:
                status[i] = 0
                fee[i] = 0
                continue
            total, nodes, eids = res
            status[i] = 1
            fee[i] = total

            flipped = False
            for e in eids:
                c = int(e) >> 1
                if not active[c]:
                    continue
                if int(e) & 1:
                    bal_a[c] += amount
                else:
                    bal_a[c] -= amount
                if not check_balance:
                    ok_ab = bal_a[c] >= amount and amount >= minh[c]
                    ok_ba = (cap[c] - bal_a[c]) >= amount and amount >= minh[c]
                    if bool(passable[2 * c]) != ok_ab:
                        passable[2 * c] = ok_ab
                        flipped = True
                    if bool(passable[2 * c + 1]) != ok_ba:
                        passable[2 * c + 1] = ok_ba
                        flipped = True

            if center >= 0:
                for j in range(1, len(nodes) - 1):
                    if int(nodes[j]) == center:
                        for c in (int(eids[j - 1]) >> 1, int(eids[j]) >> 1):
                            n_acc[c] += 1
                            m_acc[c] += amount
                        break

            if flipped:
                return i + 1, True
        return t, False
