# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled routing kernel; mirrors pykernel.py operation for operation.

See pykernel.py for the algorithm description. Both backends must return
bit-identical results; the equivalence is covered by tests.
"""

import numpy as np

cdef long long INF = (<long long>1) << 62


cdef inline bint _edge_ok(int e, long long amount,
                          long long[::1] bal_a, long long[::1] cap,
                          long long[::1] minh) nogil:
    cdef int c = e >> 1
    cdef long long bal
    if (e & 1) == 0:
        bal = bal_a[c]
    else:
        bal = cap[c] - bal_a[c]
    return bal >= amount and amount >= minh[c]


cdef inline bint _less(long long d1, int h1, int v1,
                       long long d2, int h2, int v2) nogil:
    if d1 != d2:
        return d1 < d2
    if h1 != h2:
        return h1 < h2
    return v1 < v2


cdef inline int _heap_push(long long[::1] hd, int[::1] hh, int[::1] hv,
                           int size, long long d, int h, int v) nogil:
    cdef int i = size
    cdef int p
    cdef long long td
    cdef int th, tv
    hd[i] = d
    hh[i] = h
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if _less(hd[i], hh[i], hv[i], hd[p], hh[p], hv[p]):
            td = hd[i]; hd[i] = hd[p]; hd[p] = td
            th = hh[i]; hh[i] = hh[p]; hh[p] = th
            tv = hv[i]; hv[i] = hv[p]; hv[p] = tv
            i = p
        else:
            break
    return size + 1


cdef inline int _heap_pop(long long[::1] hd, int[::1] hh, int[::1] hv,
                          int size) nogil:
    # caller reads the root before calling; returns the new size
    cdef int i = 0
    cdef int l, r, smallest
    cdef long long td
    cdef int th, tv
    size -= 1
    hd[0] = hd[size]
    hh[0] = hh[size]
    hv[0] = hv[size]
    while True:
        l = 2 * i + 1
        r = l + 1
        smallest = i
        if l < size and _less(hd[l], hh[l], hv[l], hd[smallest], hh[smallest], hv[smallest]):
            smallest = l
        if r < size and _less(hd[r], hh[r], hv[r], hd[smallest], hh[smallest], hv[smallest]):
            smallest = r
        if smallest == i:
            break
        td = hd[i]; hd[i] = hd[smallest]; hd[smallest] = td
        th = hh[i]; hh[i] = hh[smallest]; hh[smallest] = th
        tv = hv[i]; hv[i] = hv[smallest]; hv[smallest] = tv
        i = smallest
    return size


cdef void _dijkstra_back(long long[::1] in_indptr, int[::1] in_eids,
                         int[::1] esrc, long long[::1] wt,
                         int receiver,
                         bint check_balance, long long amount,
                         long long[::1] bal_a, long long[::1] cap,
                         long long[::1] minh,
                         long long[::1] dist, int[::1] hops,
                         signed char[::1] state,
                         long long[::1] hd, int[::1] hh, int[::1] hv) nogil:
    cdef int n = dist.shape[0]
    cdef int i, idx, v, u, e, size, h, nh
    cdef long long d, nd
    for i in range(n):
        dist[i] = INF
        hops[i] = 0
        state[i] = 0
    dist[receiver] = 0
    state[receiver] = 1
    hd[0] = 0
    hh[0] = 0
    hv[0] = receiver
    size = 1
    while size > 0:
        d = hd[0]
        h = hh[0]
        v = hv[0]
        size = _heap_pop(hd, hh, hv, size)
        if state[v] == 2:
            continue
        state[v] = 2
        for idx in range(<int>in_indptr[v], <int>in_indptr[v + 1]):
            e = in_eids[idx]
            if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
                continue
            u = esrc[e]
            if state[u] == 2:
                continue
            nd = d + wt[e]
            nh = h + 1
            if state[u] == 0 or nd < dist[u] or (nd == dist[u] and nh < hops[u]):
                dist[u] = nd
                hops[u] = nh
                state[u] = 1
                size = _heap_push(hd, hh, hv, size, nd, nh, u)


cdef int _greedy_forward(long long[::1] out_indptr, int[::1] out_eids,
                         int[::1] edst, long long[::1] wt,
                         int sender, int receiver,
                         bint free_first_hop,
                         bint check_balance, long long amount,
                         long long[::1] bal_a, long long[::1] cap,
                         long long[::1] minh,
                         long long[::1] dist, int[::1] hops,
                         signed char[::1] state,
                         int[::1] nodes, int[::1] eids,
                         long long* total_out) nogil:
    # returns the path length in edges, or -1 when unreachable
    cdef int idx, e, y, cur, nxt_y, nxt_e
    cdef long long w, nd, best_d
    cdef int nh, best_h, best_y, best_e, length
    best_d = INF
    best_h = 0
    best_y = -1
    best_e = -1
    for idx in range(<int>out_indptr[sender], <int>out_indptr[sender + 1]):
        e = out_eids[idx]
        if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
            continue
        y = edst[e]
        if state[y] != 2:
            continue
        if free_first_hop:
            w = 0
        else:
            w = wt[e]
        nd = w + dist[y]
        nh = 1 + hops[y]
        if best_y < 0 or _less(nd, nh, y, best_d, best_h, best_y):
            best_d = nd
            best_h = nh
            best_y = y
            best_e = e
    if best_y < 0:
        return -1
    nodes[0] = sender
    nodes[1] = best_y
    eids[0] = best_e
    length = 1
    cur = best_y
    while cur != receiver:
        nxt_y = -1
        nxt_e = -1
        for idx in range(<int>out_indptr[cur], <int>out_indptr[cur + 1]):
            e = out_eids[idx]
            if check_balance and not _edge_ok(e, amount, bal_a, cap, minh):
                continue
            y = edst[e]
            if state[y] != 2:
                continue
            if wt[e] + dist[y] == dist[cur] and hops[y] + 1 == hops[cur]:
                if nxt_y < 0 or y < nxt_y:
                    nxt_y = y
                    nxt_e = e
        if nxt_y < 0:
            return -2
        nodes[length + 1] = nxt_y
        eids[length] = nxt_e
        length += 1
        cur = nxt_y
    total_out[0] = best_d
    return length


def find_route(long long[::1] out_indptr, int[::1] out_eids,
               long long[::1] in_indptr, int[::1] in_eids,
               int[::1] esrc, int[::1] edst, long long[::1] wt,
               int sender, int receiver,
               bint free_first_hop, bint check_balance, long long amount,
               long long[::1] bal_a, long long[::1] cap, long long[::1] minh):
    """Cheapest well-funded path; see pykernel.find_route."""
    cdef int n = out_indptr.shape[0] - 1
    cdef int E = esrc.shape[0]
    dist_arr = np.empty(n, dtype=np.int64)
    hops_arr = np.empty(n, dtype=np.int32)
    state_arr = np.empty(n, dtype=np.int8)
    hd_arr = np.empty(E + 2, dtype=np.int64)
    hh_arr = np.empty(E + 2, dtype=np.int32)
    hv_arr = np.empty(E + 2, dtype=np.int32)
    nodes_arr = np.empty(n + 1, dtype=np.int32)
    eids_arr = np.empty(n + 1, dtype=np.int32)
    cdef long long[::1] dist = dist_arr
    cdef int[::1] hops = hops_arr
    cdef signed char[::1] state = state_arr
    cdef long long[::1] hd = hd_arr
    cdef int[::1] hh = hh_arr
    cdef int[::1] hv = hv_arr
    cdef int[::1] nodes = nodes_arr
    cdef int[::1] eids = eids_arr
    cdef long long total = 0
    cdef int length

    _dijkstra_back(in_indptr, in_eids, esrc, wt, receiver,
                   check_balance, amount, bal_a, cap, minh,
                   dist, hops, state, hd, hh, hv)
    length = _greedy_forward(out_indptr, out_eids, edst, wt,
                             sender, receiver, free_first_hop,
                             check_balance, amount, bal_a, cap, minh,
                             dist, hops, state, nodes, eids, &total)
    if length == -1:
        return None
    if length == -2:
        raise AssertionError("optimal path reconstruction failed")
    return int(total), nodes_arr[: length + 1].copy(), eids_arr[:length].copy()


cdef class EntryRunner:
    """Routes and settles one traffic entry; see pykernel.EntryRunner.

    Holds views of the graph adjacency and the amount graph's buffers
    (updated in place by their owners) plus reusable search scratch.
    """

    cdef long long[::1] out_indptr
    cdef int[::1] out_eids
    cdef long long[::1] in_indptr
    cdef int[::1] in_eids
    cdef long long[::1] cout_indptr
    cdef int[::1] cout_eids
    cdef long long[::1] cin_indptr
    cdef int[::1] cin_eids
    cdef int[::1] esrc
    cdef int[::1] edst
    cdef long long[::1] wt
    cdef unsigned char[::1] passable
    cdef long long[::1] bal_a
    cdef long long[::1] cap
    cdef long long[::1] minh
    cdef long long[::1] dist
    cdef int[::1] hops
    cdef signed char[::1] state
    cdef long long[::1] hd
    cdef int[::1] hh
    cdef int[::1] hv
    cdef int[::1] nodes
    cdef int[::1] eids
    cdef object _scratch  # keeps the scratch ndarrays alive

    def __init__(self, out_indptr, out_eids, in_indptr, in_eids,
                 cout_indptr, cout_eids, cin_indptr, cin_eids,
                 esrc, edst, wt, passable, bal_a, cap, minh):
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
        n = out_indptr.shape[0] - 1
        E = esrc.shape[0]
        scratch = (
            np.empty(n, dtype=np.int64),
            np.empty(n, dtype=np.int32),
            np.empty(n, dtype=np.int8),
            np.empty(E + 2, dtype=np.int64),
            np.empty(E + 2, dtype=np.int32),
            np.empty(E + 2, dtype=np.int32),
            np.empty(n + 1, dtype=np.int32),
            np.empty(n + 1, dtype=np.int32),
        )
        self._scratch = scratch
        self.dist, self.hops, self.state = scratch[0], scratch[1], scratch[2]
        self.hd, self.hh, self.hv = scratch[3], scratch[4], scratch[5]
        self.nodes, self.eids = scratch[6], scratch[7]

    def run(self, int[::1] senders, int[::1] receivers,
            long long amount, unsigned char[::1] active,
            int center, bint free_first_hop, bint check_balance,
            unsigned char[::1] status, long long[::1] fee,
            long long[::1] m_acc, long long[::1] n_acc):
        """Process transactions from index 0; returns (processed, needs_recompact)."""
        cdef long long[::1] o_indptr
        cdef int[::1] o_eids
        cdef long long[::1] i_indptr
        cdef int[::1] i_eids
        if check_balance:
            o_indptr = self.out_indptr
            o_eids = self.out_eids
            i_indptr = self.in_indptr
            i_eids = self.in_eids
        else:
            o_indptr = self.cout_indptr
            o_eids = self.cout_eids
            i_indptr = self.cin_indptr
            i_eids = self.cin_eids

        cdef int t = senders.shape[0]
        cdef long long total = 0
        cdef int i, j, length, e, c, cc
        cdef bint flipped, ok_ab, ok_ba
        for i in range(t):
            _dijkstra_back(i_indptr, i_eids, self.esrc, self.wt, receivers[i],
                           check_balance, amount, self.bal_a, self.cap, self.minh,
                           self.dist, self.hops, self.state, self.hd, self.hh, self.hv)
            length = _greedy_forward(o_indptr, o_eids, self.edst, self.wt,
                                     senders[i], receivers[i], free_first_hop,
                                     check_balance, amount, self.bal_a, self.cap,
                                     self.minh, self.dist, self.hops, self.state,
                                     self.nodes, self.eids, &total)
            if length == -2:
                raise AssertionError("optimal path reconstruction failed")
            if length < 0:
                status[i] = 0
                fee[i] = 0
                continue
            status[i] = 1
            fee[i] = total

            flipped = False
            for j in range(length):
                e = self.eids[j]
                c = e >> 1
                if not active[c]:
                    continue
                if e & 1:
                    self.bal_a[c] += amount
                else:
                    self.bal_a[c] -= amount
                if not check_balance:
                    ok_ab = self.bal_a[c] >= amount and amount >= self.minh[c]
                    ok_ba = (self.cap[c] - self.bal_a[c]) >= amount and amount >= self.minh[c]
                    if (self.passable[2 * c] != 0) != ok_ab:
                        self.passable[2 * c] = 1 if ok_ab else 0
                        flipped = True
                    if (self.passable[2 * c + 1] != 0) != ok_ba:
                        self.passable[2 * c + 1] = 1 if ok_ba else 0
                        flipped = True

            if center >= 0:
                for j in range(1, length):
                    if self.nodes[j] == center:
                        cc = self.eids[j - 1] >> 1
                        n_acc[cc] += 1
                        m_acc[cc] += amount
                        cc = self.eids[j] >> 1
                        n_acc[cc] += 1
                        m_acc[cc] += amount
                        break

            if flipped:
                return i + 1, True
        return t, False
