"""Network-simplex kernel for the transportation LP.

Minimizes ``sum gamma_ij * c_ij`` with ``c_ij = -<x_i, y_j>`` over the
transport polytope.  The basis is a spanning tree over sources, targets
and a big-M artificial root; the tree is stored in flat arrays
(parent / first_child / next_sib / prev_sib / depth / flow) so the hot
loop compiles under numba.  Without numba the same code runs
interpreted, which is fine for desk-size instances.

Node convention: sources 0..n-1, targets n..n+m-1, root n+m.  Node
potentials ``pi`` keep every basic arc tight: ``c_ij = pi[i] + pi[n+j]``.
Sources always point toward their tree parent, targets away from it,
which fixes the flow-update signs on pivot cycles.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


STATUS_OPTIMAL = 0
STATUS_PIVOT_LIMIT = 1


@njit(cache=True)
def _unlink(v, parent, first_child, next_sib, prev_sib):
    p = parent[v]
    if prev_sib[v] != -1:
        next_sib[prev_sib[v]] = next_sib[v]
    else:
        first_child[p] = next_sib[v]
    if next_sib[v] != -1:
        prev_sib[next_sib[v]] = prev_sib[v]
    prev_sib[v] = -1
    next_sib[v] = -1


@njit(cache=True)
def _link(v, p, parent, first_child, next_sib, prev_sib):
    c = first_child[p]
    next_sib[v] = c
    if c != -1:
        prev_sib[c] = v
    prev_sib[v] = -1
    first_child[p] = v
    parent[v] = p


@njit(cache=True)
def _pivot(
    i,
    tn,
    r,
    n,
    pi,
    parent,
    depth,
    flow,
    first_child,
    next_sib,
    prev_sib,
    path_i,
    path_t,
    stack,
):
    """Enter arc (i -> tn) with reduced cost r < 0; return 1 when degenerate."""
    # climb to the apex with the two-pointer depth walk
    x = i
    y = tn
    li = 0
    lt = 0
    while depth[x] > depth[y]:
        path_i[li] = x
        li += 1
        x = parent[x]
    while depth[y] > depth[x]:
        path_t[lt] = y
        lt += 1
        y = parent[y]
    while x != y:
        path_i[li] = x
        li += 1
        x = parent[x]
        path_t[lt] = y
        lt += 1
        y = parent[y]

    # blocking arcs: targets on the tn->apex leg, sources on the apex->i leg
    theta = np.inf
    leave = -1
    leave_on_i_side = False
    for k in range(lt):
        v = path_t[k]
        if v >= n and flow[v] < theta:
            theta = flow[v]
            leave = v
            leave_on_i_side = False
    for k in range(li - 1, -1, -1):
        v = path_i[k]
        if v < n and flow[v] < theta:
            theta = flow[v]
            leave = v
            leave_on_i_side = True

    if theta > 0.0:
        for k in range(lt):
            v = path_t[k]
            if v < n:
                flow[v] += theta
            else:
                flow[v] -= theta
        for k in range(li):
            v = path_i[k]
            if v < n:
                flow[v] -= theta
            else:
                flow[v] += theta

    # detach the subtree under the leaving arc
    _unlink(leave, parent, first_child, next_sib, prev_sib)
    parent[leave] = -1

    e_in = i if leave_on_i_side else tn
    if leave_on_i_side:
        ds = r
        dt = -r
    else:
        ds = -r
        dt = r

    # dual shift over the detached subtree keeps internal arcs tight and
    # makes the entering arc tight
    sp = 0
    stack[sp] = leave
    sp += 1
    while sp > 0:
        sp -= 1
        v = stack[sp]
        if v < n:
            pi[v] += ds
        else:
            pi[v] += dt
        c = first_child[v]
        while c != -1:
            stack[sp] = c
            sp += 1
            c = next_sib[c]

    # re-root the subtree at the entering endpoint: reverse the parent
    # chain from e_in up to the old subtree root
    node = e_in
    new_parent = tn if leave_on_i_side else i
    new_flow = theta
    while node != -1:
        nxt = parent[node]
        nxt_flow = flow[node]
        if nxt != -1:
            _unlink(node, parent, first_child, next_sib, prev_sib)
        _link(node, new_parent, parent, first_child, next_sib, prev_sib)
        flow[node] = new_flow
        new_parent = node
        new_flow = nxt_flow
        node = nxt

    # refresh depths inside the reattached subtree
    depth[e_in] = depth[parent[e_in]] + 1
    sp = 0
    stack[sp] = e_in
    sp += 1
    while sp > 0:
        sp -= 1
        v = stack[sp]
        c = first_child[v]
        while c != -1:
            depth[c] = depth[v] + 1
            stack[sp] = c
            sp += 1
            c = next_sib[c]
    return 1 if theta == 0.0 else 0


@njit(cache=True)
def _pivot_loop(
    X,
    Y,
    pi,
    parent,
    depth,
    flow,
    first_child,
    next_sib,
    prev_sib,
    tol,
    max_pivots,
):
    """Network simplex with strided-row candidate harvesting.

    A refill visits rows in a golden-ratio stride (decorrelating the
    candidates spatially) and keeps the best violating arc of each row,
    up to a fixed batch.  Between pivots the surviving candidates are
    re-priced against the current duals and the best one enters.  A Bland
    phase (first eligible arc in fixed row-major order) engages after a
    long degenerate run, guaranteeing termination.
    """
    n = X.shape[0]
    m = Y.shape[0]
    d = X.shape[1]
    N = n + m + 1
    path_i = np.empty(N, np.int64)
    path_t = np.empty(N, np.int64)
    stack = np.empty(N, np.int64)

    batch = 64
    rows_budget = 48
    cand_i = np.empty(batch, np.int64)
    cand_j = np.empty(batch, np.int64)
    cand_r = np.empty(batch, np.float64)
    count = 0

    # row visiting order: stride coprime with n spreads consecutive rows
    stride = int(0.6180339887498949 * n)
    if stride < 1:
        stride = 1
    while _gcd(stride, n) != 1:
        stride += 1
    row_cursor = 0

    pivots = 0
    degenerate_run = 0
    bland = False

    while True:
        if count == 0:
            if bland:
                # first eligible arc in fixed order
                for i in range(n):
                    for j in range(m):
                        dot = 0.0
                        for k in range(d):
                            dot += X[i, k] * Y[j, k]
                        r = -dot - pi[i] - pi[n + j]
                        if r < -tol:
                            cand_i[0] = i
                            cand_j[0] = j
                            cand_r[0] = r
                            count = 1
                            break
                    if count:
                        break
                if count == 0:
                    return STATUS_OPTIMAL, pivots
            else:
                rows_seen = 0
                while rows_seen < n:
                    i = (row_cursor * stride) % n
                    row_cursor += 1
                    rows_seen += 1
                    best_j = -1
                    best_r = -tol
                    for j in range(m):
                        dot = 0.0
                        for k in range(d):
                            dot += X[i, k] * Y[j, k]
                        r = -dot - pi[i] - pi[n + j]
                        if r < best_r:
                            best_r = r
                            best_j = j
                    if best_j != -1:
                        cand_i[count] = i
                        cand_j[count] = best_j
                        cand_r[count] = best_r
                        count += 1
                        if count == batch:
                            break
                    if count > 0 and rows_seen >= rows_budget:
                        break
                if count == 0:
                    return STATUS_OPTIMAL, pivots

        # re-price survivors against the current duals; enter the best
        best = -1
        best_r = -tol
        t = 0
        while t < count:
            ci = cand_i[t]
            cj = cand_j[t]
            dot = 0.0
            for k in range(d):
                dot += X[ci, k] * Y[cj, k]
            r = -dot - pi[ci] - pi[n + cj]
            if r < -tol:
                cand_r[t] = r
                if r < best_r:
                    best_r = r
                    best = t
                t += 1
            else:
                count -= 1
                cand_i[t] = cand_i[count]
                cand_j[t] = cand_j[count]
                cand_r[t] = cand_r[count]
        if best == -1:
            count = 0
            continue
        ei = cand_i[best]
        ej = cand_j[best]
        er = cand_r[best]
        count -= 1
        cand_i[best] = cand_i[count]
        cand_j[best] = cand_j[count]
        cand_r[best] = cand_r[count]

        was_degen = _pivot(
            ei,
            n + ej,
            er,
            n,
            pi,
            parent,
            depth,
            flow,
            first_child,
            next_sib,
            prev_sib,
            path_i,
            path_t,
            stack,
        )
        pivots += 1
        if was_degen == 1:
            degenerate_run += 1
            if degenerate_run > 4000:
                bland = True
                count = 0
        else:
            degenerate_run = 0
            if bland:
                bland = False
                count = 0
        if pivots > max_pivots:
            return STATUS_PIVOT_LIMIT, pivots


@njit(cache=True)
def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
