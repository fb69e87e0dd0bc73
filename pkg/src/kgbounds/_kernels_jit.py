"""Compiled inner loops (numba). Semantics mirror ``_kernels_np`` exactly."""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _alt_signs_one(M, a, max_iter):
    m1, m2 = M.shape
    col = np.empty(m2)
    row = np.empty(m1)
    b = np.empty(m2)
    prev = -np.inf
    val = -np.inf
    it = 0
    while it < max_iter:
        it += 1
        for y in range(m2):
            s = 0.0
            for x in range(m1):
                s += M[x, y] * a[x]
            col[y] = s
            b[y] = 1.0 if s >= 0.0 else -1.0
        val = 0.0
        for x in range(m1):
            s = 0.0
            for y in range(m2):
                s += M[x, y] * b[y]
            row[x] = s
            val += abs(s)
        if val <= prev:
            break
        prev = val
        for x in range(m1):
            a[x] = 1.0 if row[x] >= 0.0 else -1.0
    # the stored a matches the value's row-argmax unless we broke out
    for x in range(m1):
        a[x] = 1.0 if row[x] >= 0.0 else -1.0
    val = 0.0
    for x in range(m1):
        val += row[x] * a[x]
    return val, b, it


@njit(cache=True, parallel=True)
def alternate_signs(M, A0, max_iter):
    R, m1 = A0.shape
    m2 = M.shape[1]
    values = np.empty(R)
    A = A0.copy()
    B = np.empty((R, m2))
    iters = np.empty(R, dtype=np.int64)
    for r in prange(R):
        v, b, it = _alt_signs_one(M, A[r], max_iter)
        values[r] = v
        B[r] = b
        iters[r] = it
    return values, A, B, iters


@njit(cache=True)
def _normalize_rows(X, out):
    k, n = X.shape
    total = 0.0
    for i in range(k):
        nrm = 0.0
        for j in range(n):
            nrm += X[i, j] * X[i, j]
        nrm = np.sqrt(nrm)
        total += nrm
        if nrm == 0.0:
            out[i, 0] = 1.0
            for j in range(1, n):
                out[i, j] = 0.0
        else:
            for j in range(n):
                out[i, j] = X[i, j] / nrm
    return total


@njit(cache=True)
def _alt_vectors_one(M, MT, a, max_iter, tol):
    m1, m2 = M.shape
    n = a.shape[1]
    b = np.empty((m2, n))
    prev = -np.inf
    val = -np.inf
    it = 0
    while it < max_iter:
        it += 1
        _normalize_rows(np.dot(MT, a), b)
        val = _normalize_rows(np.dot(M, b), a)
        if val - prev < tol * (1.0 + abs(val)):
            break
        prev = val
    return val, b, it


@njit(cache=True, parallel=True)
def alternate_vectors(M, A0, max_iter, tol):
    R, m1, n = A0.shape
    m2 = M.shape[1]
    values = np.empty(R)
    A = A0.copy()
    B = np.empty((R, m2, n))
    iters = np.empty(R, dtype=np.int64)
    MT = np.ascontiguousarray(M.T)
    for r in prange(R):
        v, b, it = _alt_vectors_one(M, MT, A[r], max_iter, tol)
        values[r] = v
        B[r] = b
        iters[r] = it
    return values, A, B, iters


@njit(cache=True)
def bnb_suffix(M, suffix_bound, start, incumbent, a_best, node_budget, delta, exact_mode, cand, ncand):
    """Depth-first search over rows ``start..m1-1`` with ``a[start] = +1``.

    Node bound: sum_y |partial column sum| + suffix_bound[level].  Returns
    ``(incumbent, nodes, exhausted_budget, ncand)``; ``a_best`` and ``cand`` are
    written in place.  In exact mode a node is pruned when its bound does not
    beat the incumbent; otherwise it is pruned only when the bound is below
    ``incumbent - delta`` and near-optimal leaves are recorded in ``cand``.
    """
    m1, m2 = M.shape
    c = np.empty(m2, dtype=M.dtype)
    for y in range(m2):
        c[y] = M[start, y]
    a = np.zeros(m1, dtype=np.int8)
    a[start] = 1
    level = start + 1
    nodes = 0
    cap = cand.shape[0]
    zero = M[0, 0] - M[0, 0]
    descend = True
    while True:
        if descend:
            nodes += 1
            s = zero
            for y in range(m2):
                s += abs(c[y])
            bound = s + suffix_bound[level]
            if exact_mode:
                pruned = bound <= incumbent
            else:
                pruned = bound < incumbent - delta
            if not pruned and level == m1:
                if exact_mode:
                    incumbent = s
                    for x in range(m1):
                        a_best[x] = a[x]
                else:
                    if s > incumbent:
                        incumbent = s
                        for x in range(m1):
                            a_best[x] = a[x]
                    if ncand < cap:
                        for x in range(m1):
                            cand[ncand, x] = a[x]
                    ncand += 1
                pruned = True
            if nodes >= node_budget:
                return incumbent, nodes, True, ncand
            if not pruned:
                a[level] = 1
                for y in range(m2):
                    c[y] += M[level, y]
                level += 1
                continue
            descend = False
        # backtrack to the deepest row that can still flip
        row = level - 1
        if row <= start:
            return incumbent, nodes, False, ncand
        if a[row] == 1:
            a[row] = -1
            for y in range(m2):
                c[y] -= 2 * M[row, y]
            descend = True
        else:
            a[row] = 0
            for y in range(m2):
                c[y] += M[row, y]
            level = row


@njit(cache=True)
def brute_force(M, delta, exact_mode, cand):
    """Gray-code enumeration of a in {+-1}^m1 with a[0] = +1."""
    m1, m2 = M.shape
    a = np.ones(m1, dtype=np.int8)
    c = np.zeros(m2, dtype=M.dtype)
    for x in range(m1):
        for y in range(m2):
            c[y] += M[x, y]
    zero = M[0, 0] - M[0, 0]
    best = zero
    for y in range(m2):
        best += abs(c[y])
    best_a = a.copy()
    cap = cand.shape[0]
    ncand = 0
    # candidates are filtered against the final optimum by the caller
    if not exact_mode:
        cand[0, :] = a
        ncand = 1
    total = 1 << (m1 - 1)
    for k in range(1, total):
        # flip the row given by the lowest set bit of k (rows 1..m1-1)
        i = 1
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            i += 1
        a[i] = -a[i]
        if a[i] == 1:
            for y in range(m2):
                c[y] += 2 * M[i, y]
        else:
            for y in range(m2):
                c[y] -= 2 * M[i, y]
        s = zero
        for y in range(m2):
            s += abs(c[y])
        if s > best:
            best = s
            best_a[:] = a
        if not exact_mode and s >= best - delta:
            if ncand < cap:
                cand[ncand, :] = a
            ncand += 1
    return best, best_a, ncand


@njit(cache=True)
def pairwise_sweep(K, s, w, threshold, max_steps, obj, drop, obj_out):
    """Pairwise steps in weight space while the local gap stays >= threshold."""
    k = w.shape[0]
    steps = 0
    while steps < max_steps:
        ia = -1
        isl = 0
        for i in range(k):
            if w[i] > 0.0 and (ia < 0 or s[i] > s[ia]):
                ia = i
            if s[i] < s[isl]:
                isl = i
        if ia < 0 or ia == isl:
            break
        local = s[ia] - s[isl]
        if local < threshold or local <= 0.0:
            break
        dd = K[isl, isl] + K[ia, ia] - 2.0 * K[isl, ia]
        if dd <= 0.0:
            break
        gamma = min(local / dd, w[ia])
        w[ia] -= gamma
        w[isl] += gamma
        if w[ia] < drop:
            w[ia] = 0.0
        for i in range(k):
            s[i] += gamma * (K[i, isl] - K[i, ia])
        obj -= gamma * local - 0.5 * gamma * gamma * dd
        obj_out[steps] = obj
        steps += 1
    return steps
