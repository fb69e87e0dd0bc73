"""Pure-numpy versions of the compiled kernels.

Restart loops are vectorised across restarts; the branch-and-bound walk is
the same depth-first search with numpy column updates; brute force enumerates
sign blocks by matrix products instead of a Gray code.
"""

import numpy as np


def _sign(x):
    return np.where(x >= 0, 1.0, -1.0)


def alternate_signs(M, A0, max_iter):
    A = A0.astype(float).copy()
    R = A.shape[0]
    m2 = M.shape[1]
    B = np.empty((R, m2))
    rows = np.zeros_like(A)
    prev = np.full(R, -np.inf)
    iters = np.zeros(R, dtype=np.int64)
    active = np.ones(R, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        b = _sign(A[idx] @ M)
        B[idx] = b
        rw = b @ M.T
        rows[idx] = rw
        val = np.abs(rw).sum(axis=1)
        stop = val <= prev[idx]
        keep = idx[~stop]
        prev[keep] = val[~stop]
        A[keep] = _sign(rw[~stop])
        active[idx[stop]] = False
    A = _sign(rows)
    values = (rows * A).sum(axis=1)
    return values, A, B, iters


def _normalize(X):
    nrm = np.linalg.norm(X, axis=-1)
    out = np.divide(X, nrm[..., None], out=np.zeros_like(X), where=nrm[..., None] != 0)
    zero = nrm == 0
    out[zero, 0] = 1.0
    return out, nrm.sum(axis=-1)


def alternate_vectors(M, A0, max_iter, tol):
    A = A0.astype(float).copy()
    R, _, n = A.shape
    m2 = M.shape[1]
    B = np.empty((R, m2, n))
    values = np.full(R, -np.inf)
    prev = np.full(R, -np.inf)
    iters = np.zeros(R, dtype=np.int64)
    active = np.ones(R, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        b, _ = _normalize(np.einsum("xy,rxj->ryj", M, A[idx]))
        B[idx] = b
        a, val = _normalize(np.einsum("xy,ryj->rxj", M, b))
        A[idx] = a
        values[idx] = val
        stop = val - prev[idx] < tol * (1.0 + np.abs(val))
        prev[idx] = val
        active[idx[stop]] = False
    return values, A, B, iters


def bnb_suffix(M, suffix_bound, start, incumbent, a_best, node_budget, delta, exact_mode, cand, ncand):
    m1, m2 = M.shape
    c = M[start].copy()
    a = np.zeros(m1, dtype=np.int8)
    a[start] = 1
    level = start + 1
    nodes = 0
    cap = cand.shape[0]
    descend = True
    while True:
        if descend:
            nodes += 1
            s = np.abs(c).sum()
            bound = s + suffix_bound[level]
            pruned = bound <= incumbent if exact_mode else bound < incumbent - delta
            if not pruned and level == m1:
                if exact_mode or s > incumbent:
                    incumbent = s
                    a_best[:] = a
                if not exact_mode:
                    if ncand < cap:
                        cand[ncand] = a
                    ncand += 1
                pruned = True
            if nodes >= node_budget:
                return incumbent, nodes, True, ncand
            if not pruned:
                a[level] = 1
                c += M[level]
                level += 1
                continue
            descend = False
        row = level - 1
        if row <= start:
            return incumbent, nodes, False, ncand
        if a[row] == 1:
            a[row] = -1
            c -= 2 * M[row]
            descend = True
        else:
            a[row] = 0
            c += M[row]
            level = row


def _sign_block(m1, lo, hi):
    """Rows ``k in [lo, hi)`` as sign vectors with a[0] = +1, bit i-1 of k -> row i."""
    k = np.arange(lo, hi, dtype=np.int64)[:, None]
    bits = (k >> np.arange(m1 - 1, dtype=np.int64)[None, :]) & 1
    out = np.ones((hi - lo, m1), dtype=np.int8)
    out[:, 1:] = 1 - 2 * bits
    return out


def brute_force(M, delta, exact_mode, cand, chunk=1 << 14):
    m1 = M.shape[0]
    total = 1 << (m1 - 1)
    best = None
    best_a = None
    vals_all = []
    for lo in range(0, total, chunk):
        hi = min(total, lo + chunk)
        S = _sign_block(m1, lo, hi)
        vals = np.abs(S.astype(M.dtype) @ M).sum(axis=1)
        j = int(np.argmax(vals))
        if best is None or vals[j] > best:
            best, best_a = vals[j], S[j].copy()
        if not exact_mode:
            vals_all.append((vals, lo))
    ncand = 0
    if not exact_mode:
        cap = cand.shape[0]
        for vals, lo in vals_all:
            for j in np.flatnonzero(vals >= best - delta):
                if ncand < cap:
                    cand[ncand] = _sign_block(m1, lo + j, lo + j + 1)[0]
                ncand += 1
    return best, best_a, ncand


def pairwise_sweep(K, s, w, threshold, max_steps, obj, drop, obj_out):
    """Pairwise steps in weight space while the local gap stays >= threshold."""
    steps = 0
    while steps < max_steps:
        live = np.flatnonzero(w > 0.0)
        if len(live) == 0:
            break
        ia = int(live[np.argmax(s[live])])
        isl = int(np.argmin(s))
        local = s[ia] - s[isl]
        if ia == isl or local < threshold or local <= 0.0:
            break
        dd = K[isl, isl] + K[ia, ia] - 2.0 * K[isl, ia]
        if dd <= 0.0:
            break
        gamma = min(local / dd, w[ia])
        w[ia] -= gamma
        w[isl] += gamma
        if w[ia] < drop:
            w[ia] = 0.0
        s += gamma * (K[:, isl] - K[:, ia])
        obj -= gamma * local - 0.5 * gamma * gamma * dd
        obj_out[steps] = obj
        steps += 1
    return steps
