"""Alternating-maximisation heuristic for SDP_n[M] and the Frank-Wolfe LMO.

One restart alternates b <- normalize(M^T a), a <- normalize(M b) from a
random start.  For n = 1 "normalize" is the sign (sign(0) = +1); otherwise a
zero vector is replaced by e_1.  Restarts are generated in fixed-size chunks
whose seeds derive from ``(seed, chunk index)``, so the result does not
depend on how chunks are spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matrix import ExactMatrix
from .polytope import SignStrategy, UnitStrategy, vertex_value

__all__ = ["OracleResult", "alternate_once", "heuristic_sdp", "lmo"]

CHUNK = 256
MAX_ITER = 10**4


@dataclass
class OracleResult:
    strategy: object
    value: float
    restarts_used: int
    seed: int
    meta: dict = field(default_factory=dict)

    def matrix(self) -> np.ndarray:
        return self.strategy.matrix()


def _float(M) -> np.ndarray:
    if isinstance(M, ExactMatrix):
        return M.to_float()
    return np.ascontiguousarray(np.asarray(M, dtype=float))


def _normalize(X, n):
    if n == 1:
        return np.where(X >= 0, 1.0, -1.0)
    nrm = np.linalg.norm(X, axis=1)
    out = np.zeros_like(X)
    ok = nrm > 0
    out[ok] = X[ok] / nrm[ok, None]
    out[~ok, 0] = 1.0
    return out


def alternate_once(M, n: int, a):
    """One round of updates; returns ``(b, a_new, value)``."""
    M = _float(M)
    a = np.asarray(a, dtype=float)
    if n == 1:
        a = a.reshape(-1)
        b = _normalize(a @ M, 1)
        row = M @ b
        a_new = _normalize(row, 1)
        return b, a_new, float(np.abs(row).sum())
    a = a.reshape(M.shape[0], n)
    b = _normalize(M.T @ a, n)
    rows = M @ b
    a_new = _normalize(rows, n)
    return b, a_new, float(np.linalg.norm(rows, axis=1).sum())


def _chunk(M, n, seed, k, size, max_iter, tol):
    rng = np.random.default_rng([seed, k])
    m1 = M.shape[0]
    if n == 1:
        A0 = rng.choice(np.array([-1.0, 1.0]), size=(size, m1))
        vals, A, B, iters = kernels.alternate_signs(M, A0, max_iter)
    else:
        A0 = rng.standard_normal((size, m1, n))
        A0 /= np.linalg.norm(A0, axis=2, keepdims=True)
        vals, A, B, iters = kernels.alternate_vectors(M, A0, max_iter, tol)
    j = int(np.argmax(vals))
    return float(vals[j]), A[j].copy(), B[j].copy(), int(np.sum(iters >= max_iter))


def heuristic_sdp(M, n: int = 1, restarts: int = 1000, seed: int = 0, workers: int = 1,
                  max_iter: int = MAX_ITER, tol: float = 1e-12) -> OracleResult:
    """Best value of the alternating heuristic over ``restarts`` random starts.

    A valid lower bound on SDP_n[M].  Ties between chunks go to the earlier
    chunk, which keeps the answer identical for any ``workers``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    Mf = _float(M)
    sizes = [min(CHUNK, restarts - s) for s in range(0, restarts, CHUNK)]
    jobs = list(enumerate(sizes))

    def run(job):
        k, size = job
        return _chunk(Mf, n, seed, k, size, max_iter, tol)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    val, a, b, _ = results[best]
    cap_hits = sum(r[3] for r in results)
    if n == 1:
        a = a.astype(np.int8)
        if a[0] < 0:  # global sign flip leaves the value unchanged
            a, b = -a, -b
        strat = SignStrategy(a, b.astype(np.int8))
    else:
        strat = UnitStrategy(a, b)
    value = float(vertex_value(Mf, strat))
    return OracleResult(strat, value, restarts, int(seed), {"cap_hits": cap_hits, "n": n, "backend": kernels.BACKEND})


def lmo(gradient, n: int = 1, budget: int = 1000, seed: int = 0, workers: int = 1,
        max_iter: int = MAX_ITER, tol: float = 1e-12) -> OracleResult:
    """Vertex (or rank-n point) V maximising <-gradient, V>, heuristically."""
    G = _float(gradient)
    if not np.any(G):
        m1, m2 = G.shape
        strat = SignStrategy(np.ones(m1), np.ones(m2)) if n == 1 else UnitStrategy(
            np.tile(np.eye(n)[0], (m1, 1)), np.tile(np.eye(n)[0], (m2, 1)))
        return OracleResult(strat, 0.0, 0, int(seed), {"n": n})
    return heuristic_sdp(-G, n, budget, seed, workers, max_iter, tol)
