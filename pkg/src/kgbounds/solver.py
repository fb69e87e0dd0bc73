"""Exact SDP_1[M] = max_a sum_y |sum_x M_xy a_x| over a in {-1, +1}^m1.

Both searches fix a_1 = +1 (the objective is invariant under a -> -a).

The branch-and-bound visits rows in decreasing L1 norm.  A node with rows
``0..l-1`` fixed and partial column sums ``c`` is bounded by
``sum_y |c_y| + T_l``, where ``T_l`` is SDP_1 of the row block ``l..m1-1``.
The ``T_l`` are computed bottom-up with the same search, each one bounding
the next (the tail-block bound is never weaker than summing |M_xy| over the
unfixed rows, since T_l is at most that sum).

Integer matrices are searched in exact int64 arithmetic.  Other exact
matrices are searched in floats with a safety margin; every leaf within the
margin of the float optimum is re-evaluated exactly, and the exact maximum
among them is returned.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .exact import ExactScalar
from .matrix import ExactMatrix
from .oracle import heuristic_sdp
from .polytope import SignStrategy

__all__ = [
    "BudgetExceeded",
    "ExactSolveResult",
    "ResourceError",
    "exact_objective",
    "read_instance",
    "sdp1_branch_and_bound",
    "sdp1_bruteforce",
    "sdp1_rectangular",
]

BRUTE_FORCE_MAX = 22
RECT_CAP = 34
_INT_LIMIT = 2**62


class ResourceError(RuntimeError):
    pass


class BudgetExceeded(ResourceError):
    pass


@dataclass
class ExactSolveResult:
    value: object  # int, Fraction or ExactScalar (float when not exact)
    strategy: SignStrategy
    nodes_visited: int
    proof_flag: str  # "optimal" or "budget-exceeded"
    meta: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.proof_flag == "optimal"

    def to_json(self) -> dict:
        v = self.value
        if isinstance(v, ExactScalar):
            val = v.to_json()
        elif isinstance(v, Fraction):
            val = {"radicands": [1], "coeffs": [[v.numerator, v.denominator]]}
        else:
            val = int(v) if isinstance(v, (int, np.integer)) else float(v)
        return {
            "value": val,
            "value_float": float(v),
            "a": self.strategy.a.tolist(),
            "b": self.strategy.b.tolist(),
            "nodes_visited": int(self.nodes_visited),
            "proof_flag": self.proof_flag,
        }


# -- input handling -------------------------------------------------------


class _Prepared:
    """Matrix in the form the kernels need, plus the exact scale back."""

    def __init__(self, M):
        self.exact_matrix = None
        if isinstance(M, ExactMatrix):
            if M.is_rational():
                num, den = M.integer_form()
                self._int_or_none(num, den)
            else:
                self.mode = "float"
                self.exact_matrix = M
                self.work = M.to_float()
                self.den = 1
        else:
            arr = np.asarray(M)
            if arr.dtype.kind in "iu" or arr.dtype == object:
                self._int_or_none(arr.astype(object), 1)
            else:
                self.mode = "float"
                self.work = arr.astype(float)
                self.den = 1
        self.work = np.ascontiguousarray(self.work)
        self.m1, self.m2 = self.work.shape

    def _int_or_none(self, num, den):
        total = sum(abs(int(v)) for v in num.flat)
        if total >= _INT_LIMIT:
            raise ResourceError("integer entries too large for int64 accumulation")
        self.mode = "int"
        self.work = np.array(num, dtype=np.int64)
        self.den = den

    @property
    def exact_mode(self) -> bool:
        return self.mode == "int"

    def delta(self) -> float:
        if self.exact_mode:
            return 0.0
        scale = float(np.abs(self.work).sum())
        return 1e-9 * (1.0 + scale)

    def value(self, raw):
        """Map a kernel value back to the caller's units."""
        if self.exact_mode:
            raw = int(raw)
            return raw if self.den == 1 else Fraction(raw, self.den)
        return float(raw)


def exact_objective(M, a):
    """sum_y |sum_x M_xy a_x| exactly (int / Fraction / ExactScalar)."""
    a = np.asarray(a, dtype=np.int64)
    if isinstance(M, ExactMatrix):
        if M.is_rational():
            num, den = M.integer_form()
            col = a.astype(object) @ num
            total = sum(abs(int(v)) for v in col)
            return total if den == 1 else Fraction(total, den)
        col = ExactMatrix.from_int(a.reshape(1, -1)) @ M
        total = ExactScalar(0)
        for j in range(col.shape[1]):
            total = total + abs(col[0, j])
        return total
    arr = np.asarray(M)
    if arr.dtype.kind in "iu" or arr.dtype == object:
        return int(sum(abs(int(v)) for v in a.astype(object) @ arr.astype(object)))
    return float(np.abs(a @ arr).sum())


def _finish(prep: _Prepared, M, best_raw, best_a, cand, ncand, nodes, flag, meta):
    """Exact re-evaluation of float-mode candidates, then package the result."""
    if prep.exact_mode or prep.exact_matrix is None:
        value = prep.value(best_raw)
        a = best_a
    else:
        pool = [best_a] + [cand[i] for i in range(min(ncand, len(cand)))]
        delta = prep.delta()
        value, a = None, None
        seen = set()
        for c in pool:
            key = c.tobytes()
            if key in seen:
                continue
            seen.add(key)
            if float(np.abs(c.astype(float) @ prep.work).sum()) < best_raw - delta:
                continue
            v = exact_objective(prep.exact_matrix, c)
            if value is None or v > value or (v == value and tuple(c) < tuple(a)):
                value, a = v, c
        meta["exact_candidates"] = len(seen)
    a = np.asarray(a, dtype=np.int8).copy()
    strat = SignStrategy.from_a(prep.work, a)
    return ExactSolveResult(value, strat, int(nodes), flag, meta)


def _cand_buffer(m1, cap):
    return np.zeros((cap, m1), dtype=np.int8)


# -- brute force ----------------------------------------------------------


def sdp1_bruteforce(M, cand_cap: int = 4096) -> ExactSolveResult:
    prep = _Prepared(M)
    if prep.m1 > BRUTE_FORCE_MAX:
        raise ResourceError(f"brute force limited to m1 <= {BRUTE_FORCE_MAX}, got {prep.m1}")
    while True:
        cand = _cand_buffer(prep.m1, cand_cap)
        best, best_a, ncand = kernels.brute_force(prep.work, prep.delta(), prep.exact_mode, cand)
        if prep.exact_mode or ncand <= cand_cap or prep.exact_matrix is None:
            break
        cand_cap *= 8
    return _finish(prep, M, best, np.asarray(best_a), cand, ncand, 1 << (prep.m1 - 1), "optimal", {"method": "brute-force"})


# -- branch and bound -----------------------------------------------------


def sdp1_branch_and_bound(M, warm_start: SignStrategy | None = None, node_budget: int = 10**12,
                          restarts: int = 1000, seed: int = 0, cand_cap: int = 4096) -> ExactSolveResult:
    t0 = time.perf_counter()
    prep = _Prepared(M)
    W = prep.work
    m1 = prep.m1
    order = np.argsort(-np.abs(W).sum(axis=1), kind="stable")
    Wo = np.ascontiguousarray(W[order])
    delta = prep.delta()
    exact = prep.exact_mode

    if warm_start is None:
        warm_start = heuristic_sdp(W.astype(float), 1, restarts, seed).strategy
    a0 = np.asarray(warm_start.a, dtype=np.int8)[order]
    if a0[0] < 0:
        a0 = -a0
    inc0 = np.abs(a0.astype(W.dtype) @ Wo).sum()

    # tail-block values T_l, l = m1..1, each searched with the ones below it
    suffix = np.zeros(m1 + 1, dtype=W.dtype)
    dummy = _cand_buffer(m1, 1)
    nodes_total = 0
    for level in range(m1 - 1, 0, -1):
        # both the block below and the single row are lower bounds on T_level
        row_val = np.abs(Wo[level]).sum()
        inc = max(suffix[level + 1] - (0 if exact else delta), row_val)
        a_tmp = np.zeros(m1, dtype=np.int8)
        budget = node_budget - nodes_total
        if budget <= 0:
            return _budget_result(prep, M, a0, inc0, order, nodes_total, t0)
        if level == m1 - 1:
            val, nodes, hit = row_val, 1, False
        else:
            val, nodes, hit, _ = kernels.bnb_suffix(Wo, suffix, level, inc, a_tmp, budget, delta, exact, dummy, 0)
        nodes_total += nodes
        if hit:
            return _budget_result(prep, M, a0, inc0, order, nodes_total, t0)
        suffix[level] = val if exact else val + delta

    while True:
        cand = _cand_buffer(m1, cand_cap)
        a_best = a0.copy()
        budget = node_budget - nodes_total
        best, nodes, hit, ncand = kernels.bnb_suffix(Wo, suffix, 0, inc0, a_best, budget, delta, exact, cand, 0)
        if exact or prep.exact_matrix is None or ncand <= cand_cap or hit:
            break
        nodes_total += nodes
        cand_cap *= 8
    nodes_total += nodes
    if hit:
        return _budget_result(prep, M, a_best, best, order, nodes_total, t0)
    inv = np.empty(m1, dtype=np.int64)
    inv[order] = np.arange(m1)
    a_orig = a_best[inv]
    cand_orig = cand[:, inv]
    if a_orig[0] < 0:
        a_orig = -a_orig
    meta = {"method": "branch-and-bound", "seconds": time.perf_counter() - t0, "row_order": order.tolist()}
    return _finish(prep, M, best, a_orig, cand_orig, ncand, nodes_total, "optimal", meta)


def _budget_result(prep, M, a_ordered, raw, order, nodes, t0):
    inv = np.empty(prep.m1, dtype=np.int64)
    inv[order] = np.arange(prep.m1)
    a = np.asarray(a_ordered, dtype=np.int8)[inv]
    if a[0] < 0:
        a = -a
    strat = SignStrategy.from_a(prep.work, a)
    return ExactSolveResult(exact_objective(M, a), strat, int(nodes), "budget-exceeded",
                            {"method": "branch-and-bound", "seconds": time.perf_counter() - t0})


def sdp1_rectangular(M, warm_start=None, node_budget: int = 10**12, cap: int = RECT_CAP, **kw) -> ExactSolveResult:
    """Branch on the smaller side (transposing if needed)."""
    shape = M.shape
    transposed = shape[1] < shape[0]
    if transposed:
        M = M.T
        if warm_start is not None:
            warm_start = SignStrategy(warm_start.b, warm_start.a)
    if M.shape[0] > cap:
        raise ResourceError(f"branching side {M.shape[0]} exceeds cap {cap}")
    res = sdp1_branch_and_bound(M, warm_start, node_budget, **kw)
    if transposed:
        res.strategy = SignStrategy(res.strategy.b, res.strategy.a)
        res.meta["transposed"] = True
    return res


# -- instance files -------------------------------------------------------


def read_instance(path_or_text):
    """JSON (exact matrix serialization) or text: "m1 m2" header then m1*m2 numbers."""
    text = path_or_text
    if not (isinstance(text, str) and ("\n" in text or text.lstrip()[:1] in ("{", "["))):
        with open(path_or_text) as fh:
            text = fh.read()
    s = text.lstrip()
    if s.startswith("{") or s.startswith("["):
        obj = json.loads(s)
        if isinstance(obj, list):
            return ExactMatrix.from_entries([[Fraction(str(v)) if isinstance(v, float) else v for v in r] for r in obj])
        if "matrix" in obj:
            obj = obj["matrix"]
        if isinstance(obj, list):
            return ExactMatrix.from_entries(obj)
        return ExactMatrix.from_json(obj)
    toks = s.split()
    m1, m2 = int(toks[0]), int(toks[1])
    vals = toks[2:]
    if len(vals) < m1 * m2:
        raise ValueError(f"expected {m1 * m2} entries, found {len(vals)}")
    entries = [Fraction(v) for v in vals[: m1 * m2]]
    return ExactMatrix.from_entries([entries[i * m2:(i + 1) * m2] for i in range(m1)])
