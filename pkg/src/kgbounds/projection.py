"""Blended pairwise conditional gradients onto cut_n and the facet loop.

Everything runs in the coordinates of an :class:`InvariantBasis`: for a
symmetry group G the iterate lives in the G-invariant subspace, where the
projection of an invariant target onto cut_n coincides with the projection
onto its symmetrisation.  With the trivial group the coordinates are just the
flattened matrix.

Facet loop, for a point P outside cut_1::

    v <- 1
    repeat:
        X, S <- project(v P)            # S = active vertices
        M    <- v P - X                 # final gradient, separating direction
        v    <- SDP_1[M] / <M, P>       # v P now lies on the hyperplane
    until the active vertices span an affine hyperplane (codimension 1)

The facet normal A is then recovered exactly from the integer orbit sums of
the active vertices, and SDP_1[A] is re-solved exactly to certify it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import ExactScalar
from .kernels import pairwise_sweep
from .matrix import ExactMatrix
from .oracle import heuristic_sdp, lmo
from .polytope import InvariantBasis, SignStrategy, UnitStrategy, invariant_basis
from .solver import sdp1_branch_and_bound

__all__ = [
    "ActiveSet",
    "BPCGResult",
    "DecompositionCertificate",
    "FacetResult",
    "RoundingFailed",
    "bpcg_project",
    "decomposition_certificate",
    "facet_loop",
    "integerize_normal",
    "v_update",
]

WEIGHT_DROP = 1e-12
LMO_MAX_ITER = 100


class RoundingFailed(ValueError):
    pass


class ActiveSet:
    """Convex combination of vertices in coordinate space."""

    def __init__(self):
        self.coords: list[np.ndarray] = []
        self.strategies: list = []
        self.keys: list[bytes] = []
        self.weights = np.zeros(0)

    def __len__(self):
        return len(self.coords)

    @property
    def iterate(self) -> np.ndarray:
        return np.asarray(self.weights) @ np.array(self.coords)

    def index(self, key: bytes) -> int:
        try:
            return self.keys.index(key)
        except ValueError:
            return -1

    def add(self, z, strat, key, w):
        self.coords.append(z)
        self.strategies.append(strat)
        self.keys.append(key)
        self.weights = np.append(self.weights, w)

    def prune(self):
        keep = np.flatnonzero(self.weights >= WEIGHT_DROP)
        if len(keep) != len(self.weights):
            self.coords = [self.coords[i] for i in keep]
            self.strategies = [self.strategies[i] for i in keep]
            self.keys = [self.keys[i] for i in keep]
            self.weights = self.weights[keep]
        self.weights = self.weights / self.weights.sum()

    def copy(self) -> ActiveSet:
        out = ActiveSet()
        out.coords = list(self.coords)
        out.strategies = list(self.strategies)
        out.keys = list(self.keys)
        out.weights = self.weights.copy()
        return out


@dataclass
class BPCGResult:
    X: np.ndarray  # coordinates of the projection
    active: ActiveSet
    gap: float
    converged: bool
    iterations: int
    objective: list = field(default_factory=list)  # 0.5 * ||x - t||^2 per iteration
    gaps: list = field(default_factory=list)
    matrix: np.ndarray | None = None  # X lifted back to an m1 x m2 matrix


def _strategy_key(s) -> bytes:
    if isinstance(s, SignStrategy):
        a, b = s.a, s.b
        if a[0] < 0:  # a b^T is unchanged by a global sign flip
            a, b = -a, -b
        return a.tobytes() + b"|" + b.tobytes()
    return np.round(s.matrix(), 12).tobytes()


class _Space:
    """Coordinates of matrices and the LMO expressed in those coordinates."""

    def __init__(self, m1, m2, n, basis: InvariantBasis | None, budget, seed):
        self.m1, self.m2, self.n = m1, m2, n
        self.basis = basis
        self.budget = budget
        self.seed = seed
        self.calls = 0

    def coords(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.basis.coords(X) if self.basis is not None else X.reshape(-1)

    def lift(self, z) -> np.ndarray:
        return self.basis.lift(z) if self.basis is not None else np.asarray(z).reshape(self.m1, self.m2)

    def lmo(self, g):
        self.calls += 1
        # an inexact LMO only slows Frank-Wolfe down, so the alternation stops early
        res = lmo(self.lift(g), self.n, self.budget, seed=self.seed + self.calls, max_iter=LMO_MAX_ITER, tol=1e-7)
        return res.strategy


def bpcg_project(target, n: int = 1, lmo_budget: int = 1000, tol: float = 1e-7, max_iter: int = 10**5,
                 basis: InvariantBasis | None = None, seed: int = 0, active: ActiveSet | None = None,
                 shape=None, lazy: bool = True) -> BPCGResult:
    """Minimise 0.5 * ||x - target||^2 over cut_n.

    ``target`` is a matrix, or a coordinate vector when ``basis`` (or ``shape``)
    says how to lift it.  Pairwise steps move weight from the worst to the best
    active vertex whenever that local gap beats the Frank-Wolfe gap; otherwise a
    Frank-Wolfe step towards the LMO vertex is taken.  Both use exact line search.

    With ``lazy`` the LMO is skipped while the local gap is at least half of the
    last LMO gap.  Convergence is only declared from an LMO gap below ``tol``.
    ``objective`` holds the value after every step; ``gaps`` one entry per LMO call.
    """
    target = np.asarray(target, dtype=float)
    if basis is not None:
        m1, m2 = basis.m1, basis.m2
    elif target.ndim == 2:
        m1, m2 = target.shape
    else:
        m1, m2 = shape
    space = _Space(m1, m2, n, basis, lmo_budget, seed)
    t = space.coords(target) if target.ndim == 2 else target.copy()

    if active is None or len(active) == 0:
        active = ActiveSet()
        s = space.lmo(-t)  # vertex best aligned with the target
        active.add(space.coords(s.matrix()), s, _strategy_key(s), 1.0)
    else:
        active = active.copy()
    # pairwise steps only need K = V V^T and c = V t, so they run in weight space
    V = np.array(active.coords)
    K = V @ V.T
    c = V @ t
    tt = float(t @ t)
    w = active.weights.astype(float)
    buf = np.empty(4096)

    def objective():
        return max(0.5 * float(w @ K @ w) - float(w @ c) + 0.5 * tt, 0.0)

    obj, gaps = [objective()], []
    gap = np.inf
    phi = np.inf  # last LMO gap; the LMO is skipped while local gaps exceed phi / 2
    converged = False
    it = 0
    while it < max_iter:
        sc = K @ w - c
        if lazy and phi < np.inf:
            steps = pairwise_sweep(K, sc, w, phi / 2, min(max_iter - it, len(buf)), obj[-1], WEIGHT_DROP, buf)
            if steps:
                obj.extend(buf[:steps].tolist())
                it += steps
                V, K, c, w = _prune(active, V, K, c, w)
                continue
        it += 1
        x = w @ V
        g = x - t
        s = space.lmo(g)
        key = _strategy_key(s)
        vz = space.coords(s.matrix())
        gap = float(g @ (x - vz))
        gaps.append(gap)
        if gap <= tol:
            converged = True
            break
        phi = gap
        if pairwise_sweep(K, sc, w, gap, 1, obj[-1], WEIGHT_DROP, buf):
            obj.append(float(buf[0]))
        else:
            d = vz - x
            dd = float(d @ d)
            gamma = min(max(-float(g @ d) / dd, 0.0), 1.0) if dd > 0 else 0.0
            w *= (1.0 - gamma)
            j = active.index(key)
            if j >= 0:
                w[j] += gamma
            else:
                kv = V @ vz
                K = np.block([[K, kv[:, None]], [kv[None, :], np.array([[vz @ vz]])]])
                V = np.vstack([V, vz])
                c = np.append(c, vz @ t)
                w = np.append(w, gamma)
                active.add(vz, s, key, gamma)
            obj.append(objective())
        V, K, c, w = _prune(active, V, K, c, w)
    x = w @ V
    return BPCGResult(x, active, gap, converged, it, obj, gaps, space.lift(x))


def _prune(active: ActiveSet, V, K, c, w):
    """Drop vertices whose weight fell below WEIGHT_DROP and renormalise."""
    keep = np.flatnonzero(w >= WEIGHT_DROP)
    if len(keep) != len(w):
        V, K, c, w = V[keep], K[np.ix_(keep, keep)], c[keep], w[keep]
        active.coords = [active.coords[i] for i in keep]
        active.strategies = [active.strategies[i] for i in keep]
        active.keys = [active.keys[i] for i in keep]
    w = w / w.sum()
    active.weights = w
    return V, K, c, w


# -- facet loop -----------------------------------------------------------


def v_update(M, P, sdp_value):
    """v = SDP_n[M] / <M, P>: the multiple of P lying on M's supporting hyperplane.

    When v_k P strictly violates M this is strictly smaller than v_k.
    """
    if sdp_value <= 0:
        raise ValueError("degenerate direction: SDP value must be positive")
    if isinstance(M, ExactMatrix):
        Pm = P if isinstance(P, ExactMatrix) else ExactMatrix.from_float(np.asarray(P, dtype=float))
        ip = M.inner(Pm)
        if ip.sign() <= 0:
            raise ValueError("degenerate direction: <M, P> must be positive")
        s = sdp_value if isinstance(sdp_value, ExactScalar) else ExactScalar(sdp_value)
        return s / ip
    ip = float(np.sum(np.asarray(M, dtype=float) * np.asarray(P, dtype=float)))
    if ip <= 0:
        raise ValueError("degenerate direction: <M, P> must be positive")
    return float(sdp_value) / ip


@dataclass
class FacetResult:
    normal: ExactMatrix | None  # integer facet normal A
    offset: object  # exact SDP_1[A]
    active: ActiveSet | None
    codim: int
    history: list  # v per round
    status: str  # facet, separating, inside, stagnated
    ratio: object = None  # <A, P> / SDP_1[A], exact when possible
    lam: object = None  # diagonal modification lambda when A is proportional to P - lam I
    separating: np.ndarray | None = None  # best float separating direction
    meta: dict = field(default_factory=dict)

    @property
    def is_facet(self) -> bool:
        return self.status == "facet"


def _orbit_sum_rows(active: ActiveSet, basis: InvariantBasis | None, m1, m2):
    rows = []
    for s in active.strategies:
        Vm = s.matrix().astype(np.int64)
        if basis is None:
            rows.append(Vm.reshape(-1))
        else:
            rows.append(basis.orbit_sums(Vm))
    return np.array(rows, dtype=np.int64)


def _codim(U: np.ndarray, dim: int) -> int:
    if len(U) <= 1:
        return dim
    D = (U[1:] - U[0]).astype(float)
    s = np.linalg.svd(D, compute_uv=False)
    rank = int(np.sum(s > 1e-7 * max(s[0], 1.0))) if s.size else 0
    return dim - rank


def _exact_normal(U: np.ndarray):
    """Integer (w, b) with U w = b for all rows, if the solution space is a line."""
    import sympy

    ext = sympy.Matrix(np.hstack([U, -np.ones((len(U), 1), dtype=np.int64)]).tolist())
    ns = ext.nullspace()
    if len(ns) != 1:
        return None
    vec = ns[0]
    den = sympy.ilcm(*[sympy.fraction(sympy.nsimplify(c))[1] for c in vec])
    ints = [int(c * den) for c in vec]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    ints = [c // g for c in ints] if g else ints
    return ints[:-1], ints[-1]


def _exact_rank(U: np.ndarray) -> int:
    import sympy

    if len(U) <= 1:
        return 0
    return sympy.Matrix((U[1:] - U[0]).tolist()).rank()


def _lambda_of(A: ExactMatrix, P: ExactMatrix):
    """lam with A = c (P - lam I) for some c > 0, or None."""
    m = A.shape[0]
    if A.shape != P.shape or m != A.shape[1]:
        return None
    ref = None
    for x in range(m):
        for y in range(m):
            if x != y and not P[x, y].is_zero():
                ref = (x, y)
                break
        if ref:
            break
    if ref is None:
        return None
    c = A[ref] / P[ref]
    if c.sign() <= 0:
        return None
    lam = 1 - A[0, 0] / c
    candidate = (P - ExactMatrix.identity(m).scale(lam)).scale(c)
    return lam if candidate == A else None


def facet_loop(P, n: int = 1, G=None, restarts: int = 1000, tol: float = 1e-7, tol_floor: float = 1e-9,
               max_rounds: int = 30, stagnation: int = 5, max_iter: int = 10**5, seed: int = 0,
               exact_sdp: bool = True, basis: InvariantBasis | None = None) -> FacetResult:
    """Run the facet loop on a correlation point P (CorrelationPoint or exact matrix)."""
    Pexact = getattr(P, "exact", P if isinstance(P, ExactMatrix) else None)
    Pf = getattr(P, "values", None)
    if Pf is None:
        Pf = Pexact.to_float() if isinstance(Pexact, ExactMatrix) else np.asarray(P, dtype=float)
    m1, m2 = Pf.shape
    if basis is None and G is not None:
        basis = invariant_basis(G)
    dim = basis.dim if basis is not None else m1 * m2
    coords = (lambda X: basis.coords(X)) if basis is not None else (lambda X: np.asarray(X).reshape(-1))
    lift = (lambda z: basis.lift(z)) if basis is not None else (lambda z: np.asarray(z).reshape(m1, m2))
    t = coords(Pf)

    def sdp_of(M):
        if n == 1 and exact_sdp:
            return float(sdp1_branch_and_bound(M, restarts=restarts, seed=seed).value)
        return heuristic_sdp(M, n, max(restarts, 10**4), seed).value

    v = 1.0
    history = [v]
    active = None
    best_codim, since_best = dim + 1, 0
    round_tol = tol
    sep, sep_v = None, np.inf
    meta = {"tolerance_schedule": [], "bpcg_iterations": [], "bpcg_objective": [], "bpcg_gaps": []}
    status = "stagnated"
    codim = dim
    for rnd in range(max_rounds):
        res = bpcg_project(v * t, n, restarts, round_tol, max_iter, basis, seed + 7919 * rnd, active,
                           shape=(m1, m2))
        meta["tolerance_schedule"].append(round_tol)
        meta["bpcg_iterations"].append(res.iterations)
        meta["bpcg_objective"].append(res.objective)
        meta["bpcg_gaps"].append(res.gaps)
        active = res.active
        Mz = v * t - res.X
        if float(Mz @ Mz) <= (10 * round_tol) ** 2:
            if rnd == 0:
                return FacetResult(None, None, active, dim, history, "inside", meta=meta)
            break  # v P sits on the boundary, typically on several facets at once
        M = lift(Mz)
        U = _orbit_sum_rows(active, basis, m1, m2) if n == 1 else None
        codim = _codim(U, dim) if U is not None else dim - min(len(active) - 1, dim)
        if n == 1 and codim == 1:
            cert = _certify(U, basis, m1, m2, Pexact, Pf, restarts, seed)
            if cert is not None:
                cert.active, cert.history, cert.meta = active, history, meta
                cert.separating = M
                return cert
        val = sdp_of(M)
        if val <= 0 or float(np.sum(M * Pf)) <= 0:
            status = "degenerate"
            break
        v_new = v_update(M, Pf, val)
        if v_new < sep_v:
            sep, sep_v = M, v_new
        if v_new < v:
            v = v_new
            history.append(v)
        if codim < best_codim:
            best_codim, since_best = codim, 0
        else:
            since_best += 1
            if since_best >= stagnation:
                break
        round_tol = max(round_tol * 0.1, tol_floor)
    if sep is not None:
        meta["separating_ratio"] = 1.0 / sep_v
    return FacetResult(None, None, active, codim, history, status, separating=sep, meta=meta)


def _certify(U, basis, m1, m2, Pexact, Pf, restarts, seed):
    got = _exact_normal(U)
    if got is None:
        return None
    w, b = got
    if basis is not None:
        rows = basis.lift_orbit_weights(w)
    else:
        rows = [w[x * m2:(x + 1) * m2] for x in range(m1)]
    A = ExactMatrix.from_entries(rows)
    Pm = Pexact if isinstance(Pexact, ExactMatrix) else ExactMatrix.from_float(Pf)
    ip = A.inner(Pm)
    # orient so that P violates: <A, P> > b
    if (ip - b).sign() <= 0:
        A, b, ip = -A, -b, -ip
        if (ip - b).sign() <= 0:
            return None
    sol = sdp1_branch_and_bound(A, restarts=restarts, seed=seed)
    if not sol.optimal or sol.value != b:
        return None  # the active vertices did not span a face of cut_1
    dim = basis.dim if basis is not None else m1 * m2
    if _exact_rank(U) != dim - 1:
        return None
    ratio = ip / ExactScalar(sol.value)
    lam = _lambda_of(A, Pm) if m1 == m2 else None
    return FacetResult(A, sol.value, None, 1, [], "facet", ratio=ratio, lam=lam,
                       meta={"face_vertices": int(len(U))})


# -- rounding and certificates --------------------------------------------


def integerize_normal(M, denominator_cap: int = 1000, P=None, sdp=None):
    """Round a float normal to an integer matrix.

    Entries are scaled by the largest magnitude, rationalised with denominators
    at most ``denominator_cap`` and brought to a common denominator.  Returns
    ``(A, max_perturbation)`` where the perturbation is measured on the scaled
    float matrix.  If ``P`` and an ``sdp`` callable are given, the rounded
    normal must still separate P (<A, P> > SDP_1[A]).
    """
    if isinstance(M, ExactMatrix) and M.is_integer():
        return M, 0.0
    Mf = np.asarray(M, dtype=float)
    if np.all(Mf == np.round(Mf)):
        return ExactMatrix.from_int(Mf.astype(np.int64)), 0.0
    scale = np.abs(Mf).max()
    if scale == 0:
        return ExactMatrix.from_int(np.zeros(Mf.shape, dtype=np.int64)), 0.0
    S = Mf / scale
    fr = [Fraction(float(v)).limit_denominator(denominator_cap) for v in S.flat]
    den = 1
    for q in fr:
        den = den * q.denominator // math.gcd(den, q.denominator)
    ints = np.array([int(q * den) for q in fr], dtype=object).reshape(Mf.shape)
    g = 0
    for v in ints.flat:
        g = math.gcd(g, int(v))
    if g > 1:
        ints = ints // g
        den //= g
    pert = float(np.max(np.abs(np.array(ints, dtype=float) / den - S)))
    A = ExactMatrix.from_int(ints)
    if P is not None and sdp is not None:
        Pm = P if isinstance(P, ExactMatrix) else ExactMatrix.from_float(P)
        if (A.inner(Pm) - ExactScalar(sdp(A))).sign() <= 0:
            raise RoundingFailed("rounded normal no longer separates P")
    return A, pert


@dataclass
class DecompositionCertificate:
    v0: Fraction
    epsilon: Fraction  # certified upper bound on ||v0 P - sum w_i V_i||_F
    alpha: Fraction
    vertex_count: int
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "v0": [self.v0.numerator, self.v0.denominator],
            "epsilon": [self.epsilon.numerator, self.epsilon.denominator],
            "alpha": [self.alpha.numerator, self.alpha.denominator],
            "alpha_float": float(self.alpha),
            "vertex_count": self.vertex_count,
        }


def _round_up(x: float) -> Fraction:
    q = Fraction(x).limit_denominator(10**12)
    if q < Fraction(x):
        q += Fraction(1, 10**12)
    return q


def alpha_from(v0, epsilon) -> tuple[Fraction, Fraction]:
    """alpha = v0 / (1 + eps) with eps rounded up to a rational."""
    v0 = Fraction(v0) if not isinstance(v0, float) else Fraction(str(v0))
    eps = _round_up(float(epsilon)) if not isinstance(epsilon, Fraction) else epsilon
    return v0 / (1 + eps), eps


def decomposition_certificate(P, v0, result: BPCGResult | None = None, claimed_epsilon=None,
                              max_denominator: int = 10**6) -> DecompositionCertificate:
    """Certificate that alpha P lies in cut_n, alpha = v0 / (1 + eps).

    The active vertices are made exact first: sign vertices already are; unit
    vectors are replaced by nearby exactly-unit rational vectors.  Weights are
    rationalised and renormalised.  The residual r = v0 P - sum w_i V_i then
    satisfies ||r|| <= eps, and because the Frobenius unit ball lies in cut_1
    (hence in cut_n), v0 P is in (1 + eps) cut_n.
    """
    from .configurations import rational_unit_vectors

    v0q = Fraction(v0) if not isinstance(v0, float) else Fraction(str(v0))
    if result is None:
        if claimed_epsilon is None:
            raise ValueError("need a projection result or a recorded epsilon")
        alpha, eps = alpha_from(v0q, claimed_epsilon)
        return DecompositionCertificate(v0q, eps, alpha, 0, {"recorded": True})
    if not result.converged:
        raise ValueError("projection did not converge; refusing to certify")
    Pf = getattr(P, "values", None)
    if Pf is None:
        Pf = P.to_float() if isinstance(P, ExactMatrix) else np.asarray(P, dtype=float)
    w = [Fraction(float(x)).limit_denominator(max_denominator) for x in result.active.weights]
    tot = sum(w)
    w = [x / tot for x in w]
    X = np.zeros(Pf.shape)
    for wi, s in zip(w, result.active.strategies):
        if isinstance(s, UnitStrategy):
            A = rational_unit_vectors(s.a, max_denominator).to_float()
            B = rational_unit_vectors(s.b, max_denominator).to_float()
            Vm = A @ B.T
        else:
            Vm = s.matrix().astype(float)
        X += float(wi) * Vm
    R = float(v0q) * Pf - X
    # float evaluation error of the residual is far below this slack
    eps = math.sqrt(math.fsum((R * R).ravel())) + 1e-10 * (1 + np.abs(Pf).sum())
    if claimed_epsilon is not None and eps > float(claimed_epsilon):
        raise ValueError(f"recomputed residual {eps:.3e} exceeds the claimed {float(claimed_epsilon):.3e}")
    alpha, epsq = alpha_from(v0q, eps)
    return DecompositionCertificate(v0q, epsq, alpha, len(w), {"residual_float": eps})
