"""Vertices of cut_1, feasible points of cut_n, and symmetry reduction.

A signed permutation on ``m`` slots is stored as an integer array ``g`` with
``g[x] = +-(pi(x) + 1)``: slot ``x`` goes to slot ``pi(x)`` with that sign.
A group element acts on matrices by a pair (row action, column action) via
``(gM)[pi(x), sigma(y)] = s_x t_y M[x, y]``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .exact import ExactScalar
from .matrix import ExactMatrix

__all__ = [
    "GroupTooLarge",
    "InvariantBasis",
    "SignStrategy",
    "SignedPermutationGroup",
    "UnitStrategy",
    "group_for",
    "invariant_basis",
    "symmetrize",
    "vertex_value",
]


class GroupTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class SignStrategy:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.int8)
        b = np.asarray(self.b, dtype=np.int8)
        if not (np.all(np.abs(a) == 1) and np.all(np.abs(b) == 1)):
            raise ValueError("sign strategy entries must be +-1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_a(cls, M, a) -> SignStrategy:
        """Complete ``a`` with the best response b_y = sign(sum_x M_xy a_x), sign(0) = +1."""
        col = np.asarray(a, dtype=float) @ _as_float(M)
        return cls(a, np.where(col >= 0, 1, -1))

    def matrix(self) -> np.ndarray:
        return np.outer(self.a, self.b).astype(np.int64)

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True)
class UnitStrategy:
    a: np.ndarray  # m1 x n
    b: np.ndarray  # m2 x n

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ValueError("a and b must live in the same dimension")
        if not (np.allclose(np.linalg.norm(a, axis=1), 1, atol=1e-12) and np.allclose(np.linalg.norm(b, axis=1), 1, atol=1e-12)):
            raise ValueError("strategy vectors must be unit norm")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def matrix(self) -> np.ndarray:
        return self.a @ self.b.T

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist()}


def _as_float(M) -> np.ndarray:
    return M.to_float() if isinstance(M, ExactMatrix) else np.asarray(M, dtype=float)


def vertex_value(M, s):
    """<M, a b^T>; exact for exact M and a sign strategy."""
    if isinstance(s, SignStrategy):
        if tuple(M.shape) != (len(s.a), len(s.b)):
            raise ValueError(f"shape mismatch {M.shape} vs {(len(s.a), len(s.b))}")
        if isinstance(M, ExactMatrix):
            return M.inner(ExactMatrix.from_int(s.matrix()))
        M = np.asarray(M)
        if M.dtype.kind in "iu" or M.dtype == object:
            return int(s.a.astype(object) @ M.astype(object) @ s.b.astype(object))
        return float(s.a @ M @ s.b)
    X = s.matrix()
    if tuple(M.shape) != X.shape:
        raise ValueError(f"shape mismatch {M.shape} vs {X.shape}")
    return float(np.sum(_as_float(M) * X))


# -- signed permutations --------------------------------------------------


def _split(g):
    g = np.asarray(g, dtype=np.int64)
    return np.abs(g) - 1, np.sign(g)


def _compose(h, g):
    """h after g on signed 1-based arrays."""
    p, s = _split(g)
    return s * h[p]


def _check(g, m):
    g = np.asarray(g, dtype=np.int64)
    if g.shape != (m,) or np.any(g == 0) or sorted(np.abs(g)) != list(range(1, m + 1)):
        raise ValueError(f"not a signed permutation of {m} slots: {g.tolist()}")
    return g


class SignedPermutationGroup:
    """Group generated by simultaneous signed permutations of rows and columns."""

    def __init__(self, m1, m2, generators=(), transpose=False):
        self.m1, self.m2 = int(m1), int(m2)
        self.generators = [(_check(r, self.m1), _check(c, self.m2)) for r, c in generators]
        self.transpose = bool(transpose)
        if transpose and self.m1 != self.m2:
            raise ValueError("transposition needs a square shape")
        self._elements = None

    @classmethod
    def trivial(cls, m1, m2) -> SignedPermutationGroup:
        return cls(m1, m2)

    @classmethod
    def from_line_actions(cls, row_actions, col_actions, transpose=False) -> SignedPermutationGroup:
        gens = []
        for (rp, rs), (cp, cs) in zip(row_actions, col_actions):
            gens.append((rs * (rp + 1), cs * (cp + 1)))
        m1 = len(row_actions[0][0]) if row_actions else 0
        m2 = len(col_actions[0][0]) if col_actions else 0
        return cls(m1, m2, gens, transpose)

    def closure(self, cap: int = 10**6) -> list:
        """All elements by breadth-first closure (transposition not included)."""
        if self._elements is not None:
            return self._elements
        ident = (tuple(range(1, self.m1 + 1)), tuple(range(1, self.m2 + 1)))
        seen = {ident}
        queue = deque([ident])
        gens = [(np.asarray(r), np.asarray(c)) for r, c in self.generators]
        while queue:
            r, c = queue.popleft()
            ra, ca = np.asarray(r), np.asarray(c)
            for gr, gc in gens:
                new = (tuple(_compose(gr, ra).tolist()), tuple(_compose(gc, ca).tolist()))
                if new not in seen:
                    seen.add(new)
                    if len(seen) > cap:
                        raise GroupTooLarge(f"group closure exceeds cap {cap}")
                    queue.append(new)
        self._elements = [(np.array(r), np.array(c)) for r, c in sorted(seen)]
        return self._elements

    def order(self, cap: int = 10**6) -> int:
        return len(self.closure(cap)) * (2 if self.transpose else 1)

    def act(self, g, M):
        (rp, rs), (cp, cs) = _split(g[0]), _split(g[1])
        if isinstance(M, ExactMatrix):
            return M.signed_permute(rp, rs, cp, cs)
        M = np.asarray(M)
        out = np.empty_like(M)
        out[np.ix_(rp, cp)] = M * np.outer(rs, cs)
        return out

    def is_invariant(self, M) -> bool:
        for g in self.generators:
            gM = self.act(g, M)
            if isinstance(M, ExactMatrix):
                if not gM == M:
                    return False
            elif not np.allclose(gM, M, atol=1e-12):
                return False
        if self.transpose:
            T = M.T
            return (T == M) if isinstance(M, ExactMatrix) else np.allclose(T, M, atol=1e-12)
        return True

    def to_json(self) -> dict:
        return {
            "m1": self.m1,
            "m2": self.m2,
            "transpose": self.transpose,
            "generators": [{"rows": r.tolist(), "cols": c.tolist()} for r, c in self.generators],
        }

    @classmethod
    def from_json(cls, obj) -> SignedPermutationGroup:
        if isinstance(obj, str):
            obj = json.loads(obj)
        gens = []
        for g in obj["generators"]:
            if isinstance(g, dict):
                gens.append((g["rows"], g["cols"]))
            else:  # a bare list acts the same way on rows and columns
                gens.append((g, g))
        m1 = obj.get("m1") or len(gens[0][0])
        m2 = obj.get("m2") or len(gens[0][1])
        return cls(m1, m2, gens, obj.get("transpose", False))


# -- orbits ---------------------------------------------------------------


@dataclass
class InvariantBasis:
    """Signed orbits of matrix cells.

    ``orbit[c]`` is the orbit id of flat cell ``c`` (or -1 if forced to zero),
    ``sign[c]`` the sign relating the cell to its orbit representative.
    """

    m1: int
    m2: int
    orbit: np.ndarray
    sign: np.ndarray
    sizes: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def forced_zero(self) -> np.ndarray:
        return self.orbit < 0

    def orbit_sums(self, M) -> np.ndarray:
        """u_j(M) = sum over orbit j of s_c M_c (exact ints for integer M)."""
        flat = np.asarray(M).reshape(-1)
        out = np.zeros(self.dim, dtype=flat.dtype if flat.dtype.kind in "iuO" else float)
        ok = self.orbit >= 0
        np.add.at(out, self.orbit[ok], self.sign[ok] * flat[ok])
        return out

    def coords(self, M) -> np.ndarray:
        """Coordinates in the orthonormal orbit basis e_j = sum s_c E_c / sqrt(n_j)."""
        return self.orbit_sums(np.asarray(M, dtype=float)) / np.sqrt(self.sizes)

    def lift(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float) / np.sqrt(self.sizes)
        out = np.zeros(self.m1 * self.m2)
        ok = self.orbit >= 0
        out[ok] = self.sign[ok] * z[self.orbit[ok]]
        return out.reshape(self.m1, self.m2)

    def lift_orbit_weights(self, w) -> list:
        """Matrix with entry s_c * w_j on orbit j (w exact), as nested lists."""
        flat = []
        for c in range(self.m1 * self.m2):
            j = self.orbit[c]
            flat.append(0 if j < 0 else int(self.sign[c]) * w[j])
        return [flat[x * self.m2:(x + 1) * self.m2] for x in range(self.m1)]


def invariant_basis(G: SignedPermutationGroup | None, m1: int | None = None, m2: int | None = None) -> InvariantBasis:
    if G is None:
        G = SignedPermutationGroup.trivial(m1, m2)
    m1, m2 = G.m1, G.m2
    n = m1 * m2
    parent = np.arange(n)
    rel = np.ones(n, dtype=np.int64)  # value[c] = rel[c] * value[parent[c]]
    zero = np.zeros(n, dtype=bool)

    def find(c):
        s = 1
        path = []
        while parent[c] != c:
            path.append(c)
            s *= rel[c]
            c = parent[c]
        root = c
        # path compression with accumulated signs
        acc = s
        for p in path:
            ps = rel[p]
            parent[p] = root
            rel[p] = acc
            acc *= ps
        return root, s

    def union(c, d, s):
        # enforce value[d] = s * value[c]
        rc, sc = find(c)
        rd, sd = find(d)
        if rc == rd:
            if sc * s != sd:
                zero[rc] = True
            return
        parent[rd] = rc
        rel[rd] = sd * s * sc
        zero[rc] |= zero[rd]

    cells = np.arange(n)
    xs, ys = cells // m2, cells % m2
    for gr, gc in G.generators:
        rp, rs = _split(gr)
        cp, cs = _split(gc)
        targets = rp[xs] * m2 + cp[ys]
        signs = rs[xs] * cs[ys]
        for c in range(n):
            union(c, targets[c], signs[c])
    if G.transpose:
        for c in range(n):
            union(c, ys[c] * m2 + xs[c], 1)

    roots = np.empty(n, dtype=np.int64)
    sign = np.empty(n, dtype=np.int64)
    for c in range(n):
        roots[c], sign[c] = find(c)
    orbit = np.full(n, -1, dtype=np.int64)
    ids: dict = {}
    for c in range(n):
        r = roots[c]
        if zero[r]:
            continue
        if r not in ids:
            ids[r] = len(ids)
        orbit[c] = ids[r]
    sizes = np.bincount(orbit[orbit >= 0], minlength=len(ids))
    sign[orbit < 0] = 0
    return InvariantBasis(m1, m2, orbit, sign, sizes)


def symmetrize(M, G: SignedPermutationGroup, basis: InvariantBasis | None = None):
    """Group average of M, computed as signed averages over cell orbits."""
    basis = basis or invariant_basis(G)
    if isinstance(M, ExactMatrix):
        if M.shape != (basis.m1, basis.m2):
            raise ValueError("shape mismatch")
        flat = M.entries()
        flat = [v for row in flat for v in row]
        sums = [ExactScalar(0)] * basis.dim
        for c, v in enumerate(flat):
            j = basis.orbit[c]
            if j >= 0:
                sums[j] = sums[j] + v * int(basis.sign[c])
        avg = [sums[j] / int(basis.sizes[j]) for j in range(basis.dim)]
        return ExactMatrix.from_entries(basis.lift_orbit_weights(avg))
    M = np.asarray(M, dtype=float)
    if M.shape != (basis.m1, basis.m2):
        raise ValueError("shape mismatch")
    return basis.lift(basis.coords(M))


def group_for(confA, confB=None, P=None, transpose=False, verify=True) -> SignedPermutationGroup:
    """Symmetry group of P = gram(confA, confB) from the catalog mirrors.

    Every generator is checked to fix P exactly (when P is given and exact).
    """
    from .configurations import line_action

    confB = confA if confB is None else confB
    mirrors = confA.mirrors if confA.mirrors is not None else confB.mirrors
    if mirrors is None:
        return SignedPermutationGroup.trivial(confA.m, confB.m)
    rows, cols = [], []
    for r in mirrors:
        rows.append(line_action(confA, r))
        cols.append(line_action(confB, r))
    G = SignedPermutationGroup.from_line_actions(rows, cols, transpose=transpose)
    if verify and P is not None:
        target = P.exact if getattr(P, "exact", None) is not None else getattr(P, "values", P)
        if not G.is_invariant(target):
            raise ValueError("catalog mirrors do not preserve the correlation matrix")
    return G
