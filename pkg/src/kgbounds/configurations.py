"""Line packings: the catalog of symmetric configurations, packing files,
edge-midpoint augmentation, and exact (cross-)Gram matrices.

Exact configurations keep un-normalised rows over Q(sqrt s) together with the
exact squared norm of each row; the unit vectors are ``row / sqrt(norm2)``.
Storing the raw rows avoids nested radicals such as sqrt(10 + 2 sqrt 5), and
Gram entries come out in the field anyway since all rows of one class share a
norm.  Float-backed configurations (packing files, augmentations, refined
polyhedra) carry unit float rows only.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import ExactScalar
from .matrix import ExactMatrix

__all__ = [
    "CATALOG",
    "CatalogError",
    "Configuration",
    "CorrelationPoint",
    "PackingParseError",
    "augment_edge_midpoints",
    "catalog_table",
    "diagonal_modification",
    "generate",
    "gram",
    "line_action",
    "parse_packing",
    "refined_icosahedron",
]


class CatalogError(KeyError):
    pass


class PackingParseError(ValueError):
    def __init__(self, msg, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)
        self.line, self.column = line, column


@dataclass
class Configuration:
    name: str
    d: int
    vectors: np.ndarray  # unit rows, float64, m x ambient
    rows: ExactMatrix | None = None  # exact un-normalised rows
    norms2: list | None = None  # exact squared norm per row
    tags: frozenset = frozenset()
    mirrors: np.ndarray | None = None  # reflection normals generating the symmetry group
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient(self) -> int:
        return self.vectors.shape[1]

    @property
    def exact(self) -> bool:
        return self.rows is not None

    def to_json(self) -> dict:
        out = {"name": self.name, "d": self.d, "m": self.m, "tags": sorted(self.tags)}
        if self.exact:
            rows = self.rows.to_json()
            out.update(radicands=rows["radicands"], rows=rows, norms2=[n.to_json() for n in self.norms2])
        else:
            out.update(radicands=[], vectors=self.vectors.tolist())
        return out

    @classmethod
    def from_json(cls, obj: dict) -> Configuration:
        if "rows" in obj:
            rows = ExactMatrix.from_json(obj["rows"])
            norms2 = [ExactScalar.from_json(n) for n in obj["norms2"]]
            return _exact_config(obj["name"], obj["d"], rows, norms2, obj.get("tags", ()))
        return Configuration(obj["name"], obj["d"], np.array(obj["vectors"], dtype=float), tags=frozenset(obj.get("tags", ())))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class CorrelationPoint:
    """Point of cut_d(m1, m2): P[x, y] = <a_x, b_y>."""

    values: np.ndarray
    exact: ExactMatrix | None
    witnessA: Configuration
    witnessB: Configuration

    @property
    def m1(self) -> int:
        return self.values.shape[0]

    @property
    def m2(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_gram(self) -> bool:
        return self.witnessA is self.witnessB

    def as_exact(self, max_denominator: int = 10**12) -> ExactMatrix:
        """Exact entries; float-backed points are rationalised entrywise."""
        if self.exact is not None:
            return self.exact
        return ExactMatrix.from_float(self.values, max_denominator)


# -- exact helpers --------------------------------------------------------

R5 = ExactScalar.sqrt_of(5)
PHI = (1 + R5) / 2


def _exact_config(name, d, rows: ExactMatrix, norms2, tags=(), mirrors=None, meta=None) -> Configuration:
    raw = rows.to_float()
    nrm = np.sqrt(np.array([float(n) for n in norms2]))
    return Configuration(name, d, raw / nrm[:, None], rows, list(norms2), frozenset(tags), mirrors, dict(meta or {}))


def _canonical_lines(vecs):
    """Keep the first-seen representative of each line, in input order."""
    out, seen = [], set()
    for v in vecs:
        f = np.array([float(c) for c in v])
        nz = np.flatnonzero(np.abs(f) > 1e-12)
        if nz.size == 0:
            continue
        if f[nz[0]] < 0:
            f = -f
        key = tuple(np.round(f / np.linalg.norm(f), 9))
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out


def _from_rows(name, d, vecs, tags=(), mirrors=None, meta=None) -> Configuration:
    vecs = _canonical_lines(vecs)
    rows = ExactMatrix.from_entries([[ExactScalar(c) for c in v] for v in vecs])
    norms2 = []
    for v in vecs:
        s = ExactScalar(0)
        for c in v:
            s = s + ExactScalar(c) * ExactScalar(c)
        norms2.append(s)
    if mirrors is not None:
        mirrors = np.array([[float(c) for c in r] for r in mirrors])
    return _exact_config(name, d, rows, norms2, tags, mirrors, meta)


def _signed_perms(base, even_only=False):
    """All coordinate permutations (optionally only even ones) with all sign choices."""
    n = len(base)
    out = []
    for p in itertools.permutations(range(n)):
        if even_only and _parity(p):
            continue
        vec = [base[i] for i in p]
        nz = [i for i, c in enumerate(vec) if c != 0]
        for signs in itertools.product((1, -1), repeat=len(nz)):
            w = list(vec)
            for i, s in zip(nz, signs):
                w[i] = w[i] * s
            out.append(w)
    return out


def _parity(p) -> int:
    p = list(p)
    par = 0
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            par ^= 1
    return par


def _d_roots(d):
    vecs = []
    for i, j in itertools.combinations(range(d), 2):
        for s in (1, -1):
            v = [0] * d
            v[i], v[j] = 1, s
            vecs.append(v)
    return vecs


def _b_mirrors(d):
    return _d_roots(d) + [[1 if k == i else 0 for k in range(d)] for i in range(d)]


def _e8_roots_scaled():
    """E8 roots times 2: 2(+-e_i +- e_j) and (+-1)^8 with an even number of minus signs."""
    vecs = [[2 * c for c in v] for v in _d_roots(8)]
    for signs in itertools.product((1, -1), repeat=8):
        if signs.count(-1) % 2 == 0:
            vecs.append(list(signs))
    return vecs


# -- catalog generators ---------------------------------------------------


def _hexagon():
    r3 = ExactScalar.sqrt_of(3)
    vecs = [[2, 0], [1, r3], [-1, r3]]
    return _from_rows("hexagon", 2, vecs, {"kissing", "etf", "platonic"}, mirrors=vecs)


def _h3_mirrors():
    return _icosidodecahedron_rows()


def _icosahedron():
    vecs = []
    for k in range(3):
        for s in (1, -1):
            base = [ExactScalar(0), ExactScalar(2 * s), 1 + R5]
            vecs.append(base[-k:] + base[:-k] if k else base)
    return _from_rows("icosahedron", 3, vecs, {"kissing", "etf", "platonic"}, mirrors=_h3_mirrors())


def _dodecahedron():
    vecs = [[2 * a, 2 * b, 2 * c] for a, b, c in itertools.product((1, -1), repeat=3)]
    for k in range(3):
        for s in (1, -1):
            base = [ExactScalar(0), s * (1 + R5), R5 - 1]
            vecs.append(base[-k:] + base[:-k] if k else base)
    return _from_rows("dodecahedron", 3, vecs, {"platonic"}, mirrors=_h3_mirrors())


def _icosidodecahedron_rows():
    vecs = [[0, 0, 2 * PHI], [0, 2 * PHI, 0], [2 * PHI, 0, 0]]
    for s1, s2 in itertools.product((1, -1), repeat=2):
        base = [ExactScalar(1), s1 * PHI * PHI, s2 * PHI]
        for k in range(3):
            vecs.append(base[-k:] + base[:-k] if k else base)
    return vecs


def _icosidodecahedron():
    vecs = _icosidodecahedron_rows()
    return _from_rows("icosidodecahedron", 3, vecs, {"platonic"}, mirrors=vecs)


def _dd(d):
    mirrors = _b_mirrors(d)
    if d == 4:
        mirrors = mirrors + [list(s) for s in itertools.product((1, -1), repeat=4)]
    tags = {"platonic"} | ({"kissing"} if d <= 5 else set())
    return _from_rows(f"D{d}", d, _d_roots(d), tags, mirrors=mirrors)


def _600cell_rows():
    vecs = [[2 if k == i else 0 for k in range(4)] for i in range(4)]
    vecs += [list(s) for s in itertools.product((1, -1), repeat=4)]
    vecs += _signed_perms([PHI, ExactScalar(1), PHI - 1, ExactScalar(0)], even_only=True)
    return vecs


def _600cell():
    vecs = _600cell_rows()
    return _from_rows("600cell", 4, vecs, {"platonic"}, mirrors=vecs)


def _120cell_rows():
    """Cell centres of the 600-cell (vertices of the dual 120-cell), as 300 lines."""
    verts = _canonical_lines(_600cell_rows())
    verts = verts + [[-c for c in v] for v in verts]
    F = np.array([[float(c) for c in v] for v in verts]) / 2.0
    G = F @ F.T
    adj = np.abs(G - (1 + math.sqrt(5)) / 4) < 1e-9
    nbrs = [set(np.flatnonzero(adj[i])) for i in range(len(verts))]
    cells = set()
    for i in range(len(verts)):
        for j, k, l in itertools.combinations(sorted(nbrs[i]), 3):
            if j in nbrs[k] and j in nbrs[l] and k in nbrs[l]:
                cells.add(tuple(sorted((i, j, k, l))))
    out = []
    for c in sorted(cells):
        out.append([sum((verts[i][t] for i in c), ExactScalar(0)) for t in range(4)])
    return out


def _120cell():
    return _from_rows("120cell", 4, _120cell_rows(), {"platonic"}, mirrors=_600cell_rows())


def _e8():
    vecs = _e8_roots_scaled()
    return _from_rows("E8", 8, vecs, {"kissing", "platonic"}, mirrors=vecs)


def _e7_rows():
    return [v for v in _e8_roots_scaled() if sum(v) == 0]


def _e7():
    vecs = _e7_rows()
    return _from_rows("E7", 7, vecs, {"kissing", "platonic"}, mirrors=vecs, meta={"ambient_note": "sum-zero hyperplane of R^8"})


def _e6():
    vecs = [v for v in _e7_rows() if v[0] + v[1] == 0]
    return _from_rows("E6", 6, vecs, {"kissing", "platonic"}, mirrors=vecs, meta={"ambient_note": "orthogonal to (1,..,1) and e1+e2 in R^8"})


def _etf28_rows():
    out = []
    for i, j in itertools.combinations(range(8), 2):
        v = [-1] * 8
        v[i] = v[j] = 3
        out.append(v)
    return out


def _transposition_mirrors(n):
    return [[1 if k == i else (-1 if k == j else 0) for k in range(n)] for i, j in itertools.combinations(range(n), 2)]


def _etf28():
    return _from_rows("ETF-28-d7", 7, _etf28_rows(), {"etf", "platonic"}, mirrors=_transposition_mirrors(8))


def _e7_etf91():
    vecs = _e7_rows() + _etf28_rows()
    return _from_rows("E7+ETF-91", 7, vecs, {"platonic"}, mirrors=_transposition_mirrors(8))


# catalog id -> (builder, listed m, aliases)
CATALOG = {
    "hexagon": (_hexagon, 3, ("A2",)),
    "icosahedron": (_icosahedron, 6, ()),
    "cuboctahedron": (lambda: _renamed(_dd(3), "cuboctahedron"), 6, ("A3", "A3-cuboctahedron", "D3")),
    "dodecahedron": (_dodecahedron, 10, ()),
    "icosidodecahedron": (_icosidodecahedron, 15, ()),
    "24cell": (lambda: _renamed(_dd(4), "24cell"), 12, ("D4", "24cell/D4")),
    "600cell": (_600cell, 60, ()),
    "120cell": (_120cell, 300, ()),
    "D5": (lambda: _dd(5), 20, ()),
    "D6": (lambda: _dd(6), 30, ()),
    "E6": (_e6, 36, ()),
    "ETF-28-d7": (_etf28, 28, ("ETF28", "ETF-28")),
    "D7": (lambda: _dd(7), 42, ()),
    "E7": (_e7, 63, ()),
    "E7+ETF-91": (_e7_etf91, 91, ("E7+ETF",)),
    "D8": (lambda: _dd(8), 56, ()),
    "E8": (_e8, 120, ()),
}

_ALIASES = {a.lower(): k for k, (_, _, al) in CATALOG.items() for a in al + (k,)}

_CACHE: dict = {}


def _renamed(conf, name):
    conf.name = name
    return conf


def generate(name: str) -> Configuration:
    key = _ALIASES.get(name.lower())
    if key is None:
        raise CatalogError(f"unknown configuration {name!r}")
    if key not in _CACHE:
        _CACHE[key] = CATALOG[key][0]()
    return _CACHE[key]


def catalog_table():
    """(name, d, m) rows in catalog order (by dimension)."""
    rows = []
    for key in CATALOG:
        c = generate(key)
        rows.append((key, c.d, c.m))
    return rows


# -- Gram matrices --------------------------------------------------------


def _norm_classes(norms2):
    classes: dict = {}
    for i, n in enumerate(norms2):
        classes.setdefault(n, []).append(i)
    return classes


def gram(confA: Configuration, confB: Configuration | None = None) -> CorrelationPoint:
    """Exact matrix of inner products <a_x, b_y> of the unit vectors."""
    confB = confA if confB is None else confB
    if confA.ambient != confB.ambient or confA.d != confB.d:
        raise ValueError(f"dimension mismatch: {confA.d} vs {confB.d}")
    values = confA.vectors @ confB.vectors.T
    if not (confA.exact and confB.exact):
        return CorrelationPoint(values, None, confA, confB)
    raw = confA.rows @ confB.rows.T
    ca, cb = _norm_classes(confA.norms2), _norm_classes(confB.norms2)
    if len(ca) == 1 and len(cb) == 1:
        (na,), (nb,) = ca, cb
        exact = raw / _norm_product_root(na, nb)
    else:
        exact = _blockwise_scale(raw, ca, cb)
    return CorrelationPoint(values, exact, confA, confB)


def _norm_product_root(na, nb):
    # sqrt(na * nb), which is na itself when the two norms agree
    if na == nb:
        return na
    return (na * nb).sqrt()


def _blockwise_scale(raw: ExactMatrix, ca, cb) -> ExactMatrix:
    m1, m2 = raw.shape
    cols = []
    order_b = []
    for nb, idx_b in cb.items():
        blocks = []
        order_a = []
        for na, idx_a in ca.items():
            sub = ExactMatrix(raw.basis, raw.num[:, idx_a][:, :, idx_b], raw.den)
            blocks.append(sub / _norm_product_root(na, nb))
            order_a += idx_a
        cols.append(ExactMatrix.concat(blocks, axis=0))
        order_b += idx_b
    full = ExactMatrix.concat(cols, axis=1)
    inv_a = np.argsort(order_a)
    inv_b = np.argsort(order_b)
    return ExactMatrix(full.basis, full.num[:, inv_a][:, :, inv_b], full.den)


def diagonal_modification(P, lam) -> ExactMatrix:
    """A = P - lam * I."""
    E = P.exact if isinstance(P, CorrelationPoint) else P
    if E is None:
        E = P.as_exact()
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise ValueError("diagonal modification needs a square matrix")
    return E - ExactMatrix.identity(E.shape[0]).scale(lam)


def union(confA: Configuration, confB: Configuration, name=None) -> Configuration:
    """Concatenate two exact configurations (e.g. a polytope and its dual)."""
    if not (confA.exact and confB.exact):
        vec = np.vstack([confA.vectors, confB.vectors])
        return Configuration(name or f"{confA.name}+{confB.name}", confA.d, vec)
    rows = ExactMatrix.concat([confA.rows, confB.rows], axis=0)
    mirrors = confA.mirrors if confA.mirrors is not None else confB.mirrors
    return _exact_config(name or f"{confA.name}+{confB.name}", confA.d, rows, confA.norms2 + confB.norms2, (), mirrors)


# -- symmetry from reflections --------------------------------------------


def line_action(conf: Configuration, mirror, tol: float = 1e-8):
    """Signed permutation of lines induced by the reflection through ``mirror``.

    Returns ``(perm, sign)`` with ``R a_x = sign[x] * a_{perm[x]}``.  Raises if
    the reflection does not preserve the line set.
    """
    r = np.asarray(mirror, dtype=float)
    r = r / np.linalg.norm(r)
    V = conf.vectors
    W = V - 2.0 * np.outer(V @ r, r)
    C = W @ V.T
    perm = np.argmax(np.abs(C), axis=1)
    sign = np.where(C[np.arange(len(V)), perm] >= 0, 1, -1)
    if not np.allclose(np.abs(C[np.arange(len(V)), perm]), 1.0, atol=tol):
        raise ValueError("reflection does not preserve the line set")
    if len(set(perm.tolist())) != len(V):
        raise ValueError("induced map is not a permutation")
    return perm.astype(np.int64), sign.astype(np.int64)


# -- packing files and augmentation ---------------------------------------

_NUM = re.compile(r"\S+")


def parse_packing(text, d: int, m: int, name: str = "packing") -> Configuration:
    """Read ``d*m`` numbers row-major; '#' lines are comments."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode()
    vals = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        for mt in _NUM.finditer(line):
            tok = mt.group()
            try:
                v = float(tok)
            except ValueError:
                raise PackingParseError(f"bad number {tok!r}", ln, mt.start() + 1) from None
            if not math.isfinite(v):
                raise PackingParseError(f"non-finite number {tok!r}", ln, mt.start() + 1)
            vals.append(v)
            if len(vals) == d * m:
                break
        if len(vals) == d * m:
            break
    if len(vals) < d * m:
        raise PackingParseError(f"expected {d * m} numbers, found {len(vals)}")
    V = np.array(vals).reshape(m, d)
    nrm = np.linalg.norm(V, axis=1)
    if np.any(nrm == 0):
        raise PackingParseError("zero vector in packing")
    V = V / nrm[:, None]
    return Configuration(name, d, V, meta={"source": "packing"})


def _hull_edges(points: np.ndarray, tol: float = 1e-9):
    from scipy.spatial import ConvexHull

    d = points.shape[1]
    if d == 1:
        return [(int(np.argmin(points[:, 0])), int(np.argmax(points[:, 0])))]
    hull = ConvexHull(points)
    # merge coplanar simplices into true facets
    eqs = np.unique(np.round(hull.equations, 8), axis=0)
    dist = points @ eqs[:, :-1].T + eqs[:, -1]
    inc = np.abs(dist) < 1e-7
    edges = []
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            shared = inc[i] & inc[j]
            if shared.sum() < d - 1:
                continue
            normals = eqs[shared, :-1]
            if np.linalg.matrix_rank(normals, tol=1e-7) == d - 1:
                edges.append((i, j))
    return edges


def augment_edge_midpoints(conf: Configuration, mode: str = "hull") -> Configuration:
    """Add the renormalised midpoints of edges of conv{+-a_x}.

    ``mode='hull'`` uses the true edges of the centrally symmetric hull;
    ``mode='all-pairs'`` adds one midpoint per unordered pair, taking the sign
    of (a_x +- a_y) that keeps the two vectors aligned; orthogonal pairs have
    no preferred sign and contribute both bisectors.
    """
    V = conf.vectors
    if len(V) < 2:
        raise ValueError("need at least two lines")
    if mode == "hull":
        pts = np.vstack([V, -V])
        mids = [pts[i] + pts[j] for i, j in _hull_edges(pts)]
    elif mode == "all-pairs":
        mids = []
        for i, j in itertools.combinations(range(len(V)), 2):
            ip = V[i] @ V[j]
            if abs(ip) < 1e-12:
                mids += [V[i] + V[j], V[i] - V[j]]
            else:
                mids.append(V[i] + np.sign(ip) * V[j])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = [v for v in V]
    keys = {_line_key(v) for v in V}
    for w in mids:
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            continue
        w = w / nw
        k = _line_key(w)
        if k not in keys:
            keys.add(k)
            out.append(w)
    return Configuration(f"{conf.name}+mid", conf.d, np.array(out), meta={"augmented": mode, "base": conf.name})


def _line_key(v):
    nz = np.flatnonzero(np.abs(v) > 1e-9)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return tuple(np.round(v, 8) + 0.0)


def refined_icosahedron(level: int) -> Configuration:
    """Icosahedron refined ``level`` times by adding normalised facet centroids."""
    from scipy.spatial import ConvexHull

    ico = generate("icosahedron").vectors
    pts = np.vstack([ico, -ico])
    for _ in range(level):
        hull = ConvexHull(pts)
        cents = pts[hull.simplices].mean(axis=1)
        cents /= np.linalg.norm(cents, axis=1, keepdims=True)
        pts = np.vstack([pts, cents])
    lines = []
    keys = set()
    for v in pts:
        k = _line_key(v)
        if k not in keys:
            keys.add(k)
            lines.append(v if v[np.flatnonzero(np.abs(v) > 1e-9)[0]] > 0 else -v)
    return Configuration(f"icosahedron-refined-{level}", 3, np.array(lines), meta={"level": level})


def rational_unit_vectors(V: np.ndarray, max_denominator: int = 10**6) -> ExactMatrix:
    """Exact rational unit vectors near the rows of V (2-D via the stereographic parameter).

    For rows in R^2 the map t -> ((1-t^2)/(1+t^2), 2t/(1+t^2)) lands exactly on
    the circle; in higher dimension the inverse stereographic projection from
    -e_1 is used the same way.
    """
    V = np.asarray(V, dtype=float)
    rows = []
    for v in V:
        v = v / np.linalg.norm(v)
        flip = v[0] < 0
        w = -v if flip else v
        # stereographic coordinates from -e_1
        ts = [Fraction(w[i] / (1.0 + w[0])).limit_denominator(max_denominator) for i in range(1, len(w))]
        s2 = sum(t * t for t in ts)
        den = 1 + s2
        row = [(1 - s2) / den] + [2 * t / den for t in ts]
        if flip:
            row = [-c for c in row]
        rows.append(row)
    return ExactMatrix.from_entries(rows)
