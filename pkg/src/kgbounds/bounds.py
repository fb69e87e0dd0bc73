"""Closed-form constants, upper/lower bound certificates and the best-known table."""

from __future__ import annotations

import itertools
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .exact import ExactScalar, PiMonomial, RationalInterval, sqrt
from .matrix import ExactMatrix

__all__ = [
    "BoundCertificate",
    "CertificateStore",
    "LITERATURE",
    "REPORTED",
    "ShrinkingFactor",
    "best_known",
    "davie_bound",
    "davie_objective",
    "diagonal_modification_search",
    "gamma",
    "gamma_exact",
    "import_witness",
    "multiplicative_lower",
    "proposition1_upper",
    "psd_constant",
    "psd_constant_exact",
    "ratio_certificate",
    "report",
    "shrinking_factor",
    "soa_lower_n2",
    "soa_lower_n2_exact",
]


# -- gamma family ---------------------------------------------------------


def gamma_exact(d: int) -> PiMonomial:
    """gamma(d) = (2/d) * (Gamma((d+1)/2) / Gamma(d/2))^2 as q * pi^(+-1)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    k = d // 2
    if d % 2 == 0:
        # Gamma(k + 1/2) / Gamma(k) = (2k)! sqrt(pi) / (4^k k! (k-1)!)
        c = Fraction(factorial(2 * k), 4**k * factorial(k) * factorial(k - 1))
        return PiMonomial(Fraction(2, d) * c * c, 1)
    # Gamma(k + 1) / Gamma(k + 1/2) = 4^k k!^2 / ((2k)! sqrt(pi))
    c = Fraction(4**k * factorial(k) ** 2, factorial(2 * k))
    return PiMonomial(Fraction(2, d) * c * c, -1)


def gamma(d: int) -> RationalInterval:
    return gamma_exact(d).enclose()


def soa_lower_n2_exact(d: int) -> PiMonomial:
    """Previously known lower bound on K_G(d -> 2)."""
    if d < 3:
        raise ValueError("d must be >= 3")
    k = d // 2
    c = comb(d - 1, k)
    if d % 2 == 0:
        return PiMonomial(Fraction(d * c * c, 2 ** (2 * d - 3)), 0)
    return PiMonomial(Fraction(2 ** (2 * d + 1), d * c * c), -2)


def soa_lower_n2(d: int) -> RationalInterval:
    return soa_lower_n2_exact(d).enclose()


def psd_constant_exact(d: int) -> PiMonomial:
    """Grothendieck constant of order d restricted to PSD matrices: gamma(d) pi / 2."""
    return gamma_exact(d) * PiMonomial(Fraction(1, 2), 1)


def psd_constant(d: int) -> RationalInterval:
    return psd_constant_exact(d).enclose()


# -- Davie's bound --------------------------------------------------------


def _rho(lam):
    return math.sqrt(2 / math.pi) * lam * math.exp(-lam * lam / 2)


def davie_objective(lam: float) -> float:
    rho = _rho(lam)
    # 2 sqrt(2/pi) * int_lam^inf exp(-x^2/2) dx = 2 erfc(lam / sqrt 2)
    F = 2 / math.pi * math.exp(-lam * lam) + rho * (1 - 2 * math.erfc(lam / math.sqrt(2)))
    return (1 - rho) / max(rho, F)


def davie_bound(grid: int = 1000, refine_tol: float = 1e-12):
    """(value, lambda*) maximising the objective over (0, 1).

    A grid locates the best bracket; golden-section search refines it.
    """
    from scipy.optimize import minimize_scalar

    lams = np.linspace(0, 1, grid + 1)[1:-1]
    vals = np.array([davie_objective(x) for x in lams])
    i = int(np.argmax(vals))
    lo, hi = lams[max(i - 1, 0)], lams[min(i + 1, len(lams) - 1)]
    res = minimize_scalar(lambda x: -davie_objective(x), bracket=(lo, lams[i], hi), method="golden",
                          tol=refine_tol)
    return float(-res.fun), float(res.x)


def multiplicative_lower(kg_d_lower, kg_n_upper):
    """K_G(d -> n) >= K_G(d) / K_G(n), from lower on the former and upper on the latter."""
    if float(kg_n_upper) <= 0:
        raise ValueError("upper bound must be positive")
    if isinstance(kg_d_lower, (int, Fraction, ExactScalar)) and isinstance(kg_n_upper, (int, Fraction, ExactScalar)):
        return ExactScalar(kg_d_lower) / kg_n_upper
    return float(kg_d_lower) / float(kg_n_upper)


# -- shrinking factor and upper bounds -------------------------------------


@dataclass
class ShrinkingFactor:
    eta: float
    facet_witness: tuple  # (unit normal, offset) of the closest hull facet
    facets: int = 0
    method: str = "hull"


def _sym_points(conf) -> np.ndarray:
    V = conf.vectors if hasattr(conf, "vectors") else np.asarray(conf, dtype=float)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    return np.vstack([V, -V])


def shrinking_factor(conf, method: str = "hull") -> ShrinkingFactor:
    """Inradius of conv{+-a_x}: the distance from the origin to the closest facet.

    ``method='subsets'`` enumerates hyperplanes through every d-subset of the
    points and keeps the supporting ones; it is the slow reference for 'hull'.
    """
    pts = _sym_points(conf)
    d = pts.shape[1]
    if np.linalg.matrix_rank(pts) < d:
        raise ValueError("points do not span the space; the hull is degenerate")
    if method == "hull":
        from scipy.spatial import ConvexHull

        hull = ConvexHull(pts)
        eq = hull.equations  # normal . x + offset <= 0 inside, unit normals
        j = int(np.argmax(eq[:, -1]))
        return ShrinkingFactor(float(-eq[j, -1]), (eq[j, :-1].copy(), float(-eq[j, -1])), len(eq), "hull")
    if method != "subsets":
        raise ValueError(f"unknown method {method!r}")
    best, wit, count = np.inf, None, 0
    for idx in itertools.combinations(range(len(pts)), d):
        S = pts[list(idx)]
        # hyperplane n.x = 1 through the subset, if it misses the origin
        try:
            nrm = np.linalg.solve(S, np.ones(d))
        except np.linalg.LinAlgError:
            continue
        if np.max(pts @ nrm) > 1 + 1e-9:
            continue
        count += 1
        dist = 1 / np.linalg.norm(nrm)
        if dist < best:
            best, wit = dist, (nrm * dist, dist)
    return ShrinkingFactor(float(best), wit, count, "subsets")


@dataclass
class BoundCertificate:
    d: int
    n: int | None
    kind: str  # lower / upper
    value: object
    provenance: str  # exact, heuristic, closed-form, literature, reported
    label: str = ""
    witness: dict = field(default_factory=dict)
    monotonicity_chain: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def value_float(self) -> float:
        return float(self.value)

    @property
    def asterisk(self) -> bool:
        return self.provenance in ("heuristic", "reported")

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "kind": self.kind,
            "value": _value_json(self.value),
            "value_float": self.value_float,
            "provenance": self.provenance,
            "label": self.label,
            "witness": self.witness,
            "monotonicity_chain": self.monotonicity_chain,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj) -> BoundCertificate:
        return cls(obj["d"], obj.get("n"), obj["kind"], _value_from_json(obj["value"]), obj["provenance"],
                   obj.get("label", ""), obj.get("witness", {}), obj.get("monotonicity_chain"), obj.get("meta", {}))


def _value_json(v):
    if isinstance(v, ExactScalar):
        return {"exact": v.to_json()}
    if isinstance(v, Fraction):
        return {"exact": ExactScalar(v).to_json()}
    if isinstance(v, int):
        return {"exact": ExactScalar(v).to_json()}
    if isinstance(v, RationalInterval):
        return {"interval": [[v.lo.numerator, v.lo.denominator], [v.hi.numerator, v.hi.denominator]]}
    if isinstance(v, PiMonomial):
        return {"pi_monomial": [[v.coeff.numerator, v.coeff.denominator], v.power]}
    return {"float": float(v)}


def _value_from_json(obj):
    if "exact" in obj:
        return ExactScalar.from_json(obj["exact"])
    if "interval" in obj:
        (a, b), (c, e) = obj["interval"]
        return RationalInterval(Fraction(a, b), Fraction(c, e))
    if "pi_monomial" in obj:
        (a, b), p = obj["pi_monomial"]
        return PiMonomial(Fraction(a, b), p)
    return float(obj["float"])


def proposition1_upper(alpha, etaA, etaB, d: int = 3, n: int = 2, witness=None) -> BoundCertificate:
    """K_G(d -> n) <= 1 / (alpha * etaA * etaB) when alpha P is in cut_n."""
    if float(alpha) <= 0 or float(etaA) <= 0 or float(etaB) <= 0:
        raise ValueError("alpha and shrinking factors must be positive")
    if float(etaA) > 1 or float(etaB) > 1:
        raise ValueError("shrinking factors are at most 1")
    if all(isinstance(x, (int, Fraction)) for x in (alpha, etaA, etaB)):
        value = 1 / (Fraction(alpha) * Fraction(etaA) * Fraction(etaB))
    else:
        # round the bound up so the certificate stays sound
        value = math.nextafter(1 / (float(alpha) * float(etaA) * float(etaB)), math.inf)
    w = {"alpha": float(alpha), "etaA": float(etaA), "etaB": float(etaB)}
    w.update(witness or {})
    return BoundCertificate(d, n, "upper", value, "exact", f"upper-d{d}-n{n}", w)


def ratio_certificate(P, M, sdp_d_lower, sdp_n, d: int, n: int = 1, label: str = "") -> BoundCertificate:
    """Lower bound sdp_d_lower / SDP_n[M] on K_G(d -> n).

    ``sdp_n`` is an ExactSolveResult (exact when its proof flag is optimal)
    or an OracleResult (always heuristic).
    """
    val = sdp_n.value
    if float(val) <= 0:
        raise ValueError("degenerate certificate: SDP_n value must be positive")
    exact = getattr(sdp_n, "proof_flag", None) == "optimal"
    num = sdp_d_lower
    if exact and not isinstance(num, float) and not isinstance(val, float):
        value = ExactScalar(num) / ExactScalar(val)
    else:
        value = float(num) / float(val)
    w = {"sdp_d_lower": _value_json(num), "sdp_n": _value_json(val)}
    if hasattr(sdp_n, "to_json"):
        w["solver"] = sdp_n.to_json()
    if isinstance(M, ExactMatrix):
        w["M"] = M.to_json()
    return BoundCertificate(d, n, "lower", value, "exact" if exact else "heuristic", label, w)


# -- diagonal modification search ------------------------------------------


def _as_exact(P):
    E = getattr(P, "exact", None)
    if E is None and isinstance(P, ExactMatrix):
        E = P
    if E is None:
        E = ExactMatrix.from_float(getattr(P, "values", P))
    return E


def diagonal_modification_search(P, lam_lo=0, lam_hi=1, steps: int = 12, exact_limit: int = 34,
                                 restarts: int = 1000, seed: int = 0):
    """Maximise <P - lam I, P> / SDP_1[P - lam I] over lam in [lam_lo, lam_hi].

    lam -> SDP_1[P - lam I] is a maximum of affine functions c - lam t (one per
    vertex a b^T, with c = a^T P b and t = a^T b), so on each linear piece the
    ratio is monotone and the maximum sits at a breakpoint or an endpoint.
    Pieces found on the grid give a candidate envelope; each envelope
    breakpoint is re-solved, and any new piece is added until the envelope is
    verified.  Returns ``(lam, ratio, meta)``.
    """
    from .solver import sdp1_branch_and_bound
    from .oracle import heuristic_sdp

    E = _as_exact(P)
    m = E.shape[0]
    heuristic = m > exact_limit
    I = ExactMatrix.identity(m)
    normsq = E.inner(E)
    trace = E.trace()

    def solve(lam):
        A = E - I.scale(lam)
        if heuristic:
            r = heuristic_sdp(A.to_float(), 1, restarts, seed)
        else:
            r = sdp1_branch_and_bound(A, restarts=restarts, seed=seed)
        a = r.strategy.a.astype(np.int64)
        b = r.strategy.b.astype(np.int64)
        c = ExactMatrix.from_int(a.reshape(1, -1)) @ E @ ExactMatrix.from_int(b.reshape(-1, 1))
        return c[0, 0], int(a @ b), r

    lo, hi = Fraction(lam_lo), Fraction(lam_hi)
    pieces = {}
    grid = [lo + (hi - lo) * k / steps for k in range(steps + 1)]
    for lam in grid:
        c, t, _ = solve(lam)
        pieces[(str(c), t)] = (c, t)

    def envelope(lam):
        return max((c - t * lam for c, t in pieces.values()), key=float)

    solves = len(grid)
    while True:
        # breakpoints of the current envelope inside [lo, hi]
        cands = {lo, hi}
        pl = list(pieces.values())
        for (c1, t1), (c2, t2) in itertools.combinations(pl, 2):
            if t1 != t2:
                lam = (c1 - c2) / (t1 - t2)
                if isinstance(lam, ExactScalar) and lam.is_rational():
                    lam = lam.as_fraction()
                if float(lo) <= float(lam) <= float(hi) and abs(float(envelope(lam) - (c1 - t1 * lam))) < 1e-9:
                    cands.add(lam)
        new = False
        for lam in sorted(cands, key=float):
            c, t, _ = solve(lam)
            solves += 1
            if (c - t * lam) > envelope(lam) and (str(c), t) not in pieces:
                pieces[(str(c), t)] = (c, t)
                new = True
        if not new:
            break
    best = None
    for lam in sorted(cands, key=float):  # ties go to the smallest lambda
        val = envelope(lam)
        r = (normsq - trace * lam) / val
        if best is None or r > best[1]:
            best = (lam, r)
    lam, r = best
    lam = lam if isinstance(lam, ExactScalar) else ExactScalar(lam)
    meta = {"pieces": len(pieces), "solves": solves, "heuristic": heuristic}
    return lam, r, meta


# -- improved witnesses ----------------------------------------------------


def import_witness(obj, d: int, tol: float = 1e-9):
    """Load an externally produced point P' of cut_d.

    Accepts ``{"A": m1 x d, "B": m2 x d}`` factor rows (checked for unit norm)
    or ``{"P": matrix}`` for a square unit-diagonal PSD matrix, factored by
    eigen-decomposition with rank at most d.  Returns the float matrix.
    """
    if isinstance(obj, (str, os.PathLike)):
        with open(obj) as fh:
            obj = json.load(fh)
    if "A" in obj:
        A = np.asarray(obj["A"], dtype=float)
        B = np.asarray(obj.get("B", obj["A"]), dtype=float)
        if A.shape[1] > d or B.shape[1] > d:
            raise ValueError(f"factors have more than {d} columns")
        for F in (A, B):
            if np.max(np.abs(np.linalg.norm(F, axis=1) - 1)) > tol:
                raise ValueError("factor rows are not unit vectors within tolerance")
        return A @ B.T
    P = np.asarray(obj["P"], dtype=float)
    if P.shape[0] != P.shape[1] or not np.allclose(P, P.T, atol=tol):
        raise ValueError("matrix-only witnesses must be square and symmetric")
    w, U = np.linalg.eigh(P)
    if w[:-d].size and np.max(np.abs(w[:-d])) > tol:
        raise ValueError(f"witness has rank above {d}")
    if w.min() < -tol:
        raise ValueError("witness is not PSD")
    F = U[:, -d:] * np.sqrt(np.clip(w[-d:], 0, None))
    if np.max(np.abs(np.linalg.norm(F, axis=1) - 1)) > tol:
        raise ValueError("recovered factors are not unit vectors within tolerance")
    return P


# -- store and best-known table --------------------------------------------


# constants proven elsewhere; data, never recomputed
LITERATURE = [
    BoundCertificate(2, None, "lower", sqrt(2), "literature", "K_G(2) = sqrt 2 (Krivine)",
                     meta={"exact_value": True}),
    BoundCertificate(2, None, "upper", sqrt(2), "literature", "K_G(2) = sqrt 2 (Krivine)",
                     meta={"exact_value": True}),
    BoundCertificate(9, None, "lower", 1.48608, "literature", "K_G(9) >= 1.48608"),
    BoundCertificate(3, None, "upper", 1.455, "literature", "K_G(3) <= 1.455"),
]

# large-scale lower bounds obtained with long runs; shipped as recorded values
REPORTED = [
    BoundCertificate(3, None, "lower", 1.43670, "reported", "97x97 cut_3 witness",
                     meta={"shape": [97, 97]}),
    BoundCertificate(4, None, "lower", 1.48579, "reported", "600-cell vs 600-cell + 120-cell",
                     meta={"shape": [60, 360]}),
    BoundCertificate(5, None, "lower", 1.49339, "reported", "65 vs 385 lines in R^5",
                     meta={"shape": [65, 385]}),
]


class CertificateStore:
    """Directory of JSON certificates; append-only."""

    def __init__(self, directory=None):
        self.directory = directory
        self._certs: list[BoundCertificate] = []
        if directory and os.path.isdir(directory):
            for fn in sorted(os.listdir(directory)):
                if fn.endswith(".json"):
                    with open(os.path.join(directory, fn)) as fh:
                        obj = json.load(fh)
                    if "kind" in obj and "d" in obj:
                        self._certs.append(BoundCertificate.from_json(obj))

    def __len__(self):
        return len(self._certs)

    def __iter__(self):
        return iter(list(self._certs))

    def add(self, cert: BoundCertificate, filename: str | None = None):
        self._certs.append(cert)
        if self.directory:
            os.makedirs(self.directory, exist_ok=True)
            name = filename or f"{len(self._certs):04d}-{_slug(cert.label or cert.kind)}.json"
            with open(os.path.join(self.directory, name), "w") as fh:
                json.dump(cert.to_json(), fh, sort_keys=True, indent=1)
        return cert


def _slug(s: str) -> str:
    keep = [ch if ch.isalnum() else "-" for ch in s.lower()]
    return "".join(keep).strip("-")[:60] or "cert"


def best_known(d: int, store=None, include_reported: bool = True, include_literature: bool = True,
               n: int | None = None, include_closed_form: bool = True) -> dict:
    """Best lower bound on K_G(d) from every source with order <= d.

    K_G(d) is non-decreasing in d, so any certificate for a smaller order
    propagates upwards; the chain records where the winning value came from.
    """
    cands = []
    for c in store or []:
        if c.kind == "lower" and c.n in (n, None, 1) and c.d <= d:
            cands.append(c)
    if include_reported:
        cands += [c for c in REPORTED if c.d <= d]
    if include_literature:
        cands += [c for c in LITERATURE if c.kind == "lower" and c.d <= d]
    if include_closed_form:
        cands.append(BoundCertificate(d, None, "lower", psd_constant_exact(d), "closed-form",
                                      f"PSD constant of order {d}"))
    if not cands:
        raise ValueError(f"no lower bound available for d={d}")
    best = max(cands, key=lambda c: (c.value_float, c.d))
    chain = [f"d={k}" for k in range(best.d, d + 1)]
    return {
        "d": d,
        "value": best.value,
        "value_float": best.value_float,
        "provenance": best.provenance,
        "source": best.label,
        "source_d": best.d,
        "asterisk": best.asterisk,
        "monotonicity_chain": chain if best.d < d else [],
    }


def report(store, d_max: int | None = None, include_reported: bool = False, include_literature: bool = False,
           csv_path=None) -> tuple[list, str]:
    """Per-d best-known rows, a text table and optional CSV.

    Rows run from the smallest stored order up to ``d_max`` (default: the
    largest stored order).  By default every value comes from a stored
    certificate; the shipped literature and reported constants join only when
    asked for.  An empty store yields an empty table and a warning.
    """
    certs = [c for c in store or [] if c.kind == "lower"]
    if not certs:
        warnings.warn("certificate store is empty; nothing to report")
        rows = []
    else:
        lo = min(c.d for c in certs)
        hi = d_max if d_max is not None else max(c.d for c in certs)
        rows = [best_known(d, certs, include_reported, include_literature, include_closed_form=False)
                for d in range(lo, hi + 1)]
    lines = ["d  best      provenance   *  source"]
    for r in rows:
        star = "*" if r["asterisk"] else " "
        src = r["source"] + (f" (propagated from d={r['source_d']})" if r["monotonicity_chain"] else "")
        lines.append(f"{r['d']:<2} {r['value_float']:.5f}  {r['provenance']:<12} {star}  {src}")
    text = "\n".join(lines)
    if csv_path:
        import csv

        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["d", "value", "value_exact", "provenance", "asterisk", "source", "source_d", "chain"])
            for r in rows:
                w.writerow([r["d"], f"{r['value_float']:.10f}", str(r["value"]), r["provenance"],
                            "*" if r["asterisk"] else "", r["source"], r["source_d"],
                            " -> ".join(r["monotonicity_chain"])])
    return rows, text
