"""Dense matrices over the multiquadratic field, stored per radicand.

A matrix with radicand basis ``(s_1, ..., s_k)`` is held as an integer array
``num`` of shape ``(k, *shape)`` and a common positive denominator ``den``::

    value[idx] = sum_i num[i][idx] * sqrt(s_i) / den

Entries are Python integers in object arrays, so nothing overflows.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

import numpy as np

from .exact import ExactScalar, rationalize

__all__ = ["ExactMatrix"]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _obj(a) -> np.ndarray:
    out = np.empty(np.shape(a), dtype=object)
    out[...] = a
    if out.size and not isinstance(out.flat[0], int):
        out = np.vectorize(int, otypes=[object])(out)
    return out


def _gcd_reduce(arr: np.ndarray) -> int:
    g = 0
    for v in arr.flat:
        if v:
            g = math.gcd(g, v)
            if g == 1:
                return 1
    return g


class ExactMatrix:
    """Exact 1-D or 2-D array over Q(sqrt(s_1), ..., sqrt(s_k))."""

    __slots__ = ("basis", "num", "den")

    def __init__(self, basis: Iterable[int], num: np.ndarray, den: int = 1):
        basis = tuple(int(s) for s in basis)
        num = np.asarray(num, dtype=object)
        if num.shape[0] != len(basis):
            raise ValueError("num must have one slab per radicand")
        if den <= 0:
            raise ValueError("denominator must be positive")
        self.basis, self.num, self.den = basis, num, int(den)
        self._normalize()

    def _normalize(self) -> None:
        slabs = self.num.reshape(len(self.basis), -1) if self.basis else self.num
        keep = [i for i in range(len(self.basis)) if any(v != 0 for v in slabs[i])]
        if len(keep) != len(self.basis):
            self.basis = tuple(self.basis[i] for i in keep)
            self.num = self.num[keep] if keep else np.zeros((0,) + self.num.shape[1:], dtype=object)
        order = sorted(range(len(self.basis)), key=lambda i: self.basis[i])
        if order != list(range(len(self.basis))):
            self.basis = tuple(self.basis[i] for i in order)
            self.num = self.num[order]
        g = math.gcd(_gcd_reduce(self.num), self.den) if self.num.size else self.den
        if g > 1:
            self.num = self.num // g
            self.den //= g
        if not self.basis:
            self.den = 1

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, shape) -> ExactMatrix:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        return cls((), np.zeros((0,) + shape, dtype=object), 1)

    @classmethod
    def from_int(cls, arr) -> ExactMatrix:
        arr = _obj(np.asarray(arr))
        return cls((1,), arr[None], 1)

    @classmethod
    def identity(cls, m: int) -> ExactMatrix:
        return cls.from_int(np.eye(m, dtype=np.int64))

    @classmethod
    def from_entries(cls, rows) -> ExactMatrix:
        """From a nested list (1-D or 2-D) of ints, Fractions or ExactScalars."""
        rows = list(rows)
        if rows and isinstance(rows[0], (list, tuple, np.ndarray)):
            arr = np.empty((len(rows), len(rows[0])), dtype=object)
            for i, r in enumerate(rows):
                if len(r) != arr.shape[1]:
                    raise ValueError("ragged rows")
                for j, v in enumerate(r):
                    arr[i, j] = v
        else:
            arr = np.empty(len(rows), dtype=object)
            for i, v in enumerate(rows):
                arr[i] = v
        scal = [ExactScalar(v) for v in arr.flat]
        basis = sorted({s for v in scal for s in v.radicands})
        den = 1
        for v in scal:
            for q in v.terms.values():
                den = _lcm(den, q.denominator)
        num = np.zeros((len(basis),) + arr.shape, dtype=object)
        if not basis:
            return cls.zeros(arr.shape)
        index = {s: i for i, s in enumerate(basis)}
        flat = num.reshape(len(basis), -1)
        for j, v in enumerate(scal):
            for s, q in v.terms.items():
                flat[index[s], j] = q.numerator * (den // q.denominator)
        return cls(basis, num, den)

    @classmethod
    def from_float(cls, arr, max_denominator: int = 10**12) -> ExactMatrix:
        arr = np.asarray(arr, dtype=float)
        fr = [rationalize(float(v), max_denominator) for v in arr.flat]
        den = 1
        for q in fr:
            den = _lcm(den, q.denominator)
        num = np.array([q.numerator * (den // q.denominator) for q in fr], dtype=object)
        return cls((1,), num.reshape((1,) + arr.shape), den)

    # -- basic properties --------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.num.shape[1:])

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def is_rational(self) -> bool:
        return self.basis in ((), (1,))

    def is_integer(self) -> bool:
        return self.is_rational() and self.den == 1

    def integer_form(self) -> tuple[np.ndarray, int]:
        """``(numerators, den)`` for a rational matrix (numerators as object ints)."""
        if not self.is_rational():
            raise ValueError("matrix has irrational entries")
        if not self.basis:
            return np.zeros(self.shape, dtype=object), 1
        return self.num[0].copy(), self.den

    def to_float(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=float)
        for s, slab in zip(self.basis, self.num):
            out += np.array([float(Fraction(int(v), self.den)) for v in slab.flat]).reshape(self.shape) * math.sqrt(s)
        return out

    def __getitem__(self, idx) -> ExactScalar:
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) != self.ndim or not all(isinstance(i, (int, np.integer)) for i in idx):
            return self._slice(idx)
        return ExactScalar.from_terms(
            (s, Fraction(int(slab[idx]), self.den)) for s, slab in zip(self.basis, self.num)
        ) if self.basis else ExactScalar(0)

    def _slice(self, idx) -> ExactMatrix:
        return ExactMatrix(self.basis, self.num[(slice(None),) + idx], self.den)

    def take_rows(self, rows) -> ExactMatrix:
        return ExactMatrix(self.basis, self.num[:, list(rows)], self.den)

    def entries(self) -> list:
        """Nested list of ExactScalar entries."""
        if self.ndim == 1:
            return [self[i] for i in range(self.shape[0])]
        return [[self[i, j] for j in range(self.shape[1])] for i in range(self.shape[0])]

    @property
    def T(self) -> ExactMatrix:
        if self.ndim != 2:
            raise ValueError("transpose needs a 2-D matrix")
        return ExactMatrix(self.basis, self.num.transpose(0, 2, 1).copy(), self.den)

    def copy(self) -> ExactMatrix:
        return ExactMatrix(self.basis, self.num.copy(), self.den)

    @staticmethod
    def concat(mats, axis: int = 0) -> ExactMatrix:
        """Stack matrices along ``axis`` after lifting them to a common basis."""
        mats = list(mats)
        basis = sorted({s for m in mats for s in m.basis})
        den = 1
        for m in mats:
            den = _lcm(den, m.den)
        parts = []
        for m in mats:
            out = np.zeros((len(basis),) + m.shape, dtype=object)
            f = den // m.den
            for s, slab in zip(m.basis, m.num):
                out[basis.index(s)] = slab * f
            parts.append(out)
        return ExactMatrix(basis, np.concatenate(parts, axis=axis + 1), den)

    # -- arithmetic --------------------------------------------------------

    def _aligned(self, other: ExactMatrix):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        basis = sorted(set(self.basis) | set(other.basis))
        den = _lcm(self.den, other.den)

        def lift(m: ExactMatrix) -> np.ndarray:
            out = np.zeros((len(basis),) + m.shape, dtype=object)
            f = den // m.den
            for s, slab in zip(m.basis, m.num):
                out[basis.index(s)] = slab * f
            return out

        return basis, lift(self), lift(other), den

    def __add__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        basis, a, b, den = self._aligned(other)
        return ExactMatrix(basis, a + b, den)

    def __sub__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        basis, a, b, den = self._aligned(other)
        return ExactMatrix(basis, a - b, den)

    def __neg__(self):
        return ExactMatrix(self.basis, -self.num, self.den)

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        return self.basis == other.basis and self.den == other.den and bool(np.all(self.num == other.num))

    __hash__ = None

    def _combine(self, other: ExactMatrix, op) -> ExactMatrix:
        """Bilinear product of the radicand slabs, re-reduced to squarefree form."""
        acc: dict[int, np.ndarray] = {}
        for s, a in zip(self.basis, self.num):
            for t, b in zip(other.basis, other.num):
                g = math.gcd(s, t)
                rad = (s // g) * (t // g)
                prod = op(a, b)
                if g != 1:
                    prod = prod * g
                acc[rad] = acc[rad] + prod if rad in acc else prod
        if not acc:
            shape = op(np.zeros(self.shape, dtype=object), np.zeros(other.shape, dtype=object)).shape
            return ExactMatrix.zeros(shape)
        basis = sorted(acc)
        return ExactMatrix(basis, np.stack([acc[s] for s in basis]), self.den * other.den)

    def scale(self, c) -> ExactMatrix:
        c = ExactScalar(c)
        terms = c.terms
        if not terms:
            return ExactMatrix.zeros(self.shape)
        den = 1
        for q in terms.values():
            den = _lcm(den, q.denominator)
        cm = ExactMatrix(
            list(terms),
            np.array([q.numerator * (den // q.denominator) for q in terms.values()], dtype=object).reshape(len(terms)),
            den,
        )
        return self._combine(cm, lambda a, b: a * b)

    def __mul__(self, other):
        if isinstance(other, ExactMatrix):
            if self.shape != other.shape:
                raise ValueError("elementwise product needs equal shapes")
            return self._combine(other, lambda a, b: a * b)
        if isinstance(other, (int, Fraction, ExactScalar)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            return self.scale(ExactScalar(1) / ExactScalar(other))
        return NotImplemented

    def __matmul__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self._combine(other, _objdot)

    def outer_scale(self, row_factors, col_factors) -> ExactMatrix:
        """Entry-wise ``M[x, y] * r[x] * c[y]`` with exact per-row/column factors."""
        r = ExactMatrix.from_entries(list(row_factors))
        c = ExactMatrix.from_entries(list(col_factors))
        outer = r._combine(c, np.multiply.outer)
        return self * outer

    def inner(self, other: ExactMatrix) -> ExactScalar:
        """Frobenius inner product ``sum_xy self[x,y] * other[x,y]``."""
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        terms = []
        for s, a in zip(self.basis, self.num):
            for t, b in zip(other.basis, other.num):
                total = int(np.sum(a * b)) if a.size else 0
                if total:
                    terms.append((s * t, Fraction(total, self.den * other.den)))
        return ExactScalar.from_terms(terms)

    def sum(self) -> ExactScalar:
        return ExactScalar.from_terms(
            (s, Fraction(int(np.sum(slab)), self.den)) for s, slab in zip(self.basis, self.num)
        )

    def trace(self) -> ExactScalar:
        return ExactScalar.from_terms(
            (s, Fraction(int(np.trace(slab)), self.den)) for s, slab in zip(self.basis, self.num)
        )

    def signed_permute(self, row_perm, row_sign, col_perm, col_sign) -> ExactMatrix:
        """``out[row_perm[x], col_perm[y]] = row_sign[x] * col_sign[y] * M[x, y]``."""
        rs = np.asarray(row_sign, dtype=object)
        cs = np.asarray(col_sign, dtype=object)
        out = np.empty_like(self.num)
        signed = self.num * rs[None, :, None] * cs[None, None, :]
        out[:, np.asarray(row_perm)[:, None], np.asarray(col_perm)[None, :]] = signed
        return ExactMatrix(self.basis, out, self.den)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape),
            "radicands": list(self.basis),
            "den": self.den,
            "num": [slab.tolist() for slab in self.num],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExactMatrix:
        shape = tuple(obj["shape"])
        num = np.zeros((len(obj["radicands"]),) + shape, dtype=object)
        for i, slab in enumerate(obj["num"]):
            num[i] = _obj(np.array(slab, dtype=object).reshape(shape))
        return cls(obj["radicands"], num, int(obj["den"]))

    def __repr__(self):
        return f"ExactMatrix(shape={self.shape}, radicands={self.basis}, den={self.den})"


def _objdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # int64 matmul is exact while every partial sum stays below 2**62
    if a.size and b.size:
        amax = max(abs(int(v)) for v in a.flat)
        bmax = max(abs(int(v)) for v in b.flat)
        if amax * bmax * max(a.shape[-1], 1) < 2**62:
            prod = a.astype(np.int64) @ b.astype(np.int64)
            return _obj(prod)
    return np.dot(a, b)
