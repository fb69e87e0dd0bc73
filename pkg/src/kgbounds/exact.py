"""Exact arithmetic over Q-linear combinations of square roots.

An :class:`ExactScalar` is a finite sum ``sum_s q_s * sqrt(s)`` with ``s``
squarefree and ``q_s`` rational.  Square roots of distinct squarefree
integers are linearly independent over Q, so the canonical term map is a
unique representation and equality is plain dictionary equality.

:class:`RationalInterval` carries rigorous enclosures of the transcendental
constants (pi and its powers) needed by the closed-form bounds.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable

from sympy import factorint

__all__ = [
    "ExactScalar",
    "RationalInterval",
    "PiMonomial",
    "canonicalize",
    "to_float",
    "rationalize",
    "sqrt",
    "PI",
]


@lru_cache(maxsize=4096)
def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return ``(k, s)`` with ``n == k*k*s`` and ``s`` squarefree."""
    if n <= 0:
        raise ValueError(f"radicand must be positive, got {n}")
    k, s = 1, 1
    for p, e in factorint(n).items():
        k *= p ** (e // 2)
        if e % 2:
            s *= p
    return k, s


@lru_cache(maxsize=4096)
def _prime_factors(s: int) -> tuple[int, ...]:
    return tuple(sorted(factorint(s)))


def _as_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, Rational)):
        return Fraction(q)
    if isinstance(q, str):
        return Fraction(q)
    raise TypeError(f"cannot use {type(q).__name__} as an exact rational")


class ExactScalar:
    """Element of the multiquadratic field Q(sqrt(2), sqrt(3), ...)."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, value=0):
        if isinstance(value, ExactScalar):
            self._terms = value._terms
        else:
            q = _as_fraction(value)
            self._terms = {1: q} if q else {}
        self._hash = None

    @classmethod
    def _from_canonical(cls, terms: dict[int, Fraction]) -> ExactScalar:
        out = cls.__new__(cls)
        out._terms = terms
        out._hash = None
        return out

    @classmethod
    def from_terms(cls, raw: Iterable[tuple[int, object]]) -> ExactScalar:
        """Build from ``(radicand, coefficient)`` pairs, radicands arbitrary positive."""
        terms: dict[int, Fraction] = {}
        for radicand, coeff in raw:
            if not isinstance(radicand, int) or isinstance(radicand, bool):
                raise TypeError("radicands must be integers")
            k, s = squarefree_decompose(radicand)
            q = _as_fraction(coeff) * k
            terms[s] = terms.get(s, Fraction(0)) + q
        return cls._from_canonical({s: q for s, q in sorted(terms.items()) if q})

    @classmethod
    def sqrt_of(cls, n) -> ExactScalar:
        """sqrt(n) for a non-negative rational ``n``."""
        q = _as_fraction(n)
        if q < 0:
            raise ValueError("square root of a negative rational")
        if q == 0:
            return cls(0)
        # sqrt(a/b) = sqrt(a*b)/b
        return cls.from_terms([(q.numerator * q.denominator, Fraction(1, q.denominator))])

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    @property
    def radicands(self) -> tuple[int, ...]:
        return tuple(self._terms)

    def is_rational(self) -> bool:
        return all(s == 1 for s in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def rational_part(self) -> Fraction:
        return self._terms.get(1, Fraction(0))

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.rational_part()

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> ExactScalar | None:
        if isinstance(other, ExactScalar):
            return other
        if isinstance(other, (int, Fraction, Rational)) and not isinstance(other, bool):
            return ExactScalar(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self._terms)
        for s, q in o._terms.items():
            v = terms.get(s, 0) + q
            if v:
                terms[s] = v
            else:
                terms.pop(s, None)
        return ExactScalar._from_canonical(dict(sorted(terms.items())))

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar._from_canonical({s: -q for s, q in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self._terms or not o._terms:
            return ExactScalar(0)
        terms: dict[int, Fraction] = {}
        for s, q in self._terms.items():
            for t, r in o._terms.items():
                g = math.gcd(s, t)
                rad = (s // g) * (t // g)
                terms[rad] = terms.get(rad, 0) + q * r * g
        return ExactScalar._from_canonical({s: q for s, q in sorted(terms.items()) if q})

    __rmul__ = __mul__

    def conjugate(self, p: int) -> ExactScalar:
        """Apply the field automorphism sqrt(p) -> -sqrt(p) for a prime ``p``."""
        return ExactScalar._from_canonical(
            {s: (-q if s % p == 0 else q) for s, q in self._terms.items()}
        )

    def inverse(self) -> ExactScalar:
        if not self._terms:
            raise ZeroDivisionError("inverse of zero")
        num = ExactScalar(1)
        x = self
        while not x.is_rational():
            p = next(p for s in x._terms if s != 1 for p in _prime_factors(s))
            c = x.conjugate(p)
            num = num * c
            x = x * c
        return num * ExactScalar(1 / x.rational_part())

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_rational():
            r = o.rational_part()
            if not r:
                raise ZeroDivisionError("division by zero")
            return ExactScalar._from_canonical({s: q / r for s, q in self._terms.items()})
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out, base = ExactScalar(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sqrt(self) -> ExactScalar:
        """Square root when it lies in the field (rational or denestable two-term values)."""
        s = self.sign()
        if s < 0:
            raise ValueError("square root of a negative value")
        if s == 0:
            return ExactScalar(0)
        if self.is_rational():
            return ExactScalar.sqrt_of(self.rational_part())
        if len(self._terms) == 2 and 1 in self._terms:
            (_, p), (rad, q) = sorted(self._terms.items())
            disc = p * p - q * q * rad
            if disc >= 0:
                r = ExactScalar.sqrt_of(disc)
                if r.is_rational():
                    r = r.rational_part()
                    root = ExactScalar.sqrt_of((p + r) / 2)
                    tail = ExactScalar.sqrt_of((p - r) / 2)
                    root = root + tail if q > 0 else root - tail
                    if root * root == self:
                        return root
        raise ValueError(f"sqrt({self}) is not expressible without nested radicals")

    # -- comparison -------------------------------------------------------

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational ``(lo, hi)`` with ``lo <= self <= hi``; width shrinks like 2**-bits."""
        if not self._terms:
            return Fraction(0), Fraction(0)
        lcm = 1
        for q in self._terms.values():
            lcm = lcm * q.denominator // math.gcd(lcm, q.denominator)
        scale = 1 << bits
        lo = hi = 0
        for s, q in self._terms.items():
            n = q.numerator * (lcm // q.denominator)
            if s == 1:
                lo += n * scale
                hi += n * scale
                continue
            r = math.isqrt(s << (2 * bits))  # r <= sqrt(s)*2^bits < r+1
            if n > 0:
                lo += n * r
                hi += n * (r + 1)
            else:
                lo += n * (r + 1)
                hi += n * r
        den = lcm * scale
        return Fraction(lo, den), Fraction(hi, den)

    def sign(self) -> int:
        if not self._terms:
            return 0
        if len(self._terms) == 1:
            (q,) = self._terms.values()
            return 1 if q > 0 else -1
        bits = 64
        while True:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, float):
                return NotImplemented
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.rational_part())
            else:
                self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def _cmp(self, other) -> int | None:
        o = self._coerce(other)
        if o is None:
            return None
        return (self - o).sign()

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self._terms)

    def __float__(self):
        return to_float(self)

    # -- formatting / serialization --------------------------------------

    def __repr__(self):
        return f"ExactScalar({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for s, q in self._terms.items():
            if s == 1:
                parts.append(str(q))
            elif q == 1:
                parts.append(f"sqrt({s})")
            elif q == -1:
                parts.append(f"-sqrt({s})")
            else:
                parts.append(f"{q}*sqrt({s})")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {
            "radicands": list(self._terms),
            "coeffs": [[q.numerator, q.denominator] for q in self._terms.values()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExactScalar:
        rads, coeffs = obj["radicands"], obj["coeffs"]
        if len(rads) != len(coeffs):
            raise ValueError("radicands and coeffs differ in length")
        return cls.from_terms((int(s), Fraction(int(n), int(d))) for s, (n, d) in zip(rads, coeffs))


def canonicalize(raw: Iterable[tuple[int, object]]) -> ExactScalar:
    return ExactScalar.from_terms(raw)


def sqrt(n) -> ExactScalar:
    if isinstance(n, ExactScalar):
        return n.sqrt()
    return ExactScalar.sqrt_of(n)


def to_float(x) -> float:
    """Nearest float to an exact value (error below one ulp)."""
    if not isinstance(x, ExactScalar):
        return float(x)
    if x.is_rational():
        return float(x.rational_part())
    # both endpoints rounding to the same double pins the correctly rounded value;
    # irrational values never sit on a rounding boundary, so this terminates
    bits = 80
    while True:
        lo, hi = x.enclosure(bits)
        flo = float(lo)
        if flo == float(hi):
            return flo
        bits *= 2


def rationalize(x: float, max_denominator: int) -> Fraction:
    """Closest rational to ``x`` with denominator at most ``max_denominator``."""
    if max_denominator < 1:
        raise ValueError("max_denominator must be >= 1")
    if not math.isfinite(x):
        raise ValueError(f"cannot rationalize non-finite value {x}")
    return Fraction(x).limit_denominator(max_denominator)


# pi to 66 significant digits; the sandwich below has width 1e-64
_PI_DIGITS = "3141592653589793238462643383279502884197169399375105820974944592307"


class RationalInterval:
    """Closed interval ``[lo, hi]`` with rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = _as_fraction(lo)
        hi = lo if hi is None else _as_fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo, self.hi = lo, hi

    @classmethod
    def _wrap(cls, other):
        if isinstance(other, RationalInterval):
            return other
        return cls(other)

    def __add__(self, other):
        o = self._wrap(other)
        return RationalInterval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        o = self._wrap(other)
        c = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return RationalInterval(min(c), max(c))

    __rmul__ = __mul__

    def reciprocal(self) -> RationalInterval:
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return RationalInterval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * self._wrap(other).reciprocal()

    def __rtruediv__(self, other):
        return self._wrap(other) * self.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return (self ** (-k)).reciprocal()
        out = RationalInterval(1)
        for _ in range(k):
            out = out * self
        return out

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        if isinstance(x, float):
            return float(self.lo) <= x <= float(self.hi)
        return self.lo <= _as_fraction(x) <= self.hi

    def __float__(self):
        return float(self.mid)

    def __lt__(self, other):
        """Certainly less: every point of self is below every point of other."""
        return self.hi < self._wrap(other).lo

    def __gt__(self, other):
        return self.lo > self._wrap(other).hi

    def __repr__(self):
        return f"RationalInterval({float(self.lo)!r}, {float(self.hi)!r})"


def _pi_interval() -> RationalInterval:
    scale = 10 ** (len(_PI_DIGITS) - 1)
    n = int(_PI_DIGITS)
    return RationalInterval(Fraction(n, scale), Fraction(n + 1, scale))


PI = _pi_interval()


class PiMonomial:
    """Exact closed form ``coeff * pi**power``."""

    __slots__ = ("coeff", "power")

    def __init__(self, coeff, power: int = 0):
        self.coeff = _as_fraction(coeff)
        self.power = int(power)

    def __mul__(self, other):
        if isinstance(other, PiMonomial):
            return PiMonomial(self.coeff * other.coeff, self.power + other.power)
        return PiMonomial(self.coeff * _as_fraction(other), self.power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PiMonomial):
            return PiMonomial(self.coeff / other.coeff, self.power - other.power)
        return PiMonomial(self.coeff / _as_fraction(other), self.power)

    def __eq__(self, other):
        if not isinstance(other, PiMonomial):
            return NotImplemented
        return (self.coeff, self.power) == (other.coeff, other.power)

    def __hash__(self):
        return hash((self.coeff, self.power))

    def enclose(self) -> RationalInterval:
        return self.coeff * PI**self.power if self.power else RationalInterval(self.coeff)

    def __float__(self):
        return float(self.coeff) * math.pi**self.power

    def __repr__(self):
        if self.power == 0:
            return f"{self.coeff}"
        p = "pi" if abs(self.power) == 1 else f"pi^{abs(self.power)}"
        return f"{self.coeff}*{p}" if self.power > 0 else f"{self.coeff}/{p}"
