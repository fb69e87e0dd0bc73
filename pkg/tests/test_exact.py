import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kgbounds.exact import PI, ExactScalar, PiMonomial, RationalInterval, canonicalize, rationalize, sqrt, to_float

RADICANDS = [1, 2, 3, 5, 6, 10, 15]
fractions = st.fractions(min_value=-20, max_value=20, max_denominator=30)
scalars = st.lists(st.tuples(st.sampled_from(RADICANDS), fractions), max_size=4).map(canonicalize)


def test_canonicalize_reduces_radicands():
    assert canonicalize([(12, 1)]).terms == {3: 2}
    assert canonicalize([(5, Fraction(1, 2)), (5, Fraction(1, 2))]).terms == {5: 1}
    x = canonicalize([(1, 1), (5, 3)]) / 6
    assert abs(float(x) - 1.2847) < 5e-5


@pytest.mark.parametrize("bad", [0, -3])
def test_canonicalize_rejects_nonpositive_radicand(bad):
    with pytest.raises(ValueError):
        canonicalize([(bad, 1)])


def test_to_float_examples():
    assert to_float(ExactScalar(1)) == 1.0
    assert to_float(sqrt(5)) == math.sqrt(5)
    assert abs(to_float((7 + 3 * sqrt(5)) / 10) - 1.3708) < 1e-4


def test_rationalize_examples():
    assert rationalize(0.5, 10) == Fraction(1, 2)
    assert rationalize(0.333334, 100) == Fraction(1, 3)
    with pytest.raises(ValueError):
        rationalize(float("nan"), 10)


def test_rationalize_pi_matches_exhaustive_search():
    # independent oracle: best p/q over every q <= 113
    best = min((Fraction(round(math.pi * q), q) for q in range(1, 114)), key=lambda f: abs(f - Fraction(math.pi)))
    assert best == Fraction(355, 113)
    assert rationalize(math.pi, 113) == best


@given(st.integers(-10**6, 10**6), st.integers(1, 2000), st.integers(1, 5000))
def test_rationalize_recovers_small_fractions(p, q, cap):
    x = Fraction(p, q)
    if x.denominator <= cap:
        assert rationalize(p / q, cap) == x


@given(scalars, scalars, scalars)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a and a * b == b * a
    assert a - a == ExactScalar(0)


@given(st.lists(st.tuples(st.integers(1, 500), fractions), max_size=5))
def test_canonicalize_idempotent(raw):
    x = canonicalize(raw)
    assert canonicalize(x.terms.items()) == x


@given(scalars, scalars)
def test_float_bridge_multiplicative(x, y):
    assert abs(to_float(x * y) - to_float(x) * to_float(y)) <= 1e-12 * (1 + abs(to_float(x * y)))
    assert abs(to_float(x + y) - (to_float(x) + to_float(y))) <= 4e-15 * (1 + abs(to_float(x)) + abs(to_float(y)))


@given(scalars, scalars)
def test_sign_and_order_agree_with_floats(x, y):
    d = float(x) - float(y)
    if abs(d) > 1e-9:
        assert (x > y) == (d > 0)
    assert (x - y).sign() == (0 if x == y else (1 if x > y else -1))


@given(scalars.filter(lambda s: not s.is_zero()))
def test_inverse(x):
    assert x * x.inverse() == ExactScalar(1)


def test_sqrt_denests_known_values():
    assert sqrt(ExactScalar(12)) == 2 * sqrt(3)
    assert sqrt(6 + 2 * sqrt(5)) == 1 + sqrt(5)
    assert (sqrt(2) * sqrt(10)) == 2 * sqrt(5)


@given(scalars)
def test_json_round_trip(x):
    assert ExactScalar.from_json(x.to_json()) == x


def test_pi_enclosure_and_monomials():
    assert PI.lo < Fraction(math.pi) < PI.hi or float(PI.lo) <= math.pi <= float(PI.hi)
    assert PI.width < Fraction(1, 10**60)
    m = PiMonomial(Fraction(32, 3), -2)
    enc = m.enclose()
    assert float(enc.lo) <= 32 / (3 * math.pi**2) <= float(enc.hi)
    assert enc.width < Fraction(1, 10**50)


def test_interval_arithmetic():
    a = RationalInterval(1, 2)
    b = RationalInterval(-1, 3)
    assert (a * b).lo == -2 and (a * b).hi == 6
    assert (a - a).lo == -1
    with pytest.raises(ZeroDivisionError):
        a / b
    with pytest.raises(ValueError):
        RationalInterval(2, 1)
