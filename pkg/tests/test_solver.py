import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgbounds.configurations import generate, gram
from kgbounds.exact import ExactScalar, sqrt
from kgbounds.matrix import ExactMatrix
from kgbounds.polytope import SignStrategy
from kgbounds.solver import (BRUTE_FORCE_MAX, ResourceError, exact_objective, read_instance, sdp1_branch_and_bound,
                             sdp1_bruteforce, sdp1_rectangular)


def enumerate_exact(M: ExactMatrix):
    """Reference value: every sign vector, evaluated with ExactScalar."""
    m1, m2 = M.shape
    best = None
    for a in itertools.product([-1, 1], repeat=m1 - 1):
        v = exact_objective(M, (1,) + a)
        if best is None or v > best:
            best = v
    return best


@given(st.integers(0, 10**6), st.integers(2, 9), st.integers(1, 12))
def test_bnb_matches_enumeration_integer(seed, m1, m2):
    rng = np.random.default_rng(seed)
    M = rng.integers(-4, 5, size=(m1, m2))
    ref = max(np.abs(np.array(a) @ M).sum() for a in itertools.product([-1, 1], repeat=m1))
    assert sdp1_branch_and_bound(M, restarts=5).value == ref
    assert sdp1_bruteforce(M).value == ref


@given(st.integers(0, 10**6))
def test_bnb_matches_enumeration_radical(seed):
    rng = np.random.default_rng(seed)
    rad = rng.integers(-2, 3, size=(6, 5))
    rat = rng.integers(-3, 4, size=(6, 5))
    M = ExactMatrix.from_int(rat) + ExactMatrix.from_int(rad).scale(sqrt(5))
    ref = enumerate_exact(M)
    res = sdp1_branch_and_bound(M, restarts=5)
    assert res.value == ref
    assert exact_objective(M, res.strategy.a) == ref


def test_rational_values_are_fractions():
    M = ExactMatrix.from_entries([[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 3), Fraction(1, 2)]])
    assert sdp1_branch_and_bound(M).value == Fraction(5, 3)


@pytest.mark.parametrize("name,value", [
    ("hexagon", 4), ("cuboctahedron", 10), ("24cell", 28), ("D5", 60), ("icosahedron", 6 + 2 * sqrt(5)),
])
def test_gram_values(name, value):
    P = gram(generate(name)).exact
    res = sdp1_branch_and_bound(P)
    assert res.optimal and res.value == value


def test_budget_exceeded_returns_incumbent():
    rng = np.random.default_rng(1)
    M = rng.integers(-9, 10, size=(22, 22))
    res = sdp1_branch_and_bound(M, node_budget=50, restarts=10)
    assert res.proof_flag == "budget-exceeded"
    assert res.value == exact_objective(M, res.strategy.a)
    assert res.value <= sdp1_branch_and_bound(M, restarts=10).value


def test_bruteforce_size_guard():
    with pytest.raises(ResourceError):
        sdp1_bruteforce(np.ones((BRUTE_FORCE_MAX + 1, 2), dtype=np.int64))


def test_rectangular_transposes():
    rng = np.random.default_rng(2)
    M = rng.integers(-3, 4, size=(14, 5))
    res = sdp1_rectangular(M)
    assert res.meta.get("transposed")
    assert res.value == sdp1_branch_and_bound(M.T).value
    assert len(res.strategy.a) == 14
    s = SignStrategy(res.strategy.a, res.strategy.b)
    assert int(s.a @ M @ s.b) == res.value


def test_warm_start_does_not_change_value():
    rng = np.random.default_rng(3)
    M = rng.integers(-3, 4, size=(10, 10))
    a = np.ones(10, dtype=np.int8)
    ws = SignStrategy.from_a(M, a)
    assert sdp1_branch_and_bound(M, warm_start=ws).value == sdp1_branch_and_bound(M).value


def test_read_instance_formats(tmp_path):
    assert read_instance("[[1, 1], [1, -1]]") == ExactMatrix.from_int([[1, 1], [1, -1]])
    assert read_instance("2 2\n1 1\n1 -1\n") == ExactMatrix.from_int([[1, 1], [1, -1]])
    p = tmp_path / "m.json"
    M = ExactMatrix.from_entries([[1, sqrt(2)], [0, 1]])
    import json

    p.write_text(json.dumps(M.to_json()))
    assert read_instance(str(p)) == M
    with pytest.raises(ValueError):
        read_instance("2 2\n1 1 1\n")


def test_result_json():
    res = sdp1_branch_and_bound(gram(generate("icosahedron")).exact)
    obj = res.to_json()
    assert ExactScalar.from_json(obj["value"]) == 6 + 2 * sqrt(5)
    assert obj["proof_flag"] == "optimal"
