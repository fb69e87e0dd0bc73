import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgbounds.oracle import alternate_once, heuristic_sdp, lmo
from kgbounds.polytope import SignStrategy, UnitStrategy, vertex_value


def brute(M):
    m1 = M.shape[0]
    return max(np.abs(np.array(a) @ M).sum() for a in itertools.product([-1, 1], repeat=m1))


def test_chsh_value():
    r = heuristic_sdp(np.array([[1.0, 1], [1, -1]]), 1, 10)
    assert r.value == 2.0
    r2 = heuristic_sdp(np.array([[1.0, 1], [1, -1]]), 2, 50)
    assert abs(r2.value - 2 * np.sqrt(2)) < 1e-9


@given(st.integers(0, 10**6))
def test_heuristic_never_exceeds_exact(seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-3, 4, size=(6, 7)).astype(float)
    r = heuristic_sdp(M, 1, 20, seed)
    assert r.value <= brute(M) + 1e-9
    assert r.strategy.a[0] == 1
    assert r.value == vertex_value(M, r.strategy)


def test_deterministic_across_workers():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((15, 20))
    r1 = heuristic_sdp(M, 1, 1000, 7, workers=1)
    r4 = heuristic_sdp(M, 1, 1000, 7, workers=4)
    assert r1.value == r4.value
    assert np.array_equal(r1.strategy.a, r4.strategy.a)


def test_rank_n_strategy_is_unit():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((5, 6))
    r = heuristic_sdp(M, 3, 100, 0)
    assert isinstance(r.strategy, UnitStrategy)
    assert np.allclose(np.linalg.norm(r.strategy.a, axis=1), 1)
    # rank 3 can only do at least as well as the sign vertices
    assert r.value >= heuristic_sdp(M, 1, 100, 0).value - 1e-9


def test_alternate_once_zero_conventions():
    b, a, v = alternate_once(np.zeros((2, 2)), 1, [1, -1])
    assert b.tolist() == [1, 1] and a.tolist() == [1, 1] and v == 0
    b, a, v = alternate_once(np.zeros((2, 2)), 2, np.array([[1.0, 0], [0, 1]]))
    assert np.allclose(b, [[1, 0], [1, 0]])


def test_lmo_minimises_inner_product():
    rng = np.random.default_rng(4)
    G = rng.standard_normal((5, 5))
    r = lmo(G, 1, 200, 0)
    best = min(np.array(a) @ G @ np.where(np.array(a) @ G < 0, 1, -1) for a in itertools.product([-1, 1], repeat=5))
    assert abs(np.sum(G * r.matrix()) - best) < 1e-9
    zero = lmo(np.zeros((3, 4)), 1, 10, 0)
    assert zero.value == 0 and isinstance(zero.strategy, SignStrategy)


def test_restart_validation():
    with pytest.raises(ValueError):
        heuristic_sdp(np.eye(2), 1, 0)
