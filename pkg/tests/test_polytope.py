import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgbounds.configurations import generate, gram
from kgbounds.matrix import ExactMatrix
from kgbounds.polytope import (GroupTooLarge, SignedPermutationGroup, SignStrategy, UnitStrategy, group_for,
                               invariant_basis, symmetrize, vertex_value)

signs = st.lists(st.sampled_from([-1, 1]), min_size=4, max_size=4)


def test_sign_strategy_validation():
    with pytest.raises(ValueError):
        SignStrategy([1, 0], [1, 1])
    s = SignStrategy([1, -1], [1, 1, -1])
    assert s.matrix().tolist() == [[1, 1, -1], [-1, -1, 1]]


def test_unit_strategy_validation():
    with pytest.raises(ValueError):
        UnitStrategy(np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]]))
    u = UnitStrategy(np.array([[1.0, 0.0]]), np.array([[0.6, 0.8]]))
    assert u.n == 2 and np.allclose(u.matrix(), [[0.6]])


@given(signs, signs, st.lists(st.integers(-9, 9), min_size=16, max_size=16))
def test_vertex_value_is_bilinear_form(a, b, entries):
    M = np.array(entries).reshape(4, 4)
    s = SignStrategy(a, b)
    assert vertex_value(M, s) == sum(M[x, y] * a[x] * b[y] for x in range(4) for y in range(4))
    assert vertex_value(ExactMatrix.from_int(M), s) == vertex_value(M, s)


def test_vertex_value_shape_mismatch():
    with pytest.raises(ValueError):
        vertex_value(np.zeros((2, 3)), SignStrategy([1, 1, 1], [1, 1]))


def test_hexagon_rotation_group():
    G = SignedPermutationGroup.from_json({"generators": [[2, 3, -1]]})
    assert G.order() == 6
    P = gram(generate("hexagon")).exact
    assert G.is_invariant(P)


def test_group_too_large():
    gens = [list(range(2, 11)) + [1], [2, 1] + list(range(3, 11)), [-1] + list(range(2, 11))]
    G = SignedPermutationGroup.from_json({"generators": gens})
    with pytest.raises(GroupTooLarge):
        G.closure(cap=1000)


def test_bad_generator():
    with pytest.raises(ValueError):
        SignedPermutationGroup(3, 3, [([1, 1, 2], [1, 2, 3])])


def test_group_json_round_trip():
    G = group_for(generate("hexagon"), P=gram(generate("hexagon")))
    H = SignedPermutationGroup.from_json(G.to_json())
    assert H.order() == G.order()


@pytest.mark.parametrize("name,order", [("hexagon", 6), ("cuboctahedron", 48), ("icosahedron", 120), ("24cell", 1152)])
def test_catalog_group_orders(name, order):
    c = generate(name)
    G = group_for(c, P=gram(c))
    assert G.order() == order


@pytest.mark.parametrize("name,dim", [("hexagon", 2), ("cuboctahedron", 2), ("icosahedron", 2), ("24cell", 2),
                                      ("D5", 2), ("dodecahedron", 3), ("E7+ETF-91", 13)])
def test_invariant_dimension_and_fixed_point(name, dim):
    c = generate(name)
    P = gram(c)
    G = group_for(c, P=P)
    B = invariant_basis(G)
    assert B.dim == dim
    assert symmetrize(P.exact, G, B) == P.exact


def test_orbit_basis_is_orthonormal_and_lift_inverts_coords():
    c = generate("cuboctahedron")
    G = group_for(c, P=gram(c))
    B = invariant_basis(G)
    E = np.array([B.lift(np.eye(B.dim)[j]).ravel() for j in range(B.dim)])
    assert np.allclose(E @ E.T, np.eye(B.dim))
    rng = np.random.default_rng(3)
    z = rng.standard_normal(B.dim)
    assert np.allclose(B.coords(B.lift(z)), z)


def test_symmetrize_is_group_average():
    c = generate("hexagon")
    G = group_for(c, P=gram(c))
    rng = np.random.default_rng(1)
    M = rng.standard_normal((3, 3))
    avg = sum(G.act(g, M) for g in G.closure()) / G.order()
    assert np.allclose(symmetrize(M, G), avg)
    S = symmetrize(M, G)
    assert G.is_invariant(S)
    assert np.allclose(symmetrize(S, G), S)


@given(st.lists(st.integers(-3, 3), min_size=9, max_size=9))
def test_symmetrize_preserves_invariant_inner_products(entries):
    # <sym(M), P> = <M, P> for invariant P
    c = generate("hexagon")
    P = gram(c)
    G = group_for(c, P=P)
    M = np.array(entries, dtype=float).reshape(3, 3)
    assert abs(np.sum(symmetrize(M, G) * P.values) - np.sum(M * P.values)) < 1e-12


def test_group_maps_vertices_to_vertices():
    c = generate("cuboctahedron")
    G = group_for(c, P=gram(c))
    for a in itertools.islice(itertools.product([-1, 1], repeat=6), 10):
        V = SignStrategy(a, a[::-1]).matrix()
        for g in G.closure()[:20]:
            W = G.act(g, V)
            assert np.all(np.abs(W) == 1) and np.linalg.matrix_rank(W) == 1
