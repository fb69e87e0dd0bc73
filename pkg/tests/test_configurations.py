from fractions import Fraction

import numpy as np
import pytest

from kgbounds.configurations import (CATALOG, CatalogError, PackingParseError, augment_edge_midpoints, catalog_table,
                                     diagonal_modification, generate, gram, parse_packing, rational_unit_vectors,
                                     refined_icosahedron, union)
from kgbounds.exact import ExactScalar, sqrt

TABLE_M = {
    "hexagon": 3, "icosahedron": 6, "cuboctahedron": 6, "dodecahedron": 10, "icosidodecahedron": 15,
    "24cell": 12, "600cell": 60, "120cell": 300, "D5": 20, "D6": 30, "E6": 36, "ETF-28-d7": 28, "D7": 42,
    "E7": 63, "E7+ETF-91": 91, "D8": 56, "E8": 120,
}
SMALL = ["hexagon", "icosahedron", "cuboctahedron", "dodecahedron", "icosidodecahedron", "24cell", "D5"]


def test_catalog_matches_table_sizes():
    rows = catalog_table()
    assert len(rows) == 17
    assert {n: m for n, _, m in rows} == TABLE_M


@pytest.mark.parametrize("alias,name", [("A2", "hexagon"), ("D4", "24cell"), ("A3", "cuboctahedron")])
def test_aliases(alias, name):
    assert generate(alias).m == generate(name).m


def test_unknown_name():
    with pytest.raises(CatalogError):
        generate("tesseract-9")


@pytest.mark.parametrize("name", list(TABLE_M))
def test_unit_diagonal_and_psd(name):
    c = generate(name)
    P = gram(c)
    assert P.values.shape == (c.m, c.m)
    assert np.allclose(np.diag(P.values), 1)
    assert np.linalg.eigvalsh(P.values).min() > -1e-10
    assert np.all(np.abs(P.values) <= 1 + 1e-12)
    # lines are distinct: no off-diagonal +-1
    off = np.abs(P.values - np.eye(c.m))
    assert off.max() < 1 - 1e-9


@pytest.mark.parametrize("name", SMALL)
def test_exact_diagonal(name):
    P = gram(generate(name))
    for x in range(P.m1):
        assert P.exact[x, x] == ExactScalar(1)


def test_hexagon_gram():
    P = gram(generate("hexagon")).exact
    h = Fraction(1, 2)
    assert [[P[x, y] for y in range(3)] for x in range(3)] == [[1, h, -h], [h, 1, h], [-h, h, 1]]


def test_icosahedron_off_diagonal():
    P = gram(generate("icosahedron")).exact
    r = sqrt(5) / 5
    for x in range(6):
        for y in range(6):
            if x != y:
                assert P[x, y] in (r, -r)


def test_d4_entries():
    P = gram(generate("D4")).exact
    vals = {P[x, y] for x in range(12) for y in range(12) if x != y}
    assert vals <= {ExactScalar(0), ExactScalar(Fraction(1, 2)), ExactScalar(Fraction(-1, 2))}


@pytest.mark.parametrize("name", ["hexagon", "cuboctahedron", "24cell", "D5", "E6", "E8"])
def test_kissing_bound(name):
    P = gram(generate(name))
    off = np.abs(P.values - np.eye(P.m1))
    assert off.max() <= 0.5 + 1e-12
    if P.exact is not None and P.m1 <= 40:
        for x in range(P.m1):
            for y in range(x + 1, P.m1):
                assert abs(P.exact[x, y]) <= Fraction(1, 2)


def test_cross_gram_600cell_compound():
    a = generate("600cell")
    b = union(a, generate("120cell"))
    P = gram(a, b)
    assert P.shape == (60, 360)
    Q = gram(b, a)
    assert np.allclose(P.values, Q.values.T)
    assert P.exact is not None and P.exact.T == Q.exact


def test_gram_dimension_mismatch():
    with pytest.raises(ValueError):
        gram(generate("hexagon"), generate("icosahedron"))


def test_diagonal_modification():
    P = gram(generate("hexagon"))
    A = diagonal_modification(P, Fraction(2, 3))
    assert A[0, 0] == Fraction(1, 3) and A[0, 1] == P.exact[0, 1]
    assert diagonal_modification(P, 0) == P.exact
    with pytest.raises(ValueError):
        diagonal_modification(gram(generate("hexagon"), generate("hexagon")).exact.take_rows([0, 1]), 1)


def test_parse_packing():
    c = parse_packing("1 0 0 1\n# comment\n0.7071 0.7071\n", 2, 3)
    assert c.m == 3
    assert np.allclose(np.linalg.norm(c.vectors, axis=1), 1)
    with pytest.raises(PackingParseError):
        parse_packing("1 0 0", 2, 3)
    with pytest.raises(PackingParseError) as err:
        parse_packing("1 0\n0 nan\n1 1", 2, 3)
    assert err.value.line == 2


def test_augment_edge_midpoints():
    sq = parse_packing("1 0 0 1", 2, 2)
    assert augment_edge_midpoints(sq, "all-pairs").m == 4
    assert augment_edge_midpoints(sq).m == 4
    ico = generate("icosahedron")
    assert augment_edge_midpoints(ico, "all-pairs").m == 21
    aug = augment_edge_midpoints(ico)
    assert aug.m == 21
    # the 15 added lines are the icosidodecahedron's
    G = np.abs(aug.vectors[6:] @ generate("icosidodecahedron").vectors.T)
    assert np.allclose(G.max(axis=1), 1)


def test_refined_icosahedron_counts():
    assert [refined_icosahedron(k).m for k in range(4)] == [6, 16, 46, 136]


def test_rational_unit_vectors_are_exact():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((5, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    R = rational_unit_vectors(V, 10**6)
    assert R.is_rational()
    for x in range(5):
        assert sum((R[x, j] * R[x, j] for j in range(3)), ExactScalar(0)) == ExactScalar(1)
    assert np.abs(R.to_float() - V).max() < 1e-5


def test_configuration_json_round_trip():
    for name in ["hexagon", "icosahedron", "24cell"]:
        c = generate(name)
        back = type(c).from_json(c.to_json())
        assert back.m == c.m and np.allclose(back.vectors, c.vectors)
        assert gram(back).exact == gram(c).exact
