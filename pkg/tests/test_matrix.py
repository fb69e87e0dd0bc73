from fractions import Fraction

import numpy as np
from hypothesis import given, strategies as st

from kgbounds.exact import ExactScalar, canonicalize, sqrt
from kgbounds.matrix import ExactMatrix

entry = st.lists(st.tuples(st.sampled_from([1, 2, 5]), st.fractions(-5, 5, max_denominator=6)), max_size=2).map(canonicalize)


def mats(r, c):
    return st.lists(st.lists(entry, min_size=c, max_size=c), min_size=r, max_size=r).map(ExactMatrix.from_entries)


@given(mats(3, 4), mats(3, 4))
def test_addition_and_inner_match_floats(A, B):
    assert np.allclose((A + B).to_float(), A.to_float() + B.to_float())
    assert np.allclose((A - B).to_float(), A.to_float() - B.to_float())
    assert abs(float(A.inner(B)) - np.sum(A.to_float() * B.to_float())) < 1e-9


@given(mats(2, 3), mats(3, 2))
def test_matmul_matches_floats(A, B):
    assert np.allclose((A @ B).to_float(), A.to_float() @ B.to_float())


@given(mats(3, 3))
def test_json_round_trip_and_transpose(A):
    assert ExactMatrix.from_json(A.to_json()) == A
    assert A.T.T == A
    assert A.T[0, 1] == A[1, 0]


@given(mats(3, 3), st.permutations(range(3)), st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=3))
def test_signed_permute(A, perm, signs):
    out = A.signed_permute(perm, signs, perm, signs)
    for x in range(3):
        for y in range(3):
            assert out[perm[x], perm[y]] == A[x, y] * (signs[x] * signs[y])


def test_scalar_ops_and_mixed_bases():
    A = ExactMatrix.from_entries([[1, sqrt(2)], [sqrt(5), Fraction(1, 3)]])
    B = ExactMatrix.from_entries([[sqrt(10), 0], [0, 1]])
    C = A + B
    assert C[0, 0] == 1 + sqrt(10)
    assert (A.scale(sqrt(2)))[0, 1] == ExactScalar(2)
    assert A.trace() == ExactScalar(Fraction(4, 3))
    assert A.sum() == Fraction(4, 3) + sqrt(2) + sqrt(5)
    Z = A - A
    assert Z == ExactMatrix.zeros((2, 2))
    assert ExactMatrix.zeros((2, 2)).scale(3) == ExactMatrix.zeros((2, 2))


def test_integer_form_and_concat():
    A = ExactMatrix.from_entries([[Fraction(1, 2), 1], [0, Fraction(-3, 4)]])
    num, den = A.integer_form()
    assert den == 4 and num.tolist() == [[2, 4], [0, -3]]
    B = ExactMatrix.from_entries([[sqrt(3), 0]])
    C = ExactMatrix.concat([A, B], axis=0)
    assert C.shape == (3, 2) and C[2, 0] == sqrt(3) and C[0, 0] == Fraction(1, 2)
