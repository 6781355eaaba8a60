"""Exact rational linear algebra: unit and property tests."""

from fractions import Fraction as Q

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voronoi_forge import exact

rationals = st.fractions(
    min_value=-20, max_value=20, max_denominator=12).map(Q)


def _vec_st(n):
    return st.lists(rationals, min_size=n, max_size=n).map(exact.vec)


def _mat_st(n):
    return st.lists(_vec_st(n), min_size=n, max_size=n).map(tuple)


def test_vector_ops():
    x = exact.vec([1, 2, 3])
    y = exact.vec([Q(1, 2), -1, 0])
    assert exact.vadd(x, y) == (Q(3, 2), Q(1), Q(3))
    assert exact.vsub(x, y) == (Q(1, 2), Q(3), Q(3))
    assert exact.vscale(Q(2), y) == (Q(1), Q(-2), Q(0))
    assert exact.dot(x, y) == Q(-3, 2)
    assert exact.norm2(y) == Q(5, 4)


def test_matrix_ops():
    A = exact.mat([[1, 2], [3, 4]])
    I = exact.identity(2)
    assert exact.matmul(A, I) == A
    assert exact.transpose(A) == exact.mat([[1, 3], [2, 4]])
    assert exact.trace(A) == 5
    assert exact.det(A) == -2
    assert exact.matmul(A, exact.inverse(A)) == I
    x = exact.vec([1, 1])
    assert exact.matvec(A, x) == (Q(3), Q(7))
    assert exact.vecmat(x, A) == (Q(4), Q(6))
    assert exact.outer(x, x) == exact.mat([[1, 1], [1, 1]])


def test_solve_and_rank():
    A = exact.mat([[2, 0, 0], [0, 3, 0], [0, 0, Q(1, 2)]])
    b = exact.vec([4, 6, 1])
    assert exact.solve(A, b) == (Q(2), Q(2), Q(2))
    assert exact.rank(A) == 3
    assert exact.rank(exact.mat([[1, 2], [2, 4]])) == 1
    with pytest.raises(exact.NoSolution):
        exact.solve(exact.mat([[1, 1], [1, 1]]), exact.vec([0, 1]))


def test_affine_rank():
    pts = (exact.vec([0, 0]), exact.vec([1, 0]), exact.vec([2, 0]))
    assert exact.affine_rank(pts) == 1
    pts = pts + (exact.vec([0, 1]),)
    assert exact.affine_rank(pts) == 2


def test_row_space_basis():
    rows = (exact.vec([1, 2, 3]), exact.vec([2, 4, 6]), exact.vec([0, 1, 0]))
    B = exact.row_space_basis(rows)
    assert len(B) == 2
    assert exact.rank(B) == 2


def test_format_parse_roundtrip():
    for s in ("3", "-5/7", "0", "12/5"):
        assert exact.fmt_q(exact.parse_q(s)) == s
    assert exact.q_to_decimal(Q(1, 3), 5) == "0.33333"


@given(_mat_st(3), _mat_st(3))
@settings(max_examples=40, deadline=None)
def test_det_multiplicative(A, B):
    assert exact.det(exact.matmul(A, B)) == exact.det(A) * exact.det(B)


@given(_mat_st(3), _vec_st(3))
@settings(max_examples=40, deadline=None)
def test_solve_round_trip(A, x):
    if exact.det(A) == 0:
        return
    b = exact.matvec(A, x)
    assert exact.solve(A, b) == x


@given(_vec_st(4), _vec_st(4))
@settings(max_examples=40, deadline=None)
def test_outer_trace_is_dot(x, y):
    assert exact.trace(exact.outer(x, y)) == exact.dot(x, y)


@given(_mat_st(3))
@settings(max_examples=40, deadline=None)
def test_inverse_property(A):
    if exact.det(A) == 0:
        with pytest.raises(ValueError):
            exact.inverse(A)
        return
    assert exact.matmul(exact.inverse(A), A) == exact.identity(3)
