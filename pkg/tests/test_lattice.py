"""Lattice bases, exact CVP with tie handling, Voronoi membership."""

import itertools
from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voronoi_forge import exact
from voronoi_forge.lattice import closest_points, in_voronoi, make_lattice

rationals = st.fractions(
    min_value=-3, max_value=3, max_denominator=8).map(Q)


def _brute_closest(L, x, radius=3):
    """All nearest lattice points by scanning a coefficient box."""
    best = None
    hits = []
    for t in itertools.product(range(-radius, radius + 1), repeat=L.n):
        p = exact.vecmat(exact.vec(map(Q, t)), L.basis)
        d = exact.norm2(exact.vsub(exact.vec(x), p))
        if best is None or d < best:
            best, hits = d, [p]
        elif d == best:
            hits.append(p)
    return set(hits)


def test_make_lattice_names():
    assert make_lattice("Zn(3)").n == 3
    assert make_lattice("z3").name == "Zn(3)"
    assert make_lattice("d4").n == 4
    assert make_lattice("e8").n == 8
    assert make_lattice("bw16").n == 16
    assert make_lattice("a2").n == 2
    with pytest.raises(ValueError):
        make_lattice("leech")


def test_volumes():
    assert make_lattice("Zn(3)").volume == 1
    assert make_lattice("d4").volume_sq == 4
    assert make_lattice("d4").volume == 2
    assert make_lattice("e8").volume == 1
    assert make_lattice("bw16").volume == Q(1, 16)
    a2 = make_lattice("a2")
    assert a2.volume_sq == 3
    assert a2.volume is None


def test_gram_even_norms():
    bw = make_lattice("bw16")
    G = bw.gram
    # half-integral inner products, even integral squared norms
    assert all(x.denominator in (1, 2) for row in G for x in row)
    assert all(G[i][i].denominator == 1 and G[i][i] % 2 == 0 for i in range(16))


def test_cvp_exact_tie_at_deep_hole():
    z2 = make_lattice("Zn(2)")
    ties = closest_points(z2, (Q(1, 2), Q(1, 2)))
    assert len(ties) == 4


def test_cvp_interior_point_unique():
    d4 = make_lattice("d4")
    pts = closest_points(d4, (Q(1, 10), Q(0), Q(0), Q(0)))
    assert len(pts) == 1
    assert next(iter(pts)).coords == (Q(0),) * 4


@given(st.lists(rationals, min_size=2, max_size=2))
@settings(max_examples=30, deadline=None)
def test_cvp_matches_brute_force_z2(x):
    z2 = make_lattice("Zn(2)")
    got = {p.coords for p in closest_points(z2, exact.vec(x))}
    assert got == {p for p in _brute_closest(z2, x)}


small_rationals = st.fractions(
    min_value=-2, max_value=2, max_denominator=8).map(Q)


@given(st.lists(small_rationals, min_size=2, max_size=2))
@settings(max_examples=20, deadline=None)
def test_cvp_matches_brute_force_a2(x):
    a2 = make_lattice("a2")
    # a2 is embedded in 3-space; lift coefficients to ambient points
    t = exact.vecmat(exact.vec(x), a2.basis)
    got = {p.coords for p in closest_points(a2, t)}
    assert got == _brute_closest(a2, t)


def test_in_voronoi():
    z3 = make_lattice("Zn(3)")
    assert in_voronoi(z3, (Q(1, 2), Q(1, 2), Q(1, 2)))  # boundary counts
    assert in_voronoi(z3, (Q(0), Q(0), Q(0)))
    assert not in_voronoi(z3, (Q(3, 4), Q(0), Q(0)))


def test_nearest_float_matches_exact_on_random_batch():
    d4 = make_lattice("d4")
    rng = np.random.default_rng(5)
    t = rng.random((64, 4))
    u = t @ d4._basis_f
    coeffs = d4.nearest_float(u)
    for row_u, row_c in zip(u, coeffs):
        x = exact.vec(Q(v).limit_denominator(10**6) for v in row_u)
        exact_pts = closest_points(d4, x)
        got = exact.vecmat(exact.vec(map(Q, map(int, row_c))), d4.basis)
        assert any(p.coords == got for p in exact_pts)
