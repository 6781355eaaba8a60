"""Relevant vectors: midpoint-tie construction vs. brute force and theory."""

from fractions import Fraction as Q

from voronoi_forge import exact
from voronoi_forge.faces import cached_relevant_vectors
from voronoi_forge.lattice import closest_points, make_lattice
from voronoi_forge.relvec import brute_force_relevant_vectors, packing_kissing


def test_zn_counts(z2, z3):
    # the cube has one relevant vector per facet: 2n of them, norm 1
    for L in (z2, z3):
        R = cached_relevant_vectors(L)
        assert len(R.vectors) == 2 * L.n
        assert all(v.norm2 == 1 for v in R.vectors)


def test_d4_counts(d4):
    R = cached_relevant_vectors(d4)
    assert len(R.vectors) == 24
    assert all(v.norm2 == 2 for v in R.vectors)


def test_a2_counts():
    R = cached_relevant_vectors(make_lattice("a2"))
    assert len(R.vectors) == 6  # hexagonal cell
    assert all(v.norm2 == 2 for v in R.vectors)


def test_e8_counts():
    # for E8 only the 240 roots are relevant (all norm-4 midpoints tie)
    R = cached_relevant_vectors(make_lattice("e8"))
    assert len(R.vectors) == 240
    assert all(v.norm2 == 2 for v in R.vectors)


def test_matches_brute_force_small(z2, d4):
    for L in (z2, d4):
        got = {v.coords for v in cached_relevant_vectors(L).vectors}
        assert got == brute_force_relevant_vectors(L)


def test_negation_closure(d4):
    got = {v.coords for v in cached_relevant_vectors(d4).vectors}
    assert got == {exact.vscale(Q(-1), v) for v in got}


def test_midpoint_tie_property(d4):
    # each relevant vector's midpoint ties exactly {0, c}
    zero = (Q(0),) * 4
    for v in cached_relevant_vectors(d4).vectors:
        mid = exact.vscale(Q(1, 2), v.coords)
        ties = {p.coords for p in closest_points(d4, mid)}
        assert ties == {zero, v.coords}


def test_packing_kissing(d4, z3):
    p2, kiss = packing_kissing(d4, cached_relevant_vectors(d4))
    assert (p2, kiss) == (Q(1, 2), 24)
    p2, kiss = packing_kissing(z3, cached_relevant_vectors(z3))
    assert (p2, kiss) == (Q(1, 4), 6)
