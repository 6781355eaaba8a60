"""Face hierarchies, classification, geometry; BW16 facet machinery lives in
the acceptance suite."""

from fractions import Fraction as Q

import numpy as np
import pytest

from voronoi_forge import exact
from voronoi_forge import faces as fc
from voronoi_forge import group as grp
from voronoi_forge.lattice import make_lattice


@pytest.fixture(scope="module")
def cube(z3):
    return fc.build_hierarchy(z3)


@pytest.fixture(scope="module")
def cell24(d4):
    return fc.build_hierarchy(d4)


def test_cube_face_counts(cube):
    got = {d: len(fs) for d, fs in cube.faces_by_dim.items()}
    assert got == {0: 8, 1: 12, 2: 6, 3: 1}


def test_24cell_face_counts(cell24):
    got = {d: len(fs) for d, fs in cell24.faces_by_dim.items()}
    assert got == {0: 24, 1: 96, 2: 96, 3: 24, 4: 1}


def test_square_face_counts(z2):
    h = fc.build_hierarchy(z2)
    got = {d: len(fs) for d, fs in h.faces_by_dim.items()}
    assert got == {0: 4, 1: 4, 2: 1}


def test_vertices_verify(cube, z3):
    for F in cube.faces_by_dim[0]:
        (v,) = F.vertices
        assert fc.verify_vertex(z3, v)
    assert not fc.verify_vertex(z3, (Q(1, 4), Q(0), Q(0)))


def test_children_are_subsets_with_correct_rank(cell24):
    for d in (4, 3, 2, 1):
        for F in cell24.faces_by_dim[d]:
            for c in cell24.children_of[F.key()]:
                assert c.vertices < F.vertices
                assert exact.affine_rank(tuple(c.vertices)) == d - 1


def test_normals_tight_on_all_vertices(cube):
    for d, fs in cube.faces_by_dim.items():
        for F in fs:
            for r in F.normals:
                assert all(fc.is_tight(v, r) for v in F.vertices)


def test_cube_classification_single_classes(cube, z3):
    gens = fc.zn_generators(z3)
    vecs = set()
    for fs in cube.faces_by_dim.values():
        for F in fs:
            vecs |= F.vertices | F.normals
    ctx = fc.small_group_context(z3, gens, vecs)
    for d in (0, 1, 2):
        classes = fc.classify_faces(cube.faces_by_dim[d], [ctx])
        assert len(classes) == 1
        assert classes[0].members_constructed == len(cube.faces_by_dim[d])


def test_classification_with_subgroup_chain(cube, z3):
    # a strict subgroup first (rotations of one axis), then the full group
    gens_full = fc.zn_generators(z3)
    rot = grp.group_element(z3, exact.mat([[0, -1, 0], [1, 0, 0], [0, 0, 1]]))
    vecs = set()
    for fs in cube.faces_by_dim.values():
        for F in fs:
            vecs |= F.vertices | F.normals
    sub = fc.small_group_context(z3, [rot], vecs)
    full = fc.small_group_context(z3, gens_full, vecs)
    classes = fc.classify_faces(cube.faces_by_dim[2], [sub, full])
    assert len(classes) == 1
    assert classes[0].members_constructed == 6
    # the subgroup alone cannot fuse the z-facets with the x/y ones
    classes_sub = fc.classify_faces(cube.faces_by_dim[2], [sub])
    assert len(classes_sub) == 3


def test_find_transformation_maps_faces(cell24, d4):
    gens = fc.d4_generators(d4)
    vecs = set()
    for fs in cell24.faces_by_dim.values():
        for F in fs:
            vecs |= F.vertices | F.normals
    ctx = fc.small_group_context(d4, gens, vecs)
    faces2 = cell24.faces_by_dim[2]
    g = fc.find_transformation(faces2[0], faces2[1], ctx)
    assert g is not None
    assert frozenset(g.apply(v) for v in faces2[0].vertices) == faces2[1].vertices


def test_face_geometry_square(cube):
    F = cube.faces_by_dim[2][0]
    geo = fc.face_geometry(F)
    assert geo["shape"] == "square"
    assert geo["area2"] == 1
    assert all(c["cos2"] == 0 for c in geo["corners"])


def test_face_geometry_triangle(cell24):
    F = cell24.faces_by_dim[2][0]
    geo = fc.face_geometry(F)
    assert geo["shape"] == "equilateral"
    assert geo["area2"] == Q(3, 16)  # side^2 = 1/2
    assert all(c["cos2"] == Q(1, 4) and c["cos_sign"] == 1
               for c in geo["corners"])


def test_edge_geometry(cube):
    F = cube.faces_by_dim[1][0]
    assert fc.face_geometry(F) == {"dim": 1, "length2": Q(1)}


def test_affine_rank_modp_certificate():
    rng = np.random.default_rng(0)
    A = rng.integers(-5, 6, size=(10, 6)).astype(np.int64)
    target = int(np.linalg.matrix_rank(A.astype(float)))
    assert fc._rank_modp_reached(A.copy(), target, fc._P1)
    assert not fc._rank_modp_reached(A.copy(), target + 1, fc._P1)


def test_union_orbit_rows_tracking(z3):
    gens = fc.zn_generators(z3)
    seed = np.array([1, 0, 0], dtype=np.int64)
    umats = [g.coeff for g in gens]
    rows, parent, gen = fc._union_orbit_rows(3, [seed], umats, track=True)
    assert rows.shape[0] == 6
    for i in range(rows.shape[0]):
        if parent[i] >= 0:
            assert np.array_equal(rows[parent[i]] @ umats[gen[i]], rows[i])
        else:
            assert np.array_equal(rows[i], seed)
