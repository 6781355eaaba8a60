"""Face hierarchy of Voronoi regions: vertices, facets, children, classes.

Faces are stored by their exact vertex sets; the normal set of a face is the
maximal set of relevant vectors whose facet hyperplanes contain it.  Small
lattices (n <= 4) get a complete explicit hierarchy.  For BW16 only the two
representative facets are expanded: their vertex sets are unions of
stabilizer suborbits seeded through transporter elements, so the 66M-sized
vertex orbits never have to be enumerated.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction as Q
from functools import lru_cache

import numpy as np

from . import exact
from . import group as grp
from .exact import NoSolution, Vector, vec
from .lattice import Lattice, make_lattice
from .relvec import RelevantVectorSet, relevant_vectors


# -- basic face types ---------------------------------------------------------


@dataclass(frozen=True)
class Face:
    """A face of the Voronoi region, keyed by its exact vertex set."""

    dim: int
    vertices: frozenset
    normals: frozenset

    def key(self):
        return tuple(sorted(self.vertices))

    def __repr__(self):
        return f"Face(dim={self.dim}, |V|={len(self.vertices)}, |N|={len(self.normals)})"


@dataclass
class FaceClass:
    """An equivalence class of faces with a fixed representative."""

    representative: Face
    orbit_size: int | None = None
    members_constructed: int = 1


def is_tight(v: Vector, r: Vector) -> bool:
    """True iff v lies on the facet hyperplane of the relevant vector r."""
    return exact.dot(v, r) == exact.norm2(r) / 2


def tight_subset(vertices, r: Vector) -> frozenset:
    return frozenset(v for v in vertices if is_tight(v, r))


def maximal_normals(vertices, R: RelevantVectorSet) -> frozenset:
    """Every relevant vector tight on all the given vertices."""
    out = []
    for r in R.vectors:
        rc = r.coords
        if all(is_tight(v, rc) for v in vertices):
            out.append(rc)
    return frozenset(out)


# -- vertex enumeration and verification (small lattices) ---------------------


_RELVEC_CACHE: dict[int, RelevantVectorSet] = {}


def cached_relevant_vectors(L: Lattice) -> RelevantVectorSet:
    key = id(L)
    if key not in _RELVEC_CACHE:
        _RELVEC_CACHE[key] = relevant_vectors(L)
    return _RELVEC_CACHE[key]


def enumerate_vertices_small(L: Lattice, R: RelevantVectorSet | None = None) -> set:
    """Complete vertex set of the Voronoi region by hyperplane intersection.

    Solves every full-rank n-subset of facet hyperplane equations and keeps
    the solutions inside the region.  Combinatorial: hard-capped at n <= 4.
    """
    if L.n > 4:
        raise ValueError("combinatorial vertex enumeration limited to n <= 4")
    if L.n != L.m:
        raise ValueError("requires a square basis")
    R = R or cached_relevant_vectors(L)
    from .lattice import in_voronoi

    out = set()
    for rows in itertools.combinations(R.vectors, L.n):
        A = tuple(r.coords for r in rows)
        b = tuple(exact.norm2(r.coords) / 2 for r in rows)
        try:
            x = exact.solve(A, b)
        except (NoSolution, ValueError):
            continue
        if x in out:
            continue
        if in_voronoi(L, x):
            out.add(x)
    return out


def verify_vertex(L: Lattice, p: Vector, R: RelevantVectorSet | None = None) -> bool:
    """True iff p is a vertex: inside the region with n tight facet normals
    of full rank."""
    from .lattice import in_voronoi

    p = vec(p)
    R = R or cached_relevant_vectors(L)
    tight = [r.coords for r in R.vectors if is_tight(p, r.coords)]
    if len(tight) < L.n or exact.rank(tuple(tight)) < L.n:
        return False
    return in_voronoi(L, p)


# -- facets and children -------------------------------------------------------


def facets(L: Lattice, R: RelevantVectorSet, vertices) -> list[Face]:
    """One (n-1)-face per relevant vector: the vertices tight on it."""
    out = []
    for r in R.vectors:
        vs = tight_subset(vertices, r.coords)
        out.append(Face(L.n - 1, vs, maximal_normals(vs, R)))
    return out


def children(F: Face, R: RelevantVectorSet) -> list[Face]:
    """All (dim-1)-subfaces of F by intersecting with further hyperplanes."""
    if F.dim < 1:
        raise ValueError("children require dim >= 1")
    seen = {}
    for r in R.vectors:
        rc = r.coords
        if rc in F.normals:
            continue
        S = tight_subset(F.vertices, rc)
        if len(S) < F.dim:  # affine rank d-1 needs at least d points
            continue
        if exact.affine_rank(tuple(S)) != F.dim - 1:
            continue
        key = tuple(sorted(S))
        if key not in seen:
            seen[key] = Face(F.dim - 1, S, maximal_normals(S, R))
    return list(seen.values())


@dataclass
class Hierarchy:
    """Complete explicit face lattice of a small Voronoi region."""

    L: Lattice
    R: RelevantVectorSet
    faces_by_dim: dict[int, list[Face]]
    children_of: dict[tuple, list[Face]]

    @property
    def region(self) -> Face:
        return self.faces_by_dim[self.L.n][0]


def build_hierarchy(L: Lattice, R: RelevantVectorSet | None = None) -> Hierarchy:
    """Explicit face lattice from the full region down to the vertices."""
    R = R or cached_relevant_vectors(L)
    verts = enumerate_vertices_small(L, R)
    top = Face(L.n, frozenset(verts), frozenset())
    levels = {L.n: [top]}
    links: dict[tuple, list[Face]] = {}
    facet_list = facets(L, R, verts)
    # facets double as the region's children (dedupe by vertex set)
    uniq = {}
    for f in facet_list:
        uniq.setdefault(f.key(), f)
    levels[L.n - 1] = list(uniq.values())
    links[top.key()] = levels[L.n - 1]
    for d in range(L.n - 1, 0, -1):
        nxt: dict[tuple, Face] = {}
        for F in levels[d]:
            kids = children(F, R)
            kids = [nxt.setdefault(c.key(), c) for c in kids]
            links[F.key()] = kids
        levels[d - 1] = list(nxt.values())
    for v in levels[0]:
        links[v.key()] = []
    return Hierarchy(L, R, levels, links)


# -- face geometry -------------------------------------------------------------


def _cyclic_order(vertices):
    """Vertices of a planar convex polygon in boundary order (float angles)."""
    vs = list(vertices)
    P = np.array([[float(x) for x in v] for v in vs])
    c = P.mean(axis=0)
    D = P - c
    # orthonormal basis of the plane from the two leading right singular vectors
    _, _, vt = np.linalg.svd(D, full_matrices=False)
    uv = D @ vt[:2].T
    ang = np.arctan2(uv[:, 1], uv[:, 0])
    return [vs[i] for i in np.argsort(ang)]


def face_geometry(F: Face) -> dict:
    """Exact metric data of an edge or a 2-face.

    Edges report the squared length.  2-faces report the squared area (Gram
    determinant of edge vectors; triangles and parallelograms only), the
    exact squared cosine at each corner together with the sign of the
    cosine, and a shape tag.
    """
    if F.dim == 1:
        a, b = sorted(F.vertices)
        return {"dim": 1, "length2": exact.norm2(exact.vsub(a, b))}
    if F.dim != 2:
        raise ValueError("face_geometry supports dims 1 and 2")
    ring = _cyclic_order(F.vertices)
    k = len(ring)
    edges = [exact.vsub(ring[(i + 1) % k], ring[i]) for i in range(k)]
    side2 = [exact.norm2(e) for e in edges]
    corners = []
    for i in range(k):
        e1 = exact.vscale(Q(-1), edges[i - 1])
        e2 = edges[i]
        ip = exact.dot(e1, e2)
        corners.append({
            "cos2": ip * ip / (exact.norm2(e1) * exact.norm2(e2)),
            "cos_sign": (ip > 0) - (ip < 0),
        })
    out = {"dim": 2, "sides2": side2, "corners": corners}
    if k == 3:
        a, b = exact.vsub(ring[1], ring[0]), exact.vsub(ring[2], ring[0])
        gram_det = exact.norm2(a) * exact.norm2(b) - exact.dot(a, b) ** 2
        out["area2"] = gram_det / 4
        distinct = len(set(side2))
        out["shape"] = {1: "equilateral", 2: "isosceles", 3: "scalene"}[distinct]
    elif k == 4 and exact.vadd(edges[0], edges[2]) == (Q(0),) * len(edges[0]):
        a, b = edges[0], edges[1]
        out["area2"] = exact.norm2(a) * exact.norm2(b) - exact.dot(a, b) ** 2
        right = exact.dot(a, b) == 0
        if right and side2[0] == side2[1]:
            out["shape"] = "square"
        elif right:
            out["shape"] = "rectangle"
        else:
            out["shape"] = "parallelogram"
    else:
        out["shape"] = f"{k}-gon"
    return out


# -- Alg.-1 equivalence and classification -------------------------------------


class GroupContext:
    """Class data for Alg.-1 face equivalence under one group.

    Provides the representative, the transform from the representative, the
    stabilizer (an object with order() and elements()) and the stabilizer
    order for every vector that can occur among face vertices and normals.
    """

    def __init__(self, rep_of: dict, transform_of: dict, stabs: dict):
        self._rep_of = rep_of
        self._transform_of = transform_of
        self._stabs = stabs

    def rep_of(self, x):
        return self._rep_of.get(x)

    def transform_of(self, x):
        return self._transform_of.get(x)

    def stabilizer_of(self, rep):
        return self._stabs[rep]

    def stab_order_of(self, rep) -> int:
        return self._stabs[rep].order()


class _ListGroup:
    """A small group materialized as an element list."""

    def __init__(self, elems):
        self._elems = list(elems)

    def order(self):
        return len(self._elems)

    def elements(self):
        return iter(self._elems)


def small_group_context(L: Lattice, gens: list, vectors) -> GroupContext:
    """GroupContext by exhaustive enumeration; for groups of modest order."""
    vectors = [vec(v) for v in vectors]
    data = grp.classify_vectors(L, vectors, gens)
    # the first basis-row orbit may not span; fall back to all basis rows
    try:
        action = grp.action_from_orbits(L, gens, [vec(row) for row in L.basis[:1]])
        G = grp.MatrixGroup(L, gens, action)
    except ValueError:
        action = grp.action_from_orbits(L, gens, [vec(row) for row in L.basis])
        G = grp.MatrixGroup(L, gens, action)
    elems = list(G.elements())
    stabs = {}
    for c in data["classes"]:
        rep = c["rep"]
        stabs[rep] = _ListGroup([g for g in elems if g.apply(rep) == rep])
    return GroupContext(data["rep_of"], data["transform_of"], stabs)


def _class_multiset(vs, ctx: GroupContext):
    out: dict = {}
    for v in vs:
        r = ctx.rep_of(v)
        out[r] = out.get(r, 0) + 1
    return out


def equivalence_prefilter(F: Face, F2: Face, ctx: GroupContext) -> bool:
    """Cheap necessary conditions before running the Alg.-1 search."""
    if F.dim != F2.dim:
        return False
    if len(F.vertices) != len(F2.vertices) or len(F.normals) != len(F2.normals):
        return False
    if _class_multiset(F.vertices, ctx) != _class_multiset(F2.vertices, ctx):
        return False
    return _class_multiset(F.normals, ctx) == _class_multiset(F2.normals, ctx)


def find_transformation(F: Face, F2: Face, ctx: GroupContext):
    """A group element g with g.F = F2, or None when inequivalent.

    Picks the anchor x among F's vertices and normals whose class has the
    smallest stabilizer (ties broken by the fewest candidate images in F2),
    then streams g = g_y g_s g_x^-1 over the stabilizer of x's class
    representative and all candidate images y, testing the smaller of the
    vertex/normal sets first.
    """
    if len(F.vertices) != len(F2.vertices) or len(F.normals) != len(F2.normals):
        return None
    pool = list(F.vertices) + list(F.normals)
    pool2 = list(F2.vertices) + list(F2.normals)
    if any(ctx.rep_of(x) is None for x in pool + pool2):
        raise ValueError("group context does not cover all face vectors")

    counts2: dict = {}
    for y in pool2:
        r = ctx.rep_of(y)
        counts2[r] = counts2.get(r, 0) + 1

    def cost(x):
        r = ctx.rep_of(x)
        return (ctx.stab_order_of(r), counts2.get(r, 0))

    x = min(pool, key=cost)
    rep = ctx.rep_of(x)
    if counts2.get(rep, 0) == 0:
        return None
    if F.normals and len(F.normals) < len(F.vertices):
        D, D2 = F.normals, F2.normals
    else:
        D, D2 = F.vertices, F2.vertices
    gx_inv = ctx.transform_of(x).inv()
    for y in pool2:
        if ctx.rep_of(y) != rep:
            continue
        gy = ctx.transform_of(y)
        for gs in ctx.stabilizer_of(rep).elements():
            g = gy * (gs * gx_inv)
            if frozenset(g.apply(v) for v in D) == D2:
                assert frozenset(g.apply(v) for v in F.vertices) == F2.vertices
                assert frozenset(g.apply(r) for r in F.normals) == F2.normals
                return g
    return None


def classify_faces(faces, chain) -> list[FaceClass]:
    """Group the faces into equivalence classes, coarsening along the chain.

    Each context in the chain is a GroupContext of a subgroup, the last one
    of the full group; representatives surviving one stage are re-classified
    under the next.
    """
    reps: list[list] = [[f, 1] for f in faces]
    for ctx in chain:
        merged: list[list] = []
        for f, cnt in reps:
            hit = None
            for entry in merged:
                if equivalence_prefilter(entry[0], f, ctx) and \
                        find_transformation(entry[0], f, ctx) is not None:
                    hit = entry
                    break
            if hit is None:
                merged.append([f, cnt])
            else:
                hit[1] += cnt
        reps = merged
    return [FaceClass(f, members_constructed=c) for f, c in reps]


def zn_generators(L: Lattice) -> list:
    """Hyperoctahedral group generators (permutations and a sign flip)."""
    n = L.n
    gens = [grp.sign_matrix_element(L, [-1] + [1] * (n - 1))]
    if n > 1:
        cyc = np.array([(i + 1) % n for i in range(n)], dtype=np.int32)
        gens.append(grp.perm_matrix_element(L, cyc))
        swap = np.arange(n, dtype=np.int32)
        swap[0], swap[1] = 1, 0
        gens.append(grp.perm_matrix_element(L, swap))
    return gens


def d4_generators(L: Lattice) -> list:
    """Generators of Aut(D4), order 1152: hyperoctahedral plus triality."""
    gens = zn_generators(L)
    gens.append(grp.group_element(L, grp.H4))
    return gens


# -- BW16 context ---------------------------------------------------------------


class Bw16Context:
    """Shared lazily-built BW16 data: group, orbits, stabilizers, classes."""

    def __init__(self):
        self.L = make_lattice("bw16")
        self.gens = grp.bw16_generators(self.L)
        self.reps = {k: v[0] for k, v in grp.BW16_CLASS_REPS.items()}
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def relvecs(self) -> RelevantVectorSet:
        return self._memo("relvecs", lambda: cached_relevant_vectors(self.L))

    def orbit_map(self, name: str) -> grp.OrbitMap:
        """Full orbit with transforms for a directly-enumerable class."""
        return self._memo(("orbit", name), lambda: grp.orbit(
            self.L, self.reps[name], self.gens))

    @property
    def group(self) -> grp.MatrixGroup:
        def build():
            action = grp.PermAction(
                self.L, self.orbit_map("n1").coeff_array(), self.orbit_map("n1").scale)
            return grp.MatrixGroup(self.L, self.gens, action)
        return self._memo("group", build)

    def stab(self, name: str, orbit_size: int | None = None) -> grp.MatrixGroup:
        """Stabilizer of a class representative (deterministic seed)."""
        def build():
            seed = 1 + sum(name.encode())
            return grp.stabilizer(self.L, self.reps[name], self.gens,
                                  orbit_size, self.group, seed=seed)
        return self._memo(("stab", name, orbit_size), build)


@lru_cache(maxsize=1)
def bw16_context() -> Bw16Context:
    return Bw16Context()


# -- BW16 representative facets -------------------------------------------------


def _union_orbit_rows(n: int, seed_rows, umats, cap: int = 10**7,
                      track: bool = False):
    """Closure of the seed coefficient rows under the coefficient matrices.

    With track=True also returns (parent, gen) arrays for transform
    reconstruction: parent[i] == -1 marks a seed, in which case gen[i] is the
    seed's position in seed_rows; otherwise row i == rows[parent[i]] @
    umats[gen[i]].
    """
    index = {}
    rows: list[np.ndarray] = []
    parent: list[int] = []
    gen: list[int] = []
    frontier: list[np.ndarray] = []
    frontier_ids: list[int] = []
    for si, r in enumerate(seed_rows):
        key = r.tobytes()
        if key not in index:
            index[key] = len(rows)
            rows.append(r)
            parent.append(-1)
            gen.append(si)
            frontier.append(r)
            frontier_ids.append(len(rows) - 1)
    front = np.array(frontier, dtype=np.int64)
    while front.size:
        nxt = []
        nxt_ids = []
        for k, U in enumerate(umats):
            images = front @ U
            for j in range(images.shape[0]):
                key = images[j].tobytes()
                if key not in index:
                    if len(rows) >= cap:
                        raise grp.OrbitCapExceeded(f"orbit cap {cap} exceeded")
                    index[key] = len(rows)
                    rows.append(images[j].copy())
                    parent.append(frontier_ids[j])
                    gen.append(k)
                    nxt.append(images[j])
                    nxt_ids.append(len(rows) - 1)
        if nxt:
            front = np.array(nxt, dtype=np.int64)
            frontier_ids = nxt_ids
        else:
            front = np.empty((0, n), np.int64)
    arr = np.array(rows, dtype=np.int64)
    if not track:
        return arr
    return arr, np.array(parent, dtype=np.int64), np.array(gen, dtype=np.int32)


@dataclass
class FacetData:
    """Vertex set of one representative BW16 facet, grouped by vertex class."""

    normal_name: str
    normal: Vector
    class_rows: dict[str, np.ndarray]  # coefficient rows per vertex class
    class_scales: dict[str, int]
    seeds_per_class: dict[str, int]  # tight same-class normals at each rep
    # transform-tree data, populated only when built with track=True
    class_parents: dict[str, np.ndarray] | None = None
    class_gens: dict[str, np.ndarray] | None = None
    class_seed_elems: dict[str, list] | None = None
    stab_gens: list | None = None

    @property
    def vertex_count(self) -> int:
        return sum(a.shape[0] for a in self.class_rows.values())

    def element_of(self, name: str, i: int):
        """Group element mapping the class representative to vertex i.

        Composes the breadth-first tree word (facet-stabilizer generators)
        with the transporter element of the originating seed.
        """
        if self.class_parents is None:
            raise ValueError("facet was built without transform tracking")
        parents = self.class_parents[name]
        gens = self.class_gens[name]
        word = []
        while parents[i] >= 0:
            word.append(int(gens[i]))
            i = int(parents[i])
        g = self.class_seed_elems[name][int(gens[i])]
        for k in reversed(word):
            g = self.stab_gens[k] * g
        return g


def bw16_facet(ctx: Bw16Context, which: str = "n1", track: bool = False) -> FacetData:
    """Expand the complete vertex set of the representative facet of n1/n2.

    For each vertex class rep v_i and each relevant vector r~ of the facet
    class tight at v_i, the transporter h = g_{r~}^-1 maps r~ to the facet
    normal r (the class representative), so h.v_i lies on the facet; the
    union of Stab(r)-orbits of these seeds is exactly the set of class-i
    vertices of the facet.
    """
    if which not in ("n1", "n2"):
        raise ValueError("facet class must be n1 or n2")
    L = ctx.L
    r = ctx.reps[which]
    rn2 = exact.norm2(r)
    om_r = ctx.orbit_map(which)
    stab = ctx.stab(which, orbit_size=len(om_r))
    umats = [g.coeff for g in stab.gens]
    same_class = [v.coords for v in ctx.relvecs.vectors if v.norm2 == rn2]
    class_rows = {}
    class_scales = {}
    seeds_per_class = {}
    class_parents: dict = {} if track else None
    class_gens: dict = {} if track else None
    class_seed_elems: dict = {} if track else None
    for name in ("v1", "v2", "v3", "v4", "v5", "v6"):
        v = ctx.reps[name]
        tight = [rt for rt in same_class if is_tight(v, rt)]
        seeds_per_class[name] = len(tight)
        seed_rows = []
        seed_elems = []
        scale = None
        for rt in tight:
            h = om_r.transform_of(rt).inv()
            cv = grp.to_coeffs(L, h.apply(v))
            if scale is None:
                scale = cv.scale
            if cv.scale != scale:
                if scale % cv.scale == 0:
                    cv = grp.CoeffVector(cv.ints * (scale // cv.scale), scale)
                else:
                    m = math.lcm(scale, cv.scale)
                    seed_rows = [row * (m // scale) for row in seed_rows]
                    scale = m
                    cv = grp.CoeffVector(cv.ints * (m // cv.scale), m)
            seed_rows.append(cv.ints)
            seed_elems.append(h)
        if not seed_rows:
            class_rows[name] = np.empty((0, L.n), dtype=np.int64)
            class_scales[name] = 1
            if track:
                class_parents[name] = np.empty(0, dtype=np.int64)
                class_gens[name] = np.empty(0, dtype=np.int32)
                class_seed_elems[name] = []
            continue
        if track:
            rows, parents, gens_arr = _union_orbit_rows(
                L.n, seed_rows, umats, track=True)
            class_rows[name] = rows
            class_parents[name] = parents
            class_gens[name] = gens_arr
            class_seed_elems[name] = seed_elems
        else:
            class_rows[name] = _union_orbit_rows(L.n, seed_rows, umats)
        class_scales[name] = scale
    return FacetData(which, r, class_rows, class_scales, seeds_per_class,
                     class_parents, class_gens, class_seed_elems,
                     list(stab.gens) if track else None)


def _rank_modp_reached(A: np.ndarray, target: int, p: int) -> bool:
    """True iff the rows of A have rank >= target over GF(p).

    Rank over GF(p) never exceeds the rank over the rationals, so a True
    answer certifies the exact rank bound.
    """
    A = A % p
    r = 0
    while r < target:
        nz = np.nonzero(A.any(axis=1))[0]
        if nz.size == 0:
            return False
        piv = A[nz[0]].copy()
        c = int(np.nonzero(piv)[0][0])
        piv = (piv * pow(int(piv[c]), p - 2, p)) % p
        A = (A - np.outer(A[:, c], piv)) % p
        r += 1
    return True


_P1, _P2 = 2147483647, 2147483629


def _affine_rank_reaches(rows_int: np.ndarray, target: int) -> bool:
    """Certified check that the affine rank of integer rows reaches target.

    A positive answer (from a single prime) is exact.  A negative answer is
    confirmed with a second prime; the chance that both primes divide the
    same nonzero minor is negligible, and in the intended use the geometric
    upper bound makes rank == target the only alternative.
    """
    diffs = rows_int[1:] - rows_int[0]
    # escalate through progressively larger row subsets; most positive cases
    # certify from a small prefix
    k = diffs.shape[0]
    for sub in (64, 1024, k):
        if sub > k:
            sub = k
        if _rank_modp_reached(diffs[:sub], target, _P1):
            return True
        if sub == k:
            break
    return _rank_modp_reached(diffs, target, _P2)


def bw16_facet_children_count(ctx: Bw16Context, fd: FacetData,
                              chunk: int = 64) -> int:
    """Number of distinct 14-faces of a representative BW16 facet.

    Tightness of every facet vertex against every other relevant vector is
    evaluated with one big (exact-in-float64) matrix product; candidate
    vertex subsets are deduplicated by hash and kept when their affine rank
    is exactly 14 (it can never exceed 14 inside the facet hyperplane
    intersection).
    """
    L = ctx.L
    # common-denominator integer ambient coordinates of all facet vertices
    dens = [sc * L._basis_den for sc in fd.class_scales.values()]
    D = math.lcm(*dens)
    blocks = []
    for name in sorted(fd.class_rows):
        rows = fd.class_rows[name]
        if rows.shape[0] == 0:
            continue
        d = fd.class_scales[name] * L._basis_den
        blocks.append((rows @ L._basis_int) * (D // d))
    V = np.concatenate(blocks)
    # all tightness arithmetic stays far below 2**24, so float32 is exact
    Vf = V.astype(np.float32)
    # relevant vectors as integers over denominator 2, excluding the facet normal
    rnum = np.array(
        [[int(x * 2) for x in v.coords] for v in ctx.relvecs.vectors
         if v.coords != fd.normal],
        dtype=np.int64)
    rn2_scaled = (rnum * rnum).sum(axis=1)  # = 4 ||r||^2
    # tight:  <v, r> = ||r||^2 / 2  <=>  4 (V_int . rnum) = D * rn2_scaled / 2 * ... :
    # (V_int . rnum) / (2D) = rn2_scaled / 8  <=>  4 (V_int . rnum) = D * rn2_scaled
    targets = (D * rn2_scaled).astype(np.float32) / 4.0
    seen_children: set[bytes] = set()
    seen_sets: dict[bytes, bool] = {}
    for lo in range(0, rnum.shape[0], chunk):
        block = rnum[lo:lo + chunk]
        M = Vf @ block.T.astype(np.float32)
        M -= targets[lo:lo + chunk]
        np.abs(M, out=M)
        hits = M < 0.5
        del M
        cols = np.nonzero(hits.any(axis=0))[0]
        for c in cols:
            idx = np.nonzero(hits[:, c])[0]
            if idx.size < 15:  # affine rank 14 needs at least 15 points
                continue
            digest = hashlib.sha256(idx.tobytes()).digest()
            if digest in seen_sets:
                continue
            ok = _affine_rank_reaches(V[idx], 14)
            seen_sets[digest] = ok
            if ok:
                seen_children.add(digest)
    return len(seen_children)


# -- extended mode: the full BW16 face-class hierarchy ---------------------------
#
# Every proper face of the region is congruent to a face of one of the two
# representative facets, so the whole classification runs inside their
# (deduplicated) vertex tables.  Faces are stored as sorted index arrays into
# a global vertex table plus the maximal normal set as indices into the
# relevant-vector table; equivalence search, child construction and tightness
# tests all run on integer numpy arrays.  The complete run takes many hours
# on one core, so every dimension checkpoints to JSON lines and resumes
# mid-dimension.

_VCLASS_NAMES = ("v1", "v2", "v3", "v4", "v5", "v6")
_STAB_MATERIALIZE_LIMIT = 200_000


def _element_from_coeff(L: Lattice, U: np.ndarray) -> grp.GroupElement:
    """Reconstruct the exact ambient group element from its coefficient
    matrix (U = B M^T B^-1 acting on row coefficient vectors)."""
    binv = grp._binv_int(L)["exact"]
    Uq = exact.mat([[Q(int(a)) for a in row] for row in U])
    X = exact.matmul(exact.matmul(binv, Uq), L.basis)
    return grp.group_element(L, exact.transpose(X))


@dataclass
class XFace:
    """A face in extended mode: global vertex ids plus normal ids."""

    dim: int
    vidx: np.ndarray  # sorted indices into ExtData.vrows
    nidx: np.ndarray  # sorted indices into the relevant-vector table

    def digest(self) -> str:
        return hashlib.sha256(self.vidx.astype(np.int64).tobytes()).hexdigest()


class ExtData:
    """Shared tables for the extended run, built once (several minutes).

    Holds the deduplicated global vertex table of the two representative
    facets (coefficient rows, integer ambient numerators, float32 copies for
    tightness products), vertex/normal class labels, per-vertex transform
    sources, and materialized or streamable class stabilizers.
    """

    def __init__(self, ctx: Bw16Context):
        self.ctx = ctx
        L = ctx.L
        self.L = L
        fds = {w: bw16_facet(ctx, w, track=True) for w in ("n1", "n2")}
        self.fds = fds
        scale = math.lcm(*(sc for fd in fds.values()
                           for sc in fd.class_scales.values()))
        self.scale = scale
        blocks = []
        src = []
        for w in ("n1", "n2"):
            fd = fds[w]
            for name in _VCLASS_NAMES:
                rows = fd.class_rows[name]
                if rows.shape[0] == 0:
                    continue
                blocks.append(rows * (scale // fd.class_scales[name]))
                src.append((w, name, rows.shape[0]))
        big = np.concatenate(blocks)
        uniq, first, inverse = np.unique(big, axis=0, return_index=True,
                                         return_inverse=True)
        self.vrows = np.ascontiguousarray(uniq)
        nv = uniq.shape[0]
        # per-vertex class label and transform source (facet, class, local idx)
        self.vclass = np.empty(nv, dtype=np.uint8)
        self._vsrc_facet = np.empty(nv, dtype="U2")
        self._vsrc_class = np.empty(nv, dtype=np.uint8)
        self._vsrc_local = np.empty(nv, dtype=np.int64)
        offsets = np.cumsum([0] + [c for (_, _, c) in src])
        facet_vidx: dict[str, list] = {"n1": [], "n2": []}
        for k, (w, name, count) in enumerate(src):
            sl = inverse[offsets[k]:offsets[k + 1]]
            facet_vidx[w].append(sl)
            fresh = first[sl] >= offsets[k]  # rows first seen in this block
            ids = sl[fresh & (first[sl] == np.arange(offsets[k], offsets[k + 1]))]
            self.vclass[ids] = _VCLASS_NAMES.index(name)
            self._vsrc_facet[ids] = w
            self._vsrc_class[ids] = _VCLASS_NAMES.index(name)
            loc = np.nonzero(fresh & (first[sl] == np.arange(offsets[k], offsets[k + 1])))[0]
            self._vsrc_local[ids] = loc
        # ambient integer numerators over a common denominator
        D = scale * L._basis_den
        self.den = D
        self.vint = np.ascontiguousarray(self.vrows @ L._basis_int)
        self.vf32 = self.vint.astype(np.float32)
        # relevant vectors: integer numerators over denominator 2
        self.rvecs = [v.coords for v in ctx.relvecs.vectors]
        self.rnum2 = np.array([[int(x * 2) for x in v] for v in self.rvecs],
                              dtype=np.int64)
        self.rf32 = self.rnum2.astype(np.float32)
        rn2x4 = (self.rnum2 * self.rnum2).sum(axis=1)
        self.rtargets = (D * rn2x4).astype(np.float32) / 4.0
        self.rclass = np.where(rn2x4 == 8, 0, 1).astype(np.uint8)  # n1 / n2
        self.rcoeff = np.array(
            [grp.to_coeffs(L, r).ints for r in self.rvecs], dtype=np.int64)
        # the two dimension-15 starting faces
        self.facet_faces = []
        for w in ("n1", "n2"):
            vidx = np.unique(np.concatenate(facet_vidx[w]))
            r = ctx.reps[w]
            j = next(i for i, rv in enumerate(self.rvecs) if rv == r)
            self.facet_faces.append(
                XFace(15, vidx, np.array([j], dtype=np.int64)))
        self._stab_cache: dict = {}

    # --- class data -----------------------------------------------------------

    def stab_order(self, name: str) -> int:
        return grp.BW16_CLASS_REPS[name][3]

    def element_of_vertex(self, gid: int) -> grp.GroupElement:
        """Group element mapping the vertex-class representative to vertex gid."""
        w = str(self._vsrc_facet[gid])
        name = _VCLASS_NAMES[self._vsrc_class[gid]]
        return self.fds[w].element_of(name, int(self._vsrc_local[gid]))

    def element_of_normal(self, j: int) -> grp.GroupElement:
        name = "n1" if self.rclass[j] == 0 else "n2"
        return self.ctx.orbit_map(name).transform_of(self.rvecs[j])

    def stab_matrices(self, name: str):
        """('array', coeff-matrix stack) for small stabilizers, else
        ('stream', MatrixGroup) streamed lazily from the stabilizer chain."""
        if name not in self._stab_cache:
            # exact-target mode: the search is complete once |G|/orbit is hit
            G = self.ctx.stab(name, orbit_size=grp.BW16_CLASS_REPS[name][2])
            if self.stab_order(name) <= _STAB_MATERIALIZE_LIMIT:
                arr = np.stack([g.coeff for g in G.elements()])
                self._stab_cache[name] = ("array", arr)
            else:
                self._stab_cache[name] = ("stream", G)
        return self._stab_cache[name]


def ext_data(ctx: Bw16Context) -> ExtData:
    return ctx._memo("ext_data", lambda: ExtData(ctx))


# --- children and normals in index space ----------------------------------------


def x_normals(E: ExtData, vidx: np.ndarray) -> np.ndarray:
    """Maximal normal set of the face spanned by the given vertex ids."""
    row = E.vf32[vidx[0]] @ E.rf32.T
    cand = np.nonzero(np.abs(row - E.rtargets) < 0.5)[0]
    T = E.vf32[vidx] @ E.rf32[cand].T
    ok = (np.abs(T - E.rtargets[cand]) < 0.5).all(axis=0)
    return np.sort(cand[ok])


def x_children(E: ExtData, F: XFace) -> list[XFace]:
    """All (dim-1)-subfaces of F, deduplicated, affine rank certified."""
    sub32 = E.vf32[F.vidx]
    exclude = np.zeros(E.rf32.shape[0], dtype=bool)
    exclude[F.nidx] = True
    chunk = int(max(8, min(512, (1 << 26) // max(1, F.vidx.size))))
    out: dict[str, XFace] = {}
    for lo in range(0, E.rf32.shape[0], chunk):
        block = E.rf32[lo:lo + chunk]
        M = sub32 @ block.T
        M -= E.rtargets[lo:lo + chunk]
        np.abs(M, out=M)
        hits = M < 0.5
        del M
        cols = np.nonzero(hits.any(axis=0))[0]
        for c in cols:
            j = lo + int(c)
            if exclude[j]:
                continue
            sel = np.nonzero(hits[:, c])[0]
            if sel.size < F.dim:  # affine rank dim-1 needs >= dim points
                continue
            gv = F.vidx[sel]
            child = XFace(F.dim - 1, gv, None)
            key = child.digest()
            if key in out:
                continue
            if F.dim > 1 and not _affine_rank_reaches(E.vint[gv], F.dim - 1):
                continue
            child.nidx = x_normals(E, gv)
            out[key] = child
    return list(out.values())


# --- equivalence search in index space --------------------------------------------


def _x_class_counts(E: ExtData, F: XFace):
    vc = np.bincount(E.vclass[F.vidx], minlength=6)
    nc = np.bincount(E.rclass[F.nidx], minlength=2)
    return tuple(vc), tuple(nc)


def x_prefilter(E: ExtData, F: XFace, F2: XFace) -> bool:
    if F.dim != F2.dim or F.vidx.size != F2.vidx.size or F.nidx.size != F2.nidx.size:
        return False
    return _x_class_counts(E, F) == _x_class_counts(E, F2)


def _x_candidates(E: ExtData, F: XFace):
    """(class name, member list) pairs present in F, members as (kind, id)."""
    out = []
    vcl = E.vclass[F.vidx]
    for k, name in enumerate(_VCLASS_NAMES):
        ids = F.vidx[vcl == k]
        if ids.size:
            out.append((name, [("v", int(i)) for i in ids]))
    ncl = E.rclass[F.nidx]
    for k, name in enumerate(("n1", "n2")):
        ids = F.nidx[ncl == k]
        if ids.size:
            out.append((name, [("n", int(i)) for i in ids]))
    return out


def _x_transform_of(E: ExtData, kind: str, i: int) -> grp.GroupElement:
    return E.element_of_vertex(i) if kind == "v" else E.element_of_normal(i)


def _x_row_set(E: ExtData, F: XFace, use_normals: bool) -> set:
    rows = E.rcoeff[F.nidx] if use_normals else E.vrows[F.vidx]
    return {r.tobytes() for r in rows}


def _x_verify(E: ExtData, F: XFace, F2: XFace, U: np.ndarray) -> bool:
    img = E.vrows[F.vidx] @ U
    tgt = {r.tobytes() for r in E.vrows[F2.vidx]}
    if any(r.tobytes() not in tgt for r in img):
        return False
    img = E.rcoeff[F.nidx] @ U
    tgt = {r.tobytes() for r in E.rcoeff[F2.nidx]}
    return all(r.tobytes() in tgt for r in img)


def x_find_transformation(E: ExtData, F: XFace, F2: XFace):
    """A group element g with g.F == F2, or None; Alg.-1 search on index
    arrays.  The anchor class minimizes stabilizer order times the number of
    candidate images, and membership tests run on coefficient rows."""
    cands_F = _x_candidates(E, F)
    cands_F2 = dict(_x_candidates(E, F2))

    def cost(entry):
        name, members = entry
        return E.stab_order(name) * len(cands_F2.get(name, ()))

    cands_F.sort(key=cost)
    name, members = cands_F[0]
    images = cands_F2.get(name, [])
    if not images:
        return None
    kind_x, x_id = members[0]
    gx = _x_transform_of(E, kind_x, x_id)
    A = gx.coeff_inv
    use_normals = 0 < F.nidx.size < F.vidx.size
    Drows = E.rcoeff[F.nidx] if use_normals else E.vrows[F.vidx]
    tgt = _x_row_set(E, F2, use_normals)
    mode, stab = E.stab_matrices(name)
    for kind_y, y_id in images:
        gy = _x_transform_of(E, kind_y, y_id)
        C = gy.coeff
        if mode == "array":
            kchunk = int(max(64, (1 << 22) // max(1, Drows.shape[0])))
            for lo in range(0, stab.shape[0], kchunk):
                Uks = np.matmul(np.matmul(A, stab[lo:lo + kchunk]), C)
                imgs = np.matmul(Drows, Uks)
                for k in range(Uks.shape[0]):
                    if all(r.tobytes() in tgt for r in imgs[k]):
                        U = Uks[k]
                        if _x_verify(E, F, F2, U):
                            return _element_from_coeff(E.L, U)
        else:
            for gs in stab.elements():
                U = A @ gs.coeff @ C
                img = Drows @ U
                if all(r.tobytes() in tgt for r in img):
                    if _x_verify(E, F, F2, U):
                        return _element_from_coeff(E.L, U)
    return None


# --- resumable driver ---------------------------------------------------------------


def _ser_elem(g: grp.GroupElement) -> dict:
    return {"den": g.den, "num": g.num.tolist()}


def _deser_elem(L: Lattice, d: dict) -> grp.GroupElement:
    M = exact.mat([[Q(int(a), int(d["den"])) for a in row] for row in d["num"]])
    return grp.group_element(L, M)


class ExtLevel:
    """Classified faces of one dimension plus links from the level above."""

    def __init__(self, dim: int):
        self.dim = dim
        self.classes: list[XFace] = []
        self.counts: list[int] = []
        # digest -> (class idx, transform g with g.rep == face)
        self.seen: dict[str, tuple] = {}
        # parent class idx (at dim+1) -> list of digests of its children
        self.kids: dict[int, list] = {}


def _level_path(checkpoint: str, d: int) -> str:
    return os.path.join(checkpoint, f"dim{d:02d}.jsonl")


def _load_level(E: ExtData, checkpoint: str, d: int):
    """(level, done) from a checkpoint file; done marks a complete level."""
    lvl = ExtLevel(d)
    if not checkpoint:
        return lvl, False
    path = _level_path(checkpoint, d)
    if not os.path.exists(path):
        return lvl, False
    done = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            t = rec["t"]
            if t == "class":
                lvl.classes.append(XFace(
                    d, np.array(rec["vidx"], dtype=np.int64),
                    np.array(rec["nidx"], dtype=np.int64)))
                lvl.counts.append(0)
            elif t == "seen":
                lvl.seen[rec["d"]] = (rec["cls"], rec["g"])
                lvl.counts[rec["cls"]] += 1
            elif t == "kids":
                lvl.kids[rec["parent"]] = rec["kids"]
            elif t == "done":
                done = True
    return lvl, done


def extended_build(ctx: Bw16Context, checkpoint: str | None = None,
                   emit=None, chain: str = "full", stop_dim: int = 0) -> int:
    """Classify every face class of the BW16 Voronoi region, top down.

    Starts from the two representative facets and walks children dimension
    by dimension, classifying each constructed face against the known
    representatives of its dimension (prefilter, then transporter search
    under the full group).  With a checkpoint directory the run is resumable
    at single-parent granularity; a complete run takes many hours on one
    core.  Emits one JSON-able record per dimension and per class.
    """
    if chain != "full":
        raise ValueError("only classification under the full group is "
                         "implemented; intermediate-subgroup chains are a "
                         "performance refinement")
    if emit is None:
        emit = lambda rec: None
    if checkpoint:
        os.makedirs(checkpoint, exist_ok=True)
    E = ext_data(ctx)
    above = ExtLevel(15)
    above.classes = list(E.facet_faces)
    above.counts = [4320, 61440]
    emit({"dim": 15, "classes": 2})
    for i, F in enumerate(above.classes):
        emit({"dim": 15, "class": i, "vertices": int(F.vidx.size),
              "normals": int(F.nidx.size)})
    for d in range(14, stop_dim - 1, -1):
        lvl, done = _load_level(E, checkpoint, d)
        if not done:
            path = _level_path(checkpoint, d) if checkpoint else None
            fh = open(path, "a") if path else None

            def record(rec):
                if fh:
                    fh.write(json.dumps(rec) + "\n")
                    fh.flush()

            for p, P in enumerate(above.classes):
                if p in lvl.kids:
                    continue
                digests = []
                for child in x_children(E, P):
                    key = child.digest()
                    if key not in lvl.seen:
                        cls_idx = None
                        g = None
                        for i, rep in enumerate(lvl.classes):
                            if not x_prefilter(E, rep, child):
                                continue
                            g = x_find_transformation(E, rep, child)
                            if g is not None:
                                cls_idx = i
                                break
                        if cls_idx is None:
                            cls_idx = len(lvl.classes)
                            g = grp.identity_group_element(E.L)
                            lvl.classes.append(child)
                            lvl.counts.append(0)
                            record({"t": "class", "i": cls_idx,
                                    "vidx": child.vidx.tolist(),
                                    "nidx": child.nidx.tolist()})
                        gser = _ser_elem(g)
                        lvl.seen[key] = (cls_idx, gser)
                        lvl.counts[cls_idx] += 1
                        record({"t": "seen", "d": key, "cls": cls_idx,
                                "g": gser})
                    digests.append(key)
                lvl.kids[p] = digests
                record({"t": "kids", "parent": p, "kids": digests})
            record({"t": "done", "classes": len(lvl.classes)})
            if fh:
                fh.close()
        emit({"dim": d, "classes": len(lvl.classes),
              "members_constructed": int(sum(lvl.counts))})
        for i, F in enumerate(lvl.classes):
            rec = {"dim": d, "class": i, "vertices": int(F.vidx.size),
                   "normals": int(F.nidx.size),
                   "members_constructed": int(lvl.counts[i])}
            if d in (1, 2):
                verts = [tuple(Q(int(a), E.den) for a in E.vint[v])
                         for v in F.vidx]
                geo = face_geometry(Face(d, frozenset(verts), frozenset()))
                rec["geometry"] = _jsonable_geometry(geo)
            emit(rec)
        above = lvl
    return 0


def _jsonable_geometry(geo: dict) -> dict:
    def conv(x):
        if isinstance(x, Q):
            return exact.fmt_q(x)
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, list):
            return [conv(v) for v in x]
        return x
    return conv(geo)
