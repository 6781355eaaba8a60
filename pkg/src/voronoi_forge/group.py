"""Symmetry-group engine for lattice Voronoi regions.

Group elements are exact orthogonal rational matrices that map the lattice
to itself.  Each element also carries its integer matrix in lattice
coefficient space, where orbits of rational vectors become pure integer
breadth-first searches.  Orders and membership tests go through a faithful
permutation action on a spanning orbit, handled by a Schreier-Sims chain.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction as Q

import numpy as np

from . import exact
from .exact import Matrix, Vector, vec
from .lattice import Lattice
from .permgroup import Element, StabilizerChain, identity_element, perm_from_cycles


class OrbitCapExceeded(Exception):
    """The orbit grew past the configured cap."""


class GroupElement:
    """Exact orthogonal matrix acting on a lattice.

    Stores the ambient matrix as integer numerators over a common positive
    denominator, plus the integer coefficient-space matrices U and U^-1 with
    t(g.x) = t(x) U for row coefficient vectors t.
    """

    __slots__ = ("num", "den", "coeff", "coeff_inv", "_hash")

    def __init__(self, num: np.ndarray, den: int, coeff: np.ndarray, coeff_inv: np.ndarray):
        g = math.gcd(int(den), int(np.gcd.reduce(np.abs(num), axis=None)) or int(den))
        if g > 1:
            num = num // g
            den = den // g
        self.num = np.ascontiguousarray(num, dtype=np.int64)
        self.num.setflags(write=False)
        self.den = int(den)
        self.coeff = np.ascontiguousarray(coeff, dtype=np.int64)
        self.coeff.setflags(write=False)
        self.coeff_inv = np.ascontiguousarray(coeff_inv, dtype=np.int64)
        self.coeff_inv.setflags(write=False)
        self._hash = hash((self.den, self.num.tobytes()))

    @property
    def n(self) -> int:
        return self.num.shape[0]

    def matrix(self) -> Matrix:
        """The ambient matrix as exact rationals."""
        d = self.den
        return tuple(tuple(Q(int(a), d) for a in row) for row in self.num)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        # (self * other) applies other first: x -> self(other(x))
        return GroupElement(
            self.num @ other.num,
            self.den * other.den,
            other.coeff @ self.coeff,
            self.coeff_inv @ other.coeff_inv,
        )

    def inv(self) -> "GroupElement":
        # orthogonal: inverse is the transpose
        return GroupElement(self.num.T, self.den, self.coeff_inv, self.coeff)

    def is_identity(self) -> bool:
        return self.den == 1 and bool(np.array_equal(self.num, np.eye(self.n, dtype=np.int64)))

    def apply(self, x: Vector) -> Vector:
        """Exact image of an ambient vector (column action y = Mx)."""
        d = self.den
        return tuple(
            sum((Q(int(self.num[i, j]), d) * x[j] for j in range(self.n)), Q(0))
            for i in range(self.n)
        )

    def __eq__(self, other):
        return (
            isinstance(other, GroupElement)
            and self.den == other.den
            and np.array_equal(self.num, other.num)
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"GroupElement(den={self.den})"


def group_element(L: Lattice, M: Matrix, check: bool = True) -> GroupElement:
    """Build a GroupElement from an exact ambient matrix.

    Verifies exact orthogonality and that the lattice is mapped into itself
    (integer coefficient matrix), unless check is disabled.
    """
    n = L.n
    if L.n != L.m:
        raise ValueError("group engine requires a full-rank square basis")
    den = math.lcm(*(x.denominator for row in M for x in row))
    num = np.array([[int(x * den) for x in row] for row in M], dtype=np.int64)
    if check:
        if not np.array_equal(num @ num.T, den * den * np.eye(n, dtype=np.int64)):
            raise ValueError("matrix is not orthogonal")
    coeff = _coeff_matrix(L, num.T, den)
    coeff_inv = _coeff_matrix(L, num, den)
    if coeff is None or coeff_inv is None:
        raise ValueError("matrix does not map the lattice to itself")
    return GroupElement(num, den, coeff, coeff_inv)


def _coeff_matrix(L: Lattice, mt: np.ndarray, den: int) -> np.ndarray | None:
    """Integer matrix B M^T B^-1 scaled from integer pieces, or None."""
    binv = _binv_int(L)
    raw = L._basis_int @ mt @ binv["num"]
    scale = L._basis_den * den * binv["den"]
    if np.any(raw % scale):
        return None
    return (raw // scale).astype(np.int64)


_BINV_CACHE: dict[int, dict] = {}


def _binv_int(L: Lattice) -> dict:
    key = id(L)
    if key not in _BINV_CACHE:
        binv = exact.inverse(L.basis)
        d = math.lcm(*(x.denominator for row in binv for x in row))
        _BINV_CACHE[key] = {
            "num": np.array([[int(x * d) for x in row] for row in binv], dtype=np.int64),
            "den": d,
            "exact": binv,
        }
    return _BINV_CACHE[key]


def identity_group_element(L: Lattice) -> GroupElement:
    return group_element(L, exact.identity(L.n))


def perm_matrix_element(L: Lattice, perm: np.ndarray) -> GroupElement:
    """Group element of the coordinate permutation i -> perm[i]."""
    n = L.n
    M = [[Q(0)] * n for _ in range(n)]
    for i in range(n):
        M[int(perm[i])][i] = Q(1)
    return group_element(L, exact.mat(M))


def sign_matrix_element(L: Lattice, signs) -> GroupElement:
    """Group element of a diagonal +-1 sign change."""
    n = L.n
    M = [[Q(0)] * n for _ in range(n)]
    for i, s in enumerate(signs):
        M[i][i] = Q(s)
    return group_element(L, exact.mat(M))


# -- BW16 constants ---------------------------------------------------------

H4 = exact.mat([
    [Q(1, 2), Q(1, 2), Q(1, 2), Q(1, 2)],
    [Q(1, 2), Q(-1, 2), Q(1, 2), Q(-1, 2)],
    [Q(1, 2), Q(1, 2), Q(-1, 2), Q(-1, 2)],
    [Q(1, 2), Q(-1, 2), Q(-1, 2), Q(1, 2)],
])

H4_BAR = exact.mat([
    [Q(1, 2), Q(1, 2), Q(1, 2), Q(1, 2)],
    [Q(1, 2), Q(-1, 2), Q(1, 2), Q(-1, 2)],
    [Q(1, 2), Q(1, 2), Q(-1, 2), Q(-1, 2)],
    [Q(-1, 2), Q(1, 2), Q(1, 2), Q(-1, 2)],
])

P3_CYCLES = [(1, 6, 13), (2, 8), (3, 9, 12, 5, 15, 14), (4, 11, 7)]
PERM_CYCLES = {
    "p1": [(1, 2, 3, 4), (5, 6, 7, 8), (9, 10, 11, 12), (13, 14, 15, 16)],
    "p2": [(1, 2), (5, 6), (9, 10), (13, 14)],
    "p3": P3_CYCLES,
    "p4": [(1, 9, 16, 15, 5, 7, 4, 8, 10, 6, 13, 2, 3, 14, 12)],
}


def _block_diag4(block: Matrix) -> Matrix:
    n = 4 * len(block)
    M = [[Q(0)] * n for _ in range(n)]
    for b in range(4):
        for i in range(4):
            for j in range(4):
                M[4 * b + i][4 * b + j] = block[i][j]
    return exact.mat(M)


def bw16_generators(L: Lattice) -> list[GroupElement]:
    """The two matrices generating the full BW16 automorphism group."""
    m1 = perm_matrix_element(L, perm_from_cycles(P3_CYCLES, 16))
    m2 = group_element(L, _block_diag4(H4_BAR))
    return [m1, m2]


def bw16_hadamard_element(L: Lattice) -> GroupElement:
    return group_element(L, _block_diag4(H4))


def bw16_permutation_elements(L: Lattice) -> dict[str, GroupElement]:
    return {
        k: perm_matrix_element(L, perm_from_cycles(cycles, 16))
        for k, cycles in PERM_CYCLES.items()
    }


def bw16_sign_change_generators(L: Lattice) -> dict[str, list[GroupElement]]:
    """Generators of the three sign-change subgroups S1, S2, S3.

    S1: even numbers of jointly-flipped component pairs (i, i+1), i odd.
    S2: even numbers of jointly-flipped pairs (i, 16-i) for i = 1, 3, 5, 7.
    S3: the single flip of components 1, 3, 5, 7.
    Indices are the paper-style 1-based positions.
    """
    def flip_pairs(pairs):
        s = [1] * 16
        for a, b in pairs:
            s[a - 1] = -1
            s[b - 1] = -1
        return sign_matrix_element(L, s)

    s1_pairs = [(i, i + 1) for i in range(1, 16, 2)]
    s1 = [flip_pairs([s1_pairs[k], s1_pairs[k + 1]]) for k in range(len(s1_pairs) - 1)]
    s2_pairs = [(i, 16 - i) for i in (1, 3, 5, 7)]
    s2 = [flip_pairs([s2_pairs[k], s2_pairs[k + 1]]) for k in range(len(s2_pairs) - 1)]
    s3_signs = [1] * 16
    for i in (1, 3, 5, 7):
        s3_signs[i - 1] = -1
    s3 = [sign_matrix_element(L, s3_signs)]
    return {"S1": s1, "S2": s2, "S3": s3}


def _v16(den, *nums) -> tuple:
    return tuple(Q(a, den) for a in nums)


#: Known representatives of the BW16 relevant-vector and vertex classes:
#: name -> (vector, squared norm, orbit size, stabilizer order).
BW16_CLASS_REPS = {
    "n1": (_v16(1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
           Q(2), 4320, 20643840),
    "n2": (_v16(2, 2, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1, -1, 0),
           Q(3), 61440, 1451520),
    "v1": (_v16(2, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1),
           Q(1), 4320, 20643840),
    "v2": (_v16(12, 9, 3, 3, 3, 1, -1, 1, 1, 1, -1, 3, -1, -3, 3, -3, -3),
           Q(10, 9), 66355200, 1344),
    "v3": (_v16(6, 5, 1, -1, -1, -1, 1, 1, -1, 1, -1, 1, -1, 1, 1, 1, 1),
           Q(10, 9), 2211840, 40320),
    "v4": (_v16(6, 5, 1, 1, 1, -1, 1, -1, -1, 1, -1, -1, -1, -1, -1, 1, -1),
           Q(10, 9), 66355200, 1344),
    "v5": (_v16(6, 5, 1, 1, 1, 1, 1, -1, -1, 1, 1, 1, -1, 1, 1, -1, 1),
           Q(10, 9), 66355200, 1344),
    "v6": (_v16(4, 3, 1, 1, 1, 1, 1, 1, -1, 1, 1, 1, -1, 1, -1, -1, -1),
           Q(3, 2), 61440, 1451520),
}


# -- coefficient-space vectors ----------------------------------------------


class CoeffVector:
    """A rational vector held as integer lattice coefficients over a scale."""

    __slots__ = ("ints", "scale")

    def __init__(self, ints: np.ndarray, scale: int):
        self.ints = np.ascontiguousarray(ints, dtype=np.int64)
        self.scale = scale


def to_coeffs(L: Lattice, x: Vector) -> CoeffVector:
    """Exact coefficient representation of an ambient vector in span(B)."""
    binv = _binv_int(L)["exact"]
    t = exact.vecmat(vec(x), binv)
    q = math.lcm(*(a.denominator for a in t))
    return CoeffVector(np.array([int(a * q) for a in t], dtype=np.int64), q)


def from_coeffs(L: Lattice, ints, scale: int) -> Vector:
    num = np.asarray(ints, dtype=np.int64) @ L._basis_int
    d = scale * L._basis_den
    return tuple(Q(int(a), d) for a in num)


# -- orbits (breadth-first, Alg.-2 style) ------------------------------------


class OrbitMap:
    """Orbit of a vector plus transforms to (a subset of) its members.

    The transform for a member y satisfies transform(y).apply(base) == y.
    Transforms are reconstructed on demand from the breadth-first tree; only
    members that satisfied the storage condition during construction are
    addressable (plus the base vector itself).
    """

    def __init__(self, L: Lattice, base: Vector, gens: list[GroupElement],
                 arr: np.ndarray, scale: int, parent: np.ndarray, gen_idx: np.ndarray,
                 stored: np.ndarray):
        self._L = L
        self.base = base
        self._gens = gens
        self._arr = arr
        self._scale = scale
        self._parent = parent
        self._gen_idx = gen_idx
        self._stored = stored
        self._index = {arr[i].tobytes(): i for i in range(arr.shape[0])}
        self._identity = identity_group_element(L)

    def __len__(self):
        return self._arr.shape[0]

    def __contains__(self, y) -> bool:
        return self._key(y) in self._index

    def members(self):
        """Iterate orbit members as exact ambient vectors."""
        for i in range(len(self)):
            yield from_coeffs(self._L, self._arr[i], self._scale)

    def coeff_array(self) -> np.ndarray:
        return self._arr

    @property
    def scale(self) -> int:
        return self._scale

    def _key(self, y) -> bytes:
        cv = to_coeffs(self._L, vec(y))
        if cv.scale != self._scale:
            if self._scale % cv.scale:
                return b""
            cv = CoeffVector(cv.ints * (self._scale // cv.scale), self._scale)
        return cv.ints.tobytes()

    def index_of(self, y) -> int | None:
        return self._index.get(self._key(y))

    def transform_by_index(self, i: int) -> GroupElement:
        """Group element taking the base vector to orbit member i."""
        word = []
        while self._parent[i] >= 0:
            word.append(int(self._gen_idx[i]))
            i = int(self._parent[i])
        # y = g_w1 (g_w2 (... (g_wm base))) with w1 the last tree step
        g = self._identity
        for k in reversed(word):
            g = self._gens[k] * g
        return g

    def transform_of(self, y) -> GroupElement | None:
        """A transform for a stored orbit member (None if absent/unstored)."""
        i = self.index_of(y)
        if i is None or not self._stored[i]:
            return None
        return self.transform_by_index(i)

    @property
    def transforms(self) -> dict:
        """Materialized map {member: transform} over stored members only."""
        out = {}
        for i in np.nonzero(self._stored)[0]:
            y = from_coeffs(self._L, self._arr[int(i)], self._scale)
            out[y] = self.transform_by_index(int(i))
        return out


def orbit(L: Lattice, x: Vector, gens: list[GroupElement], condition=None,
          cap: int = 10**8) -> OrbitMap:
    """Breadth-first orbit of x under the generated group.

    The condition predicate (exact ambient vector -> bool) governs which
    members get an addressable transform; None stores all of them.  The base
    vector's transform (identity) is always stored.
    """
    if not gens:
        raise ValueError("need at least one generator")
    x = vec(x)
    cv = to_coeffs(L, x)
    scale = cv.scale
    umats = [g.coeff for g in gens]
    rows = [cv.ints.copy()]
    parent = [-1]
    gen_idx = [-1]
    stored = [True]
    index = {cv.ints.tobytes(): 0}
    frontier = np.array([cv.ints], dtype=np.int64)
    frontier_ids = [0]
    while len(frontier):
        next_rows = []
        next_ids = []
        for k, U in enumerate(umats):
            images = frontier @ U
            for j in range(images.shape[0]):
                key = images[j].tobytes()
                if key in index:
                    continue
                idx = len(rows)
                if idx >= cap:
                    raise OrbitCapExceeded(f"orbit cap {cap} exceeded")
                index[key] = idx
                rows.append(images[j].copy())
                parent.append(frontier_ids[j])
                gen_idx.append(k)
                if condition is None:
                    stored.append(True)
                else:
                    stored.append(bool(condition(from_coeffs(L, images[j], scale))))
                next_rows.append(images[j])
                next_ids.append(idx)
        if next_rows:
            frontier = np.array(next_rows, dtype=np.int64)
            frontier_ids = next_ids
        else:
            break
    return OrbitMap(
        L, x, gens,
        np.array(rows, dtype=np.int64), scale,
        np.array(parent, dtype=np.int64), np.array(gen_idx, dtype=np.int64),
        np.array(stored, dtype=bool),
    )


# -- faithful permutation action and group contexts --------------------------


class PermAction:
    """Permutation action of lattice-preserving matrices on a point set.

    The points are the coefficient rows of one or more spanning orbits; the
    action is faithful iff the points span the ambient space, which is
    checked exactly on construction.
    """

    def __init__(self, L: Lattice, arr: np.ndarray, scale: int):
        self.L = L
        self.arr = np.ascontiguousarray(arr, dtype=np.int64)
        self.scale = scale
        self.degree = arr.shape[0]
        self._index = {arr[i].tobytes(): i for i in range(self.degree)}
        if exact.rank(exact.mat(arr[: min(self.degree, 4 * L.n)].tolist())) < L.n:
            if exact.rank(exact.mat(arr.tolist())) < L.n:
                raise ValueError("action points do not span: action is not faithful")

    def perm_of(self, g: GroupElement) -> np.ndarray:
        images = self.arr @ g.coeff
        p = np.empty(self.degree, dtype=np.int32)
        idx = self._index
        for i in range(self.degree):
            j = idx.get(images[i].tobytes())
            if j is None:
                raise ValueError("element does not preserve the action point set")
            p[i] = j
        return p

    def element(self, g: GroupElement) -> Element:
        return Element(self.perm_of(g), g)


def action_from_orbits(L: Lattice, gens: list[GroupElement], seeds: list[Vector],
                       cap: int = 10**6) -> PermAction:
    """Union of orbits of the seed vectors, as a faithful action point set."""
    arrs = []
    scales = []
    for s in seeds:
        om = orbit(L, s, gens, condition=lambda v: False, cap=cap)
        arrs.append(om.coeff_array())
        scales.append(om.scale)
    scale = math.lcm(*scales)
    rows = np.concatenate([a * (scale // sc) for a, sc in zip(arrs, scales)])
    rows = np.unique(rows, axis=0)
    return PermAction(L, rows, scale)


class MatrixGroup:
    """A matrix group with a faithful permutation action and a BSGS."""

    def __init__(self, L: Lattice, gens: list[GroupElement], action: PermAction):
        self.L = L
        self.gens = list(gens)
        self.action = action
        idp = identity_group_element(L)
        self.chain = StabilizerChain(
            [action.element(g) for g in gens], action.degree, id_payload=idp
        )

    def order(self) -> int:
        return self.chain.order()

    def contains(self, g: GroupElement) -> bool:
        return self.chain.contains(self.action.element(g))

    def elements(self):
        """Stream all group elements as GroupElements, one at a time."""
        for e in self.chain.elements():
            yield e.payload

    def random_stream(self, seed: int) -> "RandomElementStream":
        return RandomElementStream(self.gens, seed, identity_group_element(self.L))


def group_order(L: Lattice, gens: list[GroupElement], action_base: Vector,
                cap: int = 10**6) -> int:
    """Exact group order via a stabilizer chain on the orbit of action_base.

    Faithfulness of the induced permutation action is guaranteed by an exact
    rank check: a matrix fixing every point of a spanning set is the
    identity.  Additional basis-vector orbits are appended if the first
    orbit does not span.
    """
    seeds = [vec(action_base)]
    while True:
        try:
            action = action_from_orbits(L, gens, seeds, cap=cap)
            break
        except ValueError:
            covered = len(seeds)
            if covered > L.n:
                raise
            # fall back to lattice basis rows, which always span
            seeds.append(vec(L.basis[covered - 1]))
    return MatrixGroup(L, gens, action).order()


class RandomElementStream:
    """Product-replacement stream of pseudo-random group elements."""

    def __init__(self, gens: list[GroupElement], seed: int, identity: GroupElement,
                 slots: int = 10, burn_in: int = 60):
        base = list(gens) if gens else [identity]
        self._slots = [base[i % len(base)] for i in range(max(slots, len(base)))]
        self._acc = identity
        self._rng = random.Random(seed)
        for _ in range(burn_in):
            self._step()

    def _step(self):
        i = self._rng.randrange(len(self._slots))
        j = self._rng.randrange(len(self._slots))
        while j == i and len(self._slots) > 1:
            j = self._rng.randrange(len(self._slots))
        other = self._slots[j]
        if self._rng.random() < 0.5:
            other = other.inv()
        if self._rng.random() < 0.5:
            self._slots[i] = self._slots[i] * other
        else:
            self._slots[i] = other * self._slots[i]
        self._acc = self._acc * self._slots[i]

    def next(self) -> GroupElement:
        self._step()
        return self._acc

    def __iter__(self):
        while True:
            yield self.next()


def random_element(L: Lattice, gens: list[GroupElement], seed: int) -> GroupElement:
    """One pseudo-random element; deterministic for a fixed seed."""
    return RandomElementStream(gens, seed, identity_group_element(L)).next()


# -- stabilizers (Alg.-3 style) ----------------------------------------------


def stabilizer(L: Lattice, x: Vector, gens: list[GroupElement], orbit_size: int | None,
               group: MatrixGroup, seed: int = 0,
               max_iterations: int = 10**7, patience: int = 40) -> MatrixGroup:
    """Stabilizer of x via random-element coincidences.

    Random elements g are applied to x; two elements meeting at the same
    image y give the stabilizer element g^-1 g'.  With a known orbit_size,
    generation stops exactly when the generated subgroup reaches order
    |G| / orbit_size.  With orbit_size None the run is self-terminating:
    it stops after `patience` consecutive coincidences produce no growth
    (probabilistic completeness; the orbit-stabilizer product can then be
    checked against |G| independently).  The iteration cap guards against
    a wrong orbit_size.
    """
    x = vec(x)
    target = None
    if orbit_size is not None:
        target, rem = divmod(group.order(), orbit_size)
        if rem:
            raise ValueError("orbit_size does not divide the group order")
    cv = to_coeffs(L, x)
    seen: dict[bytes, GroupElement] = {cv.ints.tobytes(): identity_group_element(L)}
    sub = MatrixGroup(L, [], group.action)
    if target == 1:
        return sub
    stream = group.random_stream(seed)
    streak = 0
    for _ in range(max_iterations):
        g = stream.next()
        key = (cv.ints @ g.coeff).tobytes()
        prev = seen.get(key)
        if prev is None:
            seen[key] = g
            continue
        cand = g.inv() * prev
        grew = not cand.is_identity() and sub.chain.extend(sub.action.element(cand))
        if grew:
            sub.gens.append(cand)
            streak = 0
            if target is not None:
                if sub.order() == target:
                    return sub
                if sub.order() > target:
                    raise RuntimeError("stabilizer exceeded target order; wrong orbit_size?")
        else:
            streak += 1
            if target is None and streak >= patience:
                return sub
    raise RuntimeError("stabilizer iteration cap exceeded")


# -- transformation streams and vector classification -------------------------


def transformation_set(x: Vector, y: Vector, class_data: "VectorClassification"):
    """Stream all g with g.x = y, lazily: g = g_y g_s g_x^-1 over Stab(rep)."""
    rx = class_data.rep_of(x)
    ry = class_data.rep_of(y)
    if rx is None or ry is None or rx != ry:
        return
    gx_inv = class_data.transform_of(x).inv()
    gy = class_data.transform_of(y)
    for gs in class_data.stabilizer_of(rx).elements():
        yield gy * (gs * gx_inv)


class VectorClassification:
    """Classification of vectors under a group: RepOf / TransformOf / Stab.

    Built either constructively (from orbit maps of known representatives)
    or by classify_vectors.  Representatives are chosen once and fixed.
    """

    def __init__(self, L: Lattice):
        self.L = L
        self._reps: list[Vector] = []
        self._orbit_maps: dict[Vector, OrbitMap] = {}
        self._stabs: dict[Vector, MatrixGroup] = {}
        self._stab_orders: dict[Vector, int] = {}

    def add_class(self, rep: Vector, orbit_map: OrbitMap,
                  stab: MatrixGroup | None = None, stab_order: int | None = None):
        self._reps.append(rep)
        self._orbit_maps[rep] = orbit_map
        if stab is not None:
            self._stabs[rep] = stab
            self._stab_orders[rep] = stab.order()
        elif stab_order is not None:
            self._stab_orders[rep] = stab_order

    @property
    def reps(self) -> list[Vector]:
        return list(self._reps)

    def rep_of(self, x) -> Vector | None:
        x = vec(x)
        for rep in self._reps:
            if x in self._orbit_maps[rep]:
                return rep
        return None

    def transform_of(self, x) -> GroupElement | None:
        x = vec(x)
        for rep in self._reps:
            om = self._orbit_maps[rep]
            i = om.index_of(x)
            if i is not None:
                return om.transform_by_index(i)
        return None

    def stabilizer_of(self, rep: Vector) -> MatrixGroup:
        return self._stabs[vec(rep)]

    def stab_order_of(self, rep: Vector) -> int:
        return self._stab_orders[vec(rep)]


def classify_vectors(L: Lattice, vectors, gens: list[GroupElement],
                     cap: int = 10**7, signature=None) -> dict:
    """Partition vectors into equivalence classes under the generated group.

    Returns {"classes": [...], "rep_of": {...}, "transform_of": {...}} where
    each class lists its members, the representative is its first-seen
    member, and transform_of maps each vector to one element taking the
    representative to it.

    Vectors with different exact invariant signatures (squared norm plus an
    optional caller signature) are inequivalent without any search; within a
    signature bucket, full orbit enumeration (capped) decides equivalence.
    """
    vectors = [vec(v) for v in vectors]
    buckets: dict = {}
    for v in vectors:
        key = (exact.norm2(v), signature(v) if signature else None)
        buckets.setdefault(key, []).append(v)
    classes = []
    rep_of = {}
    transform_of = {}
    for members in buckets.values():
        pending = list(members)
        while pending:
            rep = pending[0]
            om = orbit(L, rep, gens, cap=cap)
            cls = []
            rest = []
            for v in pending:
                i = om.index_of(v)
                if i is not None:
                    cls.append(v)
                    rep_of[v] = rep
                    transform_of[v] = om.transform_by_index(i)
                else:
                    rest.append(v)
            classes.append({"rep": rep, "members": cls})
            pending = rest
    return {"classes": classes, "rep_of": rep_of, "transform_of": transform_of}
