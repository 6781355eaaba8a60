"""Lattice definitions, named constructors and exact closest-point search.

A lattice is given by generator rows B (rank k, ambient dimension m).  All
named lattices except A2 have square bases; A2 is carried in its rational
3-dimensional embedding.  Closest-point searches locate candidates with a
floating-point sphere decoder and then compare squared distances exactly, so
tie sets (which define relevant vectors and vertices) are never approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction as Q
from functools import lru_cache

import numpy as np

from . import exact
from .cvp import enum_nearest, enum_within
from .exact import Matrix, Vector, vec

H = Q(1, 2)

BW16_BASIS: Matrix = exact.mat([
    [2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [H, H, H, H, H, H, H, H, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0],
    [H, H, H, H, 0, 0, 0, 0, H, H, H, H, 0, 0, 0, 0],
    [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
    [H, H, 0, 0, H, H, 0, 0, H, H, 0, 0, H, H, 0, 0],
    [H, 0, H, 0, H, 0, H, 0, H, 0, H, 0, H, 0, H, 0],
    [H, H, H, H, H, H, H, H, H, H, H, H, H, H, H, H],
])

D4_BASIS: Matrix = exact.mat([
    [1, -1, 0, 0],
    [0, 1, -1, 0],
    [0, 0, 1, -1],
    [0, 0, 1, 1],
])

E8_BASIS: Matrix = exact.mat([
    [2, 0, 0, 0, 0, 0, 0, 0],
    [-1, 1, 0, 0, 0, 0, 0, 0],
    [0, -1, 1, 0, 0, 0, 0, 0],
    [0, 0, -1, 1, 0, 0, 0, 0],
    [0, 0, 0, -1, 1, 0, 0, 0],
    [0, 0, 0, 0, -1, 1, 0, 0],
    [0, 0, 0, 0, 0, -1, 1, 0],
    [H, H, H, H, H, H, H, H],
])

A2_BASIS: Matrix = exact.mat([
    [1, -1, 0],
    [0, 1, -1],
])


@dataclass(frozen=True)
class LatticePoint:
    """A lattice vector: integer coefficients plus exact ambient coordinates."""

    coeffs: tuple[int, ...]
    coords: Vector

    def __neg__(self) -> "LatticePoint":
        return LatticePoint(tuple(-c for c in self.coeffs), tuple(-x for x in self.coords))

    @property
    def norm2(self) -> Q:
        return exact.norm2(self.coords)


class Lattice:
    """Immutable lattice with exact basis, Gram matrix and volume."""

    def __init__(self, name: str, basis: Matrix):
        self.name = name
        self.basis = basis
        self.n = len(basis)
        self.m = len(basis[0])
        self.gram = exact.matmul(basis, exact.transpose(basis))
        self.volume_sq = exact.det(self.gram)
        if self.volume_sq <= 0:
            raise ValueError("degenerate basis")
        if self.n == self.m:
            self.volume = abs(exact.det(basis))
        else:
            r = _sqrt_q(self.volume_sq)
            self.volume = r  # None when irrational
        self._gram_inv = exact.inverse(self.gram)
        # scaled integer Gram for exact distance evaluation
        gd = math.lcm(*(x.denominator for row in self.gram for x in row))
        self._gram_scale = gd
        self._gram_int = np.array(
            [[int(x * gd) for x in row] for row in self.gram], dtype=np.int64
        )
        self._chol = np.linalg.cholesky(
            np.array([[float(x) for x in row] for row in self.gram])
        ).T.copy()  # upper triangular
        self._basis_f = np.array([[float(x) for x in row] for row in basis])
        bd = math.lcm(*(x.denominator for row in basis for x in row))
        self._basis_den = bd
        self._basis_int = np.array(
            [[int(x * bd) for x in row] for row in basis], dtype=np.int64
        )

    def __repr__(self):
        return f"Lattice({self.name}, n={self.n})"

    def point(self, coeffs) -> LatticePoint:
        coeffs = tuple(int(c) for c in coeffs)
        num = np.array(coeffs, dtype=np.int64) @ self._basis_int
        den = self._basis_den
        coords = tuple(Q(int(a), den) for a in num)
        return LatticePoint(coeffs, coords)

    def tie_coeffs(self, t: Vector) -> list[tuple[int, ...]]:
        """Coefficient vectors of all closest points to the exact target t."""
        cands, dist2 = self._tie_candidates(t)
        keep = cands[dist2 == dist2.min()]
        return [tuple(int(c) for c in u) for u in keep]

    def coeff_target(self, x: Vector) -> Vector:
        """Exact coefficients t with t.B = projection of x onto span(B)."""
        if len(x) != self.m:
            raise ValueError("dimension mismatch")
        bx = exact.matvec(self.basis, x)
        return exact.matvec(self._gram_inv, bx)

    def closest_points(self, x: Vector) -> list[LatticePoint]:
        """All lattice points at exactly minimal distance from x."""
        x = vec(x)
        t = self.coeff_target(x)
        cands, dist2 = self._tie_candidates(t)
        keep = cands[dist2 == dist2.min()]
        return [self.point(u) for u in keep]

    def min_dist2(self, x: Vector) -> Q:
        """Exact squared distance from x to the lattice (within span(B))."""
        t = self.coeff_target(vec(x))
        cands, dist2 = self._tie_candidates(t)
        u = cands[int(np.argmin(dist2))]
        diff = exact.vsub(t, vec(int(c) for c in u))
        return exact.dot(diff, exact.matvec(self.gram, diff))

    def _tie_candidates(self, t: Vector):
        """Integer coefficient candidates near t plus exact scaled distances.

        Returns (candidates, dist2_scaled) where dist2_scaled is an integer
        array proportional to the exact squared distances (common positive
        factor), so exact comparisons reduce to integer comparisons.
        """
        tf = np.array([float(a) for a in t])
        best, _ = enum_nearest(self._chol, tf)
        radius2 = best * (1.0 + 1e-9) + 1e-9
        cap = 4096
        while True:
            out = np.empty((cap, self.n), dtype=np.int64)
            cnt = enum_within(self._chol, tf, radius2, out)
            if cnt >= 0:
                break
            cap *= 4
            if cap > 2**24:
                raise RuntimeError("candidate cap exceeded in closest-point search")
        cands = out[:cnt]
        q = math.lcm(*(a.denominator for a in t))
        if q <= 10**4:
            tq = np.array([int(a * q) for a in t], dtype=np.int64)
            w = cands * q - tq
            dist2 = np.einsum("ij,jk,ik->i", w, self._gram_int, w)
        else:  # huge denominators: exact big-int fallback
            tq_b = [int(a * q) for a in t]
            g = self._gram_int
            dist2 = np.array([
                sum(
                    (int(u[i]) * q - tq_b[i]) * int(g[i][j]) * (int(u[j]) * q - tq_b[j])
                    for i in range(self.n)
                    for j in range(self.n)
                )
                for u in cands
            ], dtype=object)
        return cands, dist2

    def nearest_float(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise nearest lattice point coefficients, in floating point."""
        from .cvp import enum_nearest_batch

        t = xs @ np.linalg.pinv(self._basis_f)
        out = np.empty((xs.shape[0], self.n), dtype=np.int64)
        enum_nearest_batch(self._chol, np.ascontiguousarray(t), out)
        return out


def _sqrt_q(x: Q) -> Q | None:
    """Exact square root of a rational, or None when irrational."""
    np_, dp = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if np_ * np_ == x.numerator and dp * dp == x.denominator:
        return Q(np_, dp)
    return None


@lru_cache(maxsize=None)
def make_lattice(name: str) -> Lattice:
    """Named lattice constructor: Zn(k), A2, D4, E8, BW16."""
    key = name.strip()
    low = key.lower()
    if low.startswith("zn(") and low.endswith(")"):
        k = int(low[3:-1])
        if k < 1:
            raise ValueError("dimension must be positive")
        return Lattice(f"Zn({k})", exact.identity(k))
    if low.startswith("z") and low[1:].isdigit():
        return make_lattice(f"Zn({int(low[1:])})")
    if low == "a2":
        return Lattice("A2", A2_BASIS)
    if low == "d4":
        return Lattice("D4", D4_BASIS)
    if low == "e8":
        return Lattice("E8", E8_BASIS)
    if low == "bw16":
        return Lattice("BW16", BW16_BASIS)
    raise ValueError(f"unknown lattice name: {name!r}")


def closest_points(L: Lattice, x) -> set[LatticePoint]:
    """The set of ALL lattice points at minimal distance from x."""
    return set(L.closest_points(vec(x)))


def in_voronoi(L: Lattice, x) -> bool:
    """True iff the origin is among the closest lattice points to x."""
    x = vec(x)
    zero = (0,) * L.n
    return any(p.coeffs == zero for p in L.closest_points(x))
