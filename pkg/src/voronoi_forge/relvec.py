"""Enumeration of relevant vectors (facet normals) of a lattice.

A nonzero lattice vector r is relevant iff its midpoint r/2 has exactly the
two closest lattice points {0, r}.  Following the classical search, only the
2^n - 1 nonzero binary coefficient classes need to be probed: for each such c
the midpoint m = c.B/2 is decoded exactly, and a tie set of exactly two
points {w, w'} yields the relevant pair +-(w - w').
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction as Q

from . import exact
from .lattice import Lattice, LatticePoint


@dataclass(frozen=True)
class RelevantVectorSet:
    """All relevant vectors of a lattice, with counts per squared length."""

    vectors: tuple[LatticePoint, ...]
    by_norm: dict

    def __len__(self):
        return len(self.vectors)

    def min_norm2(self) -> Q:
        return min(self.by_norm)


def relevant_vectors(L: Lattice, progress=None) -> RelevantVectorSet:
    """Enumerate the complete set of relevant vectors of L."""
    n = L.n
    seen: dict[tuple[int, ...], LatticePoint] = {}
    half = Q(1, 2)
    for mask in range(1, 2**n):
        # midpoint c.B/2 has exact coefficient vector c/2
        t = tuple(half if (mask >> i) & 1 else Q(0) for i in range(n))
        ties = L.tie_coeffs(t)
        if len(ties) == 2:
            w, wp = ties
            dc = tuple(a - b for a, b in zip(w, wp))
            if dc not in seen:
                r = L.point(dc)
                seen[dc] = r
                seen[tuple(-a for a in dc)] = -r
        if progress is not None and mask % 4096 == 0:
            progress(mask, 2**n - 1)
    vecs = tuple(seen.values())
    by_norm = Counter(v.norm2 for v in vecs)
    return RelevantVectorSet(vecs, dict(by_norm))


def packing_kissing(L: Lattice, R: RelevantVectorSet) -> tuple[Q, int]:
    """(exact squared packing radius, kissing number) from a complete set."""
    m = R.min_norm2()
    return m / 4, R.by_norm[m]


def brute_force_relevant_vectors(L: Lattice) -> set[tuple]:
    """Definition-level oracle for small lattices.

    Checks every lattice point w in a box large enough to cover twice the
    covering-radius bound and keeps those whose midpoint ties exactly {0, w}.
    Exponential in the dimension; intended for n <= 4 cross-checks.
    """
    if L.n > 4:
        raise ValueError("oracle limited to n <= 4")
    import itertools

    # any vector of squared length > 4 * max_i ||b_i||^2 cannot be relevant
    bound = 4 * max(exact.norm2(row) for row in L.basis)
    rng = range(-6, 7)
    out = set()
    for coeffs in itertools.product(rng, repeat=L.n):
        if all(c == 0 for c in coeffs):
            continue
        w = L.point(coeffs)
        if w.norm2 > bound:
            continue
        mid = exact.vscale(Q(1, 2), w.coords)
        ties = L.closest_points(mid)
        if len(ties) == 2:
            tie_coeffs = sorted(p.coeffs for p in ties)
            if tie_coeffs == sorted([(0,) * L.n, w.coeffs]):
                out.add(w.coords)
    return out
