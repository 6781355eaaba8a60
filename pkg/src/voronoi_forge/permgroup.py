"""Stabilizer chains (base and strong generating set) for permutation groups.

Deterministic Schreier-Sims construction.  Elements are permutation arrays
optionally paired with a payload (here: an exact matrix) that is multiplied
alongside, so coset representatives in the chain can be mapped back from the
permutation action to the matrix group that induced it.
"""

from __future__ import annotations

import itertools

import numpy as np


class Element:
    """A permutation with an optional payload carried through products."""

    __slots__ = ("perm", "payload")

    def __init__(self, perm: np.ndarray, payload=None):
        self.perm = perm
        self.payload = payload

    def __mul__(self, other: "Element") -> "Element":
        # (self * other)(x) = self(other(x))
        pay = None
        if self.payload is not None:
            pay = self.payload * other.payload
        return Element(self.perm[other.perm], pay)

    def inv(self) -> "Element":
        p = np.empty_like(self.perm)
        p[self.perm] = np.arange(len(self.perm), dtype=self.perm.dtype)
        pay = self.payload.inv() if self.payload is not None else None
        return Element(p, pay)

    def is_identity(self) -> bool:
        return bool(np.all(self.perm == np.arange(len(self.perm), dtype=self.perm.dtype)))

    def __call__(self, x: int) -> int:
        return int(self.perm[x])


def identity_element(degree: int, payload=None) -> Element:
    return Element(np.arange(degree, dtype=np.int32), payload)


def perm_from_cycles(cycles, degree: int, one_indexed: bool = True) -> np.ndarray:
    """Permutation array from cycle notation; cycle (a b c) maps a->b->c->a."""
    p = np.arange(degree, dtype=np.int32)
    off = 1 if one_indexed else 0
    for cyc in cycles:
        for i, a in enumerate(cyc):
            b = cyc[(i + 1) % len(cyc)]
            p[a - off] = b - off
    return p


class _Level:
    __slots__ = ("base", "gens", "transversal", "done")

    def __init__(self, base: int, id_elem: Element):
        self.base = base
        self.gens: list[Element] = []
        self.transversal: dict[int, Element] = {base: id_elem}
        # (point, gen index) pairs whose Schreier generator already sifted to
        # identity; stays valid because the chain only ever grows
        self.done: set[tuple[int, int]] = set()

    def recompute_orbit(self):
        frontier = list(self.transversal)
        while frontier:
            new = []
            for pt in frontier:
                u = self.transversal[pt]
                for g in self.gens:
                    q = g(pt)
                    if q not in self.transversal:
                        self.transversal[q] = g * u
                        new.append(q)
            frontier = new


class StabilizerChain:
    """BSGS of the group generated by the given elements."""

    def __init__(self, gens: list[Element], degree: int, id_payload=None):
        self.degree = degree
        self._id = identity_element(degree, id_payload)
        self.levels: list[_Level] = []
        for g in gens:
            self.extend(g)

    # -- queries ----------------------------------------------------------

    def order(self) -> int:
        n = 1
        for lvl in self.levels:
            n *= len(lvl.transversal)
        return n

    def sift(self, g: Element) -> Element:
        """Residue of g after stripping through the chain (identity iff member)."""
        h, _ = self._strip(g, 0)
        return h

    def contains(self, g: Element) -> bool:
        return self.sift(g).is_identity()

    def base(self) -> list[int]:
        return [lvl.base for lvl in self.levels]

    def elements(self):
        """Stream every group element exactly once, lazily.

        Each element is a product of one transversal representative per
        level; the stream length equals the group order.
        """
        transversals = [list(lvl.transversal.values()) for lvl in self.levels]
        if not transversals:
            yield self._id
            return
        for combo in itertools.product(*transversals):
            g = combo[0]
            for u in combo[1:]:
                g = g * u
            yield g

    # -- construction ------------------------------------------------------

    def _strip(self, g: Element, start: int) -> tuple[Element, int]:
        h = g
        for i in range(start, len(self.levels)):
            lvl = self.levels[i]
            x = h(lvl.base)
            u = lvl.transversal.get(x)
            if u is None:
                return h, i
            h = u.inv() * h
        return h, len(self.levels)

    def extend(self, g: Element) -> bool:
        """Add a generator; returns True if the group grew."""
        h, j = self._strip(g, 0)
        if h.is_identity():
            return False
        self._insert(h, j)
        self._schreier_sims()
        return True

    def _insert(self, h: Element, j: int):
        """Install residue h, which fixes the first j base points, as a
        strong generator at every level it stabilizes."""
        if j == len(self.levels):
            idn = np.arange(self.degree, dtype=h.perm.dtype)
            moved = int(np.nonzero(h.perm != idn)[0][0])
            self.levels.append(_Level(moved, self._id))
        for lvl in self.levels[: j + 1]:
            lvl.gens.append(h)
            lvl.recompute_orbit()

    def _schreier_sims(self):
        """Verify/complete the chain: all Schreier generators must sift to
        identity; any non-trivial residue becomes a new strong generator."""
        i = len(self.levels) - 1
        while i >= 0:
            lvl = self.levels[i]
            lvl.recompute_orbit()
            restart = False
            for pt in list(lvl.transversal):
                u = lvl.transversal[pt]
                for gi, g in enumerate(lvl.gens):
                    if (pt, gi) in lvl.done:
                        continue
                    q = g(pt)
                    schreier = lvl.transversal[q].inv() * (g * u)
                    if schreier.is_identity():
                        lvl.done.add((pt, gi))
                        continue
                    h, j = self._strip(schreier, i + 1)
                    if h.is_identity():
                        lvl.done.add((pt, gi))
                        continue
                    self._insert(h, j)
                    i = j
                    restart = True
                    break
                if restart:
                    break
            if not restart:
                i -= 1
