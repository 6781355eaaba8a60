"""Exact rational scalars, vectors and matrices.

Rationals are ``fractions.Fraction`` (always reduced, positive denominator,
canonical zero), vectors are tuples of Fractions and matrices are tuples of
such tuples.  Everything here is immutable and hashable, so vectors can key
dictionaries and sets by structural equality.
"""

from __future__ import annotations

from fractions import Fraction as Q
from typing import Iterable, Sequence

Vector = tuple[Q, ...]
Matrix = tuple[Vector, ...]


class NoSolution(Exception):
    """Raised when a linear system is inconsistent."""


def vec(entries: Iterable) -> Vector:
    """Build an exact vector from any iterable of rational-like entries."""
    return tuple(Q(e) for e in entries)


def mat(rows: Iterable[Iterable]) -> Matrix:
    """Build an exact matrix; all rows must have equal length."""
    m = tuple(vec(r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise ValueError("ragged rows")
    return m


def zeros(n: int) -> Vector:
    return (Q(0),) * n


def identity(n: int) -> Matrix:
    return tuple(tuple(Q(1) if i == j else Q(0) for j in range(n)) for i in range(n))


def vadd(x: Vector, y: Vector) -> Vector:
    return tuple(a + b for a, b in zip(x, y, strict=True))


def vsub(x: Vector, y: Vector) -> Vector:
    return tuple(a - b for a, b in zip(x, y, strict=True))


def vscale(c, x: Vector) -> Vector:
    c = Q(c)
    return tuple(c * a for a in x)


def dot(x: Vector, y: Vector) -> Q:
    if len(x) != len(y):
        raise ValueError("dimension mismatch")
    return sum((a * b for a, b in zip(x, y)), Q(0))


def norm2(x: Vector) -> Q:
    """Exact squared Euclidean length."""
    return sum((a * a for a in x), Q(0))


def matvec(A: Matrix, x: Vector) -> Vector:
    return tuple(dot(row, x) for row in A)


def vecmat(x: Vector, A: Matrix) -> Vector:
    if len(A) != len(x):
        raise ValueError("dimension mismatch")
    n = len(A[0])
    return tuple(sum((x[i] * A[i][j] for i in range(len(x))), Q(0)) for j in range(n))


def matmul(A: Matrix, B: Matrix) -> Matrix:
    if len(B) != len(A[0]):
        raise ValueError("dimension mismatch")
    Bt = transpose(B)
    return tuple(tuple(dot(row, col) for col in Bt) for row in A)


def transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A)) if A else ()


def outer(x: Vector, y: Vector) -> Matrix:
    return tuple(tuple(a * b for b in y) for a in x)


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(vadd(r, s) for r, s in zip(A, B, strict=True))


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(vsub(r, s) for r, s in zip(A, B, strict=True))


def mat_scale(c, A: Matrix) -> Matrix:
    return tuple(vscale(c, r) for r in A)


def trace(A: Matrix) -> Q:
    return sum((A[i][i] for i in range(len(A))), Q(0))


def _echelon(rows: list[list[Q]], rhs: list[Q] | None = None):
    """In-place Gaussian elimination; returns (rank, pivot column list)."""
    if not rows:
        return 0, []
    n_cols = len(rows[0])
    piv_cols = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        if rhs is not None:
            rhs[r], rhs[pivot] = rhs[pivot], rhs[r]
        inv = 1 / rows[r][c]
        rows[r] = [a * inv for a in rows[r]]
        if rhs is not None:
            rhs[r] *= inv
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
                if rhs is not None:
                    rhs[i] -= f * rhs[r]
        piv_cols.append(c)
        r += 1
        if r == len(rows):
            break
    return r, piv_cols


def rank(A: Matrix) -> int:
    """Exact rank over the rationals."""
    rows = [list(r) for r in A]
    rk, _ = _echelon(rows)
    return rk


def affine_rank(points: Iterable[Vector]) -> int:
    """Rank of the difference set {p - p0}; 0 for a single point."""
    pts = list(points)
    if not pts:
        raise ValueError("empty point set")
    p0 = pts[0]
    return rank(tuple(vsub(p, p0) for p in pts[1:])) if len(pts) > 1 else 0


def solve(A: Matrix, b: Vector) -> Vector:
    """Exact solution of Ax = b for square or consistent overdetermined A.

    Raises NoSolution when the system is inconsistent and ValueError when the
    solution is not unique (rank-deficient coefficient matrix).
    """
    if len(A) != len(b):
        raise ValueError("dimension mismatch")
    n_cols = len(A[0]) if A else 0
    if len(A) < n_cols:
        raise ValueError("underdetermined system")
    rows = [list(r) for r in A]
    rhs = list(b)
    rk, piv_cols = _echelon(rows, rhs)
    for i in range(rk, len(rows)):
        if rhs[i] != 0:
            raise NoSolution("inconsistent system")
    if rk < n_cols:
        raise ValueError("rank-deficient system: solution not unique")
    x = [Q(0)] * n_cols
    for r, c in enumerate(piv_cols):
        x[c] = rhs[r]
    return tuple(x)


def solve_consistent(A: Matrix, b: Vector) -> Vector | None:
    """Like solve() but returns None instead of raising NoSolution."""
    try:
        return solve(A, b)
    except NoSolution:
        return None


def det(A: Matrix) -> Q:
    """Exact determinant of a square matrix."""
    n = len(A)
    if any(len(r) != n for r in A):
        raise ValueError("not square")
    rows = [list(r) for r in A]
    d = Q(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if pivot is None:
            return Q(0)
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            d = -d
        d *= rows[c][c]
        inv = 1 / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return d


def inverse(A: Matrix) -> Matrix:
    """Exact inverse of a nonsingular square matrix."""
    n = len(A)
    rows = [list(r) + [Q(1) if i == j else Q(0) for j in range(n)] for i, r in enumerate(A)]
    rk, piv = _echelon(rows)
    if rk < n or piv != list(range(n)):
        raise ValueError("singular matrix")
    return tuple(tuple(rows[i][n:]) for i in range(n))


def row_space_basis(rows_in: Iterable[Vector]) -> Matrix:
    """A reduced-echelon rational basis of the row space."""
    rows = [list(r) for r in rows_in]
    rk, _ = _echelon(rows)
    return tuple(tuple(r) for r in rows[:rk])


def fmt_q(x: Q) -> str:
    """Render a rational as "p/q", or "p" when the denominator is 1."""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_q(s: str) -> Q:
    """Parse the "p/q" (or "p") rendering back into a Fraction."""
    return Q(s)


def fmt_vec(x: Vector) -> list[str]:
    return [fmt_q(a) for a in x]


def fmt_mat(A: Matrix) -> list[list[str]]:
    return [fmt_vec(r) for r in A]


def q_to_decimal(x: Q, digits: int = 16) -> str:
    """Decimal rendering of a rational, rounded to `digits` fractional digits."""
    sign = "-" if x < 0 else ""
    x = abs(x)
    scaled = x * 10**digits
    i = scaled.numerator // scaled.denominator
    if 2 * (scaled.numerator % scaled.denominator) >= scaled.denominator:
        i += 1
    whole, frac = divmod(i, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}" if digits else f"{sign}{whole}"
