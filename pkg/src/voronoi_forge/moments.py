"""Exact volumes, first moments and second-moment tensors of Voronoi faces.

Faces are decomposed into signed pyramids over their children, recursively
down to the vertices.  To keep every stored quantity rational, the moments
of a d-face F are carried in "hatted" form M^ = M / lambda_F, where
lambda_F = sqrt(det D_F D_F^T) for the face's chosen rational direction
basis D_F.  The pyramid recursion then only ever needs the rational factor
h^ = s * lambda_C / lambda_F (s the signed apex height), which equals a
signed determinant of exact rational coordinates.  For the full region the
direction basis is the identity, lambda = 1, and the hatted moments are the
true ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, getcontext
from fractions import Fraction as Q

import numpy as np

from . import exact
from .exact import Matrix, Vector, vec
from .faces import Face, Hierarchy

ZERO = Q(0)


@dataclass
class MomentData:
    """Volume, first moment and second-moment tensor of a d-face."""

    dim: int
    M0: Q
    M1: Vector
    M2: Matrix


def _zero_moments(dim: int, m: int) -> MomentData:
    return MomentData(dim, ZERO, (ZERO,) * m, tuple(((ZERO,) * m,) * m))


def _add(a: MomentData, b: MomentData) -> MomentData:
    return MomentData(a.dim, a.M0 + b.M0, exact.vadd(a.M1, b.M1),
                      exact.mat_add(a.M2, b.M2))


def vertex_moments(v: Vector) -> MomentData:
    """Base case: counting measure on a point."""
    v = vec(v)
    return MomentData(0, Q(1), v, exact.outer(v, v))


def pyramid_accumulate(base: MomentData, apex: Vector, base_offset: Q) -> MomentData:
    """Moments of the pyramid with the given base and apex.

    base_offset s is the signed distance from the apex to the base's affine
    hull (positive when the apex lies on the face-interior side); in the
    hatted recursion the rational factor s*lambda_base/lambda_parent is
    passed instead, which by linearity yields the parent's hatted moments.
    """
    a = vec(apex)
    if len(a) != len(base.M1):
        raise ValueError("dimension mismatch between apex and base moments")
    d = base.dim + 1
    s = base_offset
    M0B, M1B, M2B = base.M0, base.M1, base.M2
    M0 = s * M0B / d
    M1 = exact.vadd(
        exact.vscale(s / d * M0B, a),
        exact.vscale(Q(1, d + 1) * s, exact.vsub(M1B, exact.vscale(M0B, a))),
    )
    aa = exact.outer(a, a)
    aM1 = exact.outer(a, M1B)
    M1a = exact.outer(M1B, a)
    t1 = exact.mat_scale(s / d * M0B, aa)
    t2 = exact.mat_scale(
        Q(1, d + 1) * s,
        exact.mat_sub(exact.mat_add(aM1, M1a), exact.mat_scale(2 * M0B, aa)),
    )
    t3 = exact.mat_scale(
        Q(1, d + 2) * s,
        exact.mat_add(exact.mat_sub(exact.mat_sub(M2B, aM1), M1a),
                      exact.mat_scale(M0B, aa)),
    )
    return MomentData(d, M0, M1, exact.mat_add(exact.mat_add(t1, t2), t3))


# -- rational frames -----------------------------------------------------------


@dataclass
class Frame:
    """A rational direction basis of a face's affine hull (rows span it)."""

    rows: Matrix  # d x m

    @property
    def dim(self) -> int:
        return len(self.rows)


def face_frame(vertices) -> Frame:
    """A direction basis from the differences of the face's vertices."""
    vs = sorted(vertices)
    v0 = vs[0]
    diffs = tuple(exact.vsub(v, v0) for v in vs[1:])
    if not diffs:
        return Frame(())
    return Frame(exact.row_space_basis(diffs))


def _in_frame_coords(frame: Frame, xs) -> Matrix:
    """Coordinates of ambient vectors (in the frame's row span) w.r.t. it."""
    D = frame.rows
    G = exact.matmul(D, exact.transpose(D))
    Ginv = exact.inverse(G)
    # u = x D^T G^-1 for each row x
    P = exact.matmul(exact.transpose(D), Ginv)
    return tuple(exact.vecmat(x, P) for x in xs)


def apex_of(frame: Frame, anchor: Vector) -> Vector:
    """Point of the affine hull (anchor + row span) nearest the origin."""
    if frame.dim == 0:
        return vec(anchor)
    D = frame.rows
    G = exact.matmul(D, exact.transpose(D))
    c = exact.solve(G, exact.matvec(D, anchor))
    return exact.vsub(vec(anchor), exact.vecmat(c, D))


def hat_height(parent: Frame, apex: Vector, child: Frame, child_point: Vector,
               interior: Vector) -> Q:
    """Signed rational factor s * lambda_child / lambda_parent.

    Computed as a d x d determinant of parent-frame coordinates: the child's
    basis rows plus (child_point - apex).  The sign is fixed so the factor
    is positive when the apex lies on the same side of the child's affine
    hull as the parent's interior point.
    """
    uw = _in_frame_coords(parent, (exact.vsub(child_point, apex),))[0]
    if child.dim:
        urows = _in_frame_coords(parent, child.rows)
    else:
        urows = ()
    phi_w = exact.det(urows + (uw,))
    if phi_w == 0:
        return ZERO
    ui = _in_frame_coords(parent, (exact.vsub(interior, apex),))[0]
    phi_i = exact.det(urows + (exact.vsub(ui, uw),))
    if phi_i == 0:
        raise ValueError("interior point lies on a child hyperplane")
    sigma = 1 if phi_i > 0 else -1
    return -sigma * phi_w


def accumulate_face(children_data, apex: Vector, parent_frame: Frame,
                    interior: Vector, m: int) -> MomentData:
    """Hatted moments of a face from its children's (moments, frame) pairs."""
    total = _zero_moments(parent_frame.dim, m)
    for child_md, child_frame, child_point in children_data:
        h = hat_height(parent_frame, apex, child_frame, child_point, interior)
        if h == 0:
            continue
        total = _add(total, pyramid_accumulate(child_md, apex, h))
    return total


def _centroid(vertices) -> Vector:
    vs = list(vertices)
    k = len(vs)
    acc = vs[0]
    for v in vs[1:]:
        acc = exact.vadd(acc, v)
    return exact.vscale(Q(1, k), acc)


def face_moments(F: Face, class_cache: dict) -> MomentData:
    """Hatted moments of one face, with all children already in the cache.

    class_cache maps a face key to (MomentData, Frame) of that face; the
    children are looked up through class_cache['__children__'][F.key()].
    """
    kids = class_cache["__children__"][F.key()]
    if F.dim == 0:
        (v,) = F.vertices
        return vertex_moments(v)
    missing = [c for c in kids if c.key() not in class_cache]
    if missing:
        raise KeyError(f"missing child moment data for {missing[0]!r}")
    if F.dim == len(next(iter(F.vertices))):
        frame = Frame(exact.identity(F.dim))
    else:
        frame = face_frame(F.vertices)
    anchor = sorted(F.vertices)[0]
    apex = apex_of(frame, anchor)
    interior = _centroid(F.vertices)
    data = [(class_cache[c.key()][0], class_cache[c.key()][1],
             sorted(c.vertices)[0]) for c in kids]
    return accumulate_face(data, apex, frame, interior, len(anchor))


def region_moments(h: Hierarchy) -> MomentData:
    """Exact moments of the full Voronoi region from its face lattice."""
    cache: dict = {"__children__": h.children_of}
    for d in range(0, h.L.n + 1):
        for F in h.faces_by_dim[d]:
            md = face_moments(F, cache)
            if d == h.L.n:
                return md
            if h.L.n == h.L.m and d == h.L.n:
                frame = Frame(exact.identity(h.L.n))
            else:
                frame = face_frame(F.vertices)
            cache[F.key()] = (md, frame)
    raise RuntimeError("hierarchy has no full-dimensional face")


# -- quantizer constant ---------------------------------------------------------


def _factorize(k: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= k:
        while k % d == 0:
            out[d] = out.get(d, 0) + 1
            k //= d
        d += 1 if d == 2 else 2
    if k > 1:
        out[k] = out.get(k, 0) + 1
    return out


def _rational_power_surd(V: Q, e: Q):
    """V**e as (rational, radicand) with V**e = rational * sqrt(radicand),
    or None when the exponents do not reduce to half-integers."""
    fac: dict[int, Q] = {}
    for p, k in _factorize(V.numerator).items():
        fac[p] = fac.get(p, ZERO) + k * e
    for p, k in _factorize(V.denominator).items():
        fac[p] = fac.get(p, ZERO) - k * e
    coef = Q(1)
    rad = 1
    for p, a in fac.items():
        if a.denominator == 1:
            coef *= Q(p) ** int(a)
        elif a.denominator == 2:
            half = a - Q(1, 2)  # a = half + 1/2 with half integral
            coef *= Q(p) ** int(half)
            rad *= p
        else:
            return None
    return coef, rad


def quantizer_constant(U: Q, V: Q, n: int, digits: int = 16) -> dict:
    """G = (1/n) U / V**(1+2/n), exactly when the power is a quadratic surd.

    Returns {"coefficient", "radicand", "exact", "decimal"}: when exact,
    G = coefficient * sqrt(radicand); otherwise only the decimal is valid.
    """
    if V <= 0:
        raise ValueError("V must be positive")
    if U == 0:
        return {"coefficient": ZERO, "radicand": 1, "exact": True,
                "decimal": render_decimal(ZERO, 1, digits)}
    e = Q(n + 2, n)
    surd = _rational_power_surd(V, e)
    if surd is not None:
        coef, rad = surd
        # 1/(coef*sqrt(rad)) = sqrt(rad)/(coef*rad)
        g_coef = U / (n * coef * rad)
        return {"coefficient": g_coef, "radicand": rad, "exact": True,
                "decimal": render_decimal(g_coef, rad, digits)}
    getcontext().prec = max(digits + 10, 40)
    vp = Decimal(V.numerator) / Decimal(V.denominator)
    power = (vp.ln() * (Decimal(n + 2) / Decimal(n))).exp()
    g = Decimal(U.numerator) / Decimal(U.denominator) / (n * power)
    return {"coefficient": None, "radicand": None, "exact": False,
            "decimal": _fmt_decimal(g, digits)}


def render_decimal(coef: Q, radicand: int, digits: int = 16) -> str:
    """Decimal string of coef * sqrt(radicand) to the requested precision."""
    getcontext().prec = max(digits + 10, 40)
    val = (Decimal(coef.numerator) / Decimal(coef.denominator)
           * Decimal(radicand).sqrt())
    return _fmt_decimal(val, digits)


def _fmt_decimal(val: Decimal, digits: int) -> str:
    if val == 0:
        return "0"
    exp = val.adjusted()  # position of the leading digit
    quant = Decimal(1).scaleb(exp - digits + 1)
    return str(val.quantize(quant))


def isotropy_check(M2: Matrix, n: int) -> bool:
    """True iff M2 is exactly a multiple of the identity."""
    tr = exact.trace(M2)
    lam = tr / n
    for i in range(n):
        for j in range(n):
            want = lam if i == j else ZERO
            if M2[i][j] != want:
                return False
    return True


# -- extended mode: exact BW16 moments from the classified hierarchy -------------


def _ext_frame(E, F) -> Frame:
    """A rational direction basis for an extended-mode face.

    Greedily picks vertex differences that are independent modulo a large
    prime (which implies exact independence), falling back to exact rank
    tests if the modular screen rejects too much; the final exact rank
    assertion certifies the frame.
    """
    from .faces import _rank_modp_reached, _P1

    d = F.dim
    rows = E.vint[F.vidx]
    v0 = rows[0]
    sel: list = []
    for i in range(1, rows.shape[0]):
        if len(sel) == d:
            break
        cand = np.array(sel + [rows[i] - v0], dtype=np.int64)
        if _rank_modp_reached(cand.copy(), len(sel) + 1, _P1):
            sel.append(rows[i] - v0)
    if len(sel) < d:  # modular screen was too strict; redo exactly
        sel = []
        base = ()
        for i in range(1, rows.shape[0]):
            if len(sel) == d:
                break
            diff = tuple(Q(int(a), E.den) for a in rows[i] - v0)
            if exact.rank(base + (diff,)) == len(sel) + 1:
                sel.append(rows[i] - v0)
                base = base + (diff,)
    frame_rows = tuple(tuple(Q(int(a), E.den) for a in s) for s in sel)
    if exact.rank(frame_rows) != d:
        raise RuntimeError("frame construction failed to reach face dimension")
    return Frame(frame_rows)


def _ext_vertex(E, gid: int) -> Vector:
    return tuple(Q(int(a), E.den) for a in E.vint[gid])


def _ext_centroid(E, F) -> Vector:
    s = E.vint[F.vidx].sum(axis=0)
    k = F.vidx.size
    return tuple(Q(int(a), E.den * k) for a in s)


def _transport(md: MomentData, frame: Frame, anchor: Vector, g) -> tuple:
    """Image of (hatted moments, frame, anchor) under a group element."""
    A = g.matrix()
    M1 = exact.matvec(A, md.M1)
    M2 = exact.matmul(exact.matmul(A, md.M2), exact.transpose(A))
    rows = tuple(g.apply(r) for r in frame.rows)
    return (MomentData(md.dim, md.M0, M1, M2), Frame(rows), g.apply(anchor))


def _mom_path(checkpoint: str, d: int) -> str:
    import os

    return os.path.join(checkpoint, f"moments{d:02d}.jsonl")


def _save_moment_level(checkpoint: str | None, d: int, entries) -> None:
    if not checkpoint:
        return
    import json

    with open(_mom_path(checkpoint, d), "w") as fh:
        for md, frame, anchor in entries:
            fh.write(json.dumps({
                "M0": exact.fmt_q(md.M0),
                "M1": exact.fmt_vec(md.M1),
                "M2": exact.fmt_mat(md.M2),
                "frame": exact.fmt_mat(frame.rows),
                "anchor": exact.fmt_vec(anchor),
            }) + "\n")


def _load_moment_level(checkpoint: str | None, d: int):
    import json
    import os

    if not checkpoint or not os.path.exists(_mom_path(checkpoint, d)):
        return None
    out = []
    with open(_mom_path(checkpoint, d)) as fh:
        for line in fh:
            rec = json.loads(line)
            md = MomentData(
                d, exact.parse_q(rec["M0"]),
                vec(exact.parse_q(x) for x in rec["M1"]),
                exact.mat([[exact.parse_q(x) for x in row] for row in rec["M2"]]))
            frame = Frame(exact.mat([[exact.parse_q(x) for x in row]
                                     for row in rec["frame"]])
                          if rec["frame"] else ())
            anchor = vec(exact.parse_q(x) for x in rec["anchor"])
            out.append((md, frame, anchor))
    return out


def extended_moments(ctx, checkpoint: str | None = None, digits: int = 16) -> dict:
    """Exact region moments of BW16 from a completed extended face run.

    Walks the classified hierarchy bottom-up: every face class carries hatted
    moments computed from its children's class representatives, transported
    by the stored transformations.  Requires the face checkpoints of
    extended_build for dimensions 0..14; per-dimension moment results are
    themselves checkpointed.  Returns U, V, the quantizer constant and the
    per-dimension class counts.
    """
    from . import faces as fc

    E = fc.ext_data(ctx)
    levels = {}
    for d in range(0, 15):
        lvl, done = fc._load_level(E, checkpoint, d)
        if not done:
            raise RuntimeError(
                f"face classification for dimension {d} is incomplete; run "
                "the extended face build to completion first")
        levels[d] = lvl
    top = fc.ExtLevel(15)
    top.classes = list(E.facet_faces)
    levels[15] = top

    cache: dict[int, list] = {}
    for d in range(0, 16):
        loaded = _load_moment_level(checkpoint, d)
        if loaded is not None and len(loaded) == len(levels[d].classes):
            cache[d] = loaded
            continue
        entries = []
        for i, F in enumerate(levels[d].classes):
            if d == 0:
                v = _ext_vertex(E, int(F.vidx[0]))
                entries.append((vertex_moments(v), Frame(()), v))
                continue
            frame = _ext_frame(E, F)
            anchor = _ext_vertex(E, int(F.vidx[0]))
            apex = apex_of(frame, anchor)
            interior = _ext_centroid(E, F)
            total = _zero_moments(d, E.L.n)
            below = levels[d - 1]
            for digest in below.kids[i]:
                cls, gser = below.seen[digest]
                g = fc._deser_elem(E.L, gser)
                cmd, cframe, canchor = cache[d - 1][cls]
                tmd, tframe, tanchor = _transport(cmd, cframe, canchor, g)
                h = hat_height(frame, apex, tframe, tanchor, interior)
                if h == 0:
                    continue
                total = _add(total, pyramid_accumulate(tmd, apex, h))
            entries.append((total, frame, anchor))
        cache[d] = entries
        _save_moment_level(checkpoint, d, entries)

    # top level: scalar accumulation over the two facet orbits (volume and
    # the second-moment trace are rotation invariant, so each orbit member
    # contributes exactly what its representative's pyramid does)
    n = E.L.n
    frame_top = Frame(exact.identity(n))
    origin = vec([Q(0)] * n)
    V = Q(0)
    U = Q(0)
    for i, orbit_size in enumerate((4320, 61440)):
        md, frame, anchor = cache[15][i]
        h = hat_height(frame_top, origin, frame, anchor, origin)
        pyr = pyramid_accumulate(md, origin, h)
        V += orbit_size * pyr.M0
        U += orbit_size * exact.trace(pyr.M2)
    g = quantizer_constant(U, V, n, digits=digits)
    counts = {str(d): len(levels[d].classes) for d in range(0, 16)}
    counts["16"] = 1
    return {
        "U": exact.fmt_q(U),
        "V": exact.fmt_q(V),
        "G": {
            "coefficient": exact.fmt_q(g["coefficient"]) if g["exact"] else None,
            "radicand": g["radicand"],
            "decimal": g["decimal"],
            "exact": g["exact"],
        },
        "classes_per_dim": counts,
    }
