"""Command-line entry point wiring all modules together.

Exit codes: 0 success, 1 domain error (bad lattice, failed verification),
2 usage error.  All structured output is UTF-8 JSON or CSV; rationals are
rendered as "p/q" strings and big integers as decimal strings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction as Q

from . import exact
from . import faces as fc
from . import group as grp
from . import moments as mm
from . import montecarlo as mc
from .exact import fmt_q, parse_q, vec
from .lattice import Lattice, make_lattice


class DomainError(Exception):
    """A well-formed request that cannot be satisfied."""


def _configure_threads(args) -> None:
    k = getattr(args, "threads", None)
    if k is None:
        env = os.environ.get("VORONOI_FORGE_THREADS")
        k = int(env) if env else None
    if k:
        try:
            import numba

            numba.set_num_threads(max(1, k))
        except Exception:
            pass


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _lattice(name: str) -> Lattice:
    try:
        return make_lattice(name)
    except ValueError as e:
        raise DomainError(str(e)) from None


def _named_generators(L: Lattice):
    name = L.name.lower()
    if name == "bw16":
        return grp.bw16_generators(L)
    if name.startswith("zn("):
        return fc.zn_generators(L)
    if name == "d4":
        return fc.d4_generators(L)
    raise DomainError(f"no built-in generator set for {L.name}")


# -- lattice ---------------------------------------------------------------


def cmd_lattice_info(args) -> int:
    L = _lattice(args.name)
    out = {
        "name": L.name,
        "rank": L.n,
        "ambient_dimension": L.m,
        "volume_sq": fmt_q(L.volume_sq),
        "volume": fmt_q(L.volume) if L.volume is not None else None,
    }
    if L.n == L.m:
        out["determinant"] = fmt_q(exact.det(L.basis))
    if L.n <= 8:
        R = fc.cached_relevant_vectors(L)
        from .relvec import packing_kissing

        p2, kiss = packing_kissing(L, R)
        out["packing_radius_sq"] = fmt_q(p2)
        out["kissing_number"] = kiss
        if L.n <= 4 and L.n == L.m:
            verts = fc.enumerate_vertices_small(L, R)
            out["covering_radius_sq"] = fmt_q(max(exact.norm2(v) for v in verts))
    _emit(out)
    return 0


# -- relvecs ----------------------------------------------------------------


def cmd_relvecs(args) -> int:
    L = _lattice(args.name)
    R = fc.cached_relevant_vectors(L)
    counts = {fmt_q(k): v for k, v in sorted(R.by_norm.items())}
    _emit(counts)
    if args.full:
        for v in R.vectors:
            sys.stdout.write(json.dumps(exact.fmt_vec(v.coords)) + "\n")
    return 0


# -- group ------------------------------------------------------------------


def _parse_vector(L: Lattice, text: str):
    data = json.loads(text)
    v = vec(parse_q(str(x)) for x in data)
    if len(v) != L.m:
        raise DomainError(f"vector has length {len(v)}, expected {L.m}")
    return v


def cmd_group_order(args) -> int:
    L = _lattice(args.name)
    gens = _named_generators(L)
    order = grp.group_order(L, gens, vec(L.basis[0]), cap=args.cap)
    _emit({"order": str(order)})
    return 0


def cmd_group_orbit(args) -> int:
    L = _lattice(args.name)
    gens = _named_generators(L)
    x = _parse_vector(L, args.vector)
    om = grp.orbit(L, x, gens, condition=lambda v: False, cap=args.cap)
    _emit({"size": str(len(om))})
    return 0


def cmd_group_stabilizer(args) -> int:
    L = _lattice(args.name)
    gens = _named_generators(L)
    x = _parse_vector(L, args.vector)
    if L.name.lower() == "bw16":
        ctx = fc.bw16_context()
        G = ctx.group
    else:
        action = grp.action_from_orbits(L, gens, [vec(r) for r in L.basis])
        G = grp.MatrixGroup(L, gens, action)
    st = grp.stabilizer(L, x, gens, args.orbit_size, G, seed=args.seed)
    _emit({"order": str(st.order()), "group_order": str(G.order())})
    return 0


# -- faces -------------------------------------------------------------------


def _parse_dims(text, n):
    if text is None:
        return range(0, n + 1)
    if ".." in text:
        a, b = text.split("..")
        return range(int(a), int(b) + 1)
    d = int(text)
    return range(d, d + 1)


def cmd_faces_build(args) -> int:
    L = _lattice(args.name)
    if L.name.lower() == "bw16":
        return _faces_build_bw16(args)
    if L.n > 4:
        raise DomainError("explicit face hierarchies are limited to n <= 4 "
                          "(use bw16 for the facet-restricted pipeline)")
    h = fc.build_hierarchy(L)
    gens = _named_generators(L)
    vecs = set()
    for fl in h.faces_by_dim.values():
        for f in fl:
            vecs |= f.vertices | f.normals
    ctx = fc.small_group_context(L, gens, vecs)
    dims = _parse_dims(args.dims, L.n)
    for d in dims:
        classes = fc.classify_faces(h.faces_by_dim[d], [ctx])
        sys.stdout.write(json.dumps({"dim": d, "classes": len(classes)}) + "\n")
        for c in classes:
            F = c.representative
            kids = h.children_of.get(F.key(), [])
            rec = {
                "dim": d,
                "vertices": len(F.vertices),
                "children": len(kids),
                "normals": len(F.normals),
                "members_constructed": c.members_constructed,
            }
            if args.dump:
                rec["vertex_coords"] = [exact.fmt_vec(v) for v in sorted(F.vertices)]
            sys.stdout.write(json.dumps(rec) + "\n")
    return 0


def _faces_build_bw16(args) -> int:
    ctx = fc.bw16_context()
    if args.extended:
        try:
            return fc.extended_build(
                ctx, checkpoint=args.checkpoint, chain=args.chain,
                emit=lambda rec: sys.stdout.write(json.dumps(rec) + "\n"))
        except ValueError as e:
            raise DomainError(str(e)) from None
    sys.stdout.write(json.dumps({"dim": 15, "classes": 2}) + "\n")
    for which in ("n1", "n2"):
        fd = fc.bw16_facet(ctx, which)
        kids = fc.bw16_facet_children_count(ctx, fd)
        rec = {"dim": 15, "class": which, "vertices": fd.vertex_count,
               "children": kids, "normals": 1}
        sys.stdout.write(json.dumps(rec) + "\n")
    return 0


# -- moments -----------------------------------------------------------------


def cmd_moments_exact(args) -> int:
    L = _lattice(args.name)
    if L.name.lower() == "bw16" and not args.extended:
        raise DomainError("exact BW16 moments require --extended "
                          "(multi-hour face-hierarchy run)")
    if L.name.lower() == "bw16":
        out = mm.extended_moments(fc.bw16_context(), checkpoint=args.checkpoint,
                                  digits=args.digits)
        _emit(out)
        return 0
    if L.n > 4:
        raise DomainError("exact moments are limited to n <= 4 lattices")
    h = fc.build_hierarchy(L)
    md = mm.region_moments(h)
    U = exact.trace(md.M2)
    V = md.M0
    g = mm.quantizer_constant(U, V, L.n, digits=args.digits)
    _emit({
        "U": fmt_q(U),
        "V": fmt_q(V),
        "G": {
            "coefficient": fmt_q(g["coefficient"]) if g["exact"] else None,
            "radicand": g["radicand"],
            "decimal": g["decimal"],
            "exact": g["exact"],
        },
        "isotropic": mm.isotropy_check(md.M2, L.n),
    })
    return 0


# -- monte carlo ---------------------------------------------------------------


def cmd_mc_estimate(args) -> int:
    L = _lattice(args.name)
    if args.N < 2:
        raise DomainError("need N >= 2")
    est = mc.estimate(L, args.N, seed=args.seed)
    _emit({
        "N": est.N, "seed": est.seed,
        "U_hat": est.U_hat, "var_hat_U": est.var_hat_U,
        "G_hat": est.G_hat, "var_hat_G": est.var_hat_G,
    })
    return 0


def cmd_mc_compare(args) -> int:
    L = _lattice(args.lattice)
    rep = mc.compare_estimators(L, N=args.N, g=args.g, reps=args.reps,
                                seed=args.seed)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "direct", "jackknife"])
            for i in range(args.reps):
                w.writerow([i, repr(float(rep["direct"][i])),
                            repr(float(rep["jackknife"][i]))])
    summary = {k: rep[k] for k in
               ("N", "g", "reps", "seed", "exact_ref") if k in rep}
    for k in ("spread_direct", "spread_jackknife"):
        if k in rep:
            summary[k] = rep[k]
    if args.reps == 1:
        summary["direct"] = float(rep["direct"][0])
        summary["jackknife"] = float(rep["jackknife"][0])
    _emit(summary)
    return 0


# -- verify ---------------------------------------------------------------------


def verify_table1(progress=None) -> dict:
    """Re-derive every row of the BW16 normal/vertex class table.

    Checks norms, relevance (midpoint tie test) or vertexhood, orbit sizes
    (direct enumeration for the small orbits, |G|/|Stab| for the 66M ones),
    stabilizer orders (self-terminating random-coincidence search, no claimed
    orbit sizes fed in), and the orbit-stabilizer product for every row.
    """
    ctx = fc.bw16_context()
    L = ctx.L
    R = ctx.relvecs
    if progress:
        progress("building stabilizer chain for |G| ...")
    G_order = ctx.group.order()
    rows = []
    vertex_orbit_sum = 0
    for name, (v, norm_claim, orbit_claim, stab_claim) in grp.BW16_CLASS_REPS.items():
        row = {"name": name}
        row["norm2"] = {"expected": fmt_q(norm_claim),
                        "actual": fmt_q(exact.norm2(v)),
                        "ok": exact.norm2(v) == norm_claim}
        if name.startswith("n"):
            mid = exact.vscale(Q(1, 2), v)
            ties = {p.coords for p in L.closest_points(mid)}
            ok = ties == {(Q(0),) * 16, v}
            row["relevant"] = {"ok": ok}
        else:
            row["vertex"] = {"ok": fc.verify_vertex(L, v, R)}
        if progress:
            progress(f"stabilizer of {name} ...")
        stab = ctx.stab(name)
        stab_order = stab.order()
        row["stabilizer"] = {"expected": stab_claim, "actual": stab_order,
                             "ok": stab_order == stab_claim}
        if orbit_claim <= 10**5:
            orbit_size = len(ctx.orbit_map(name))
            row["orbit_method"] = "direct"
        else:
            orbit_size = G_order // stab_order
            row["orbit_method"] = "group_order/stabilizer"
        row["orbit"] = {"expected": orbit_claim, "actual": orbit_size,
                        "ok": orbit_size == orbit_claim}
        row["orbit_stabilizer"] = {"product": str(orbit_size * stab_order),
                                   "group_order": str(G_order),
                                   "ok": orbit_size * stab_order == G_order}
        if name.startswith("v"):
            vertex_orbit_sum += orbit_size
        row["ok"] = all(part["ok"] for key, part in row.items()
                        if isinstance(part, dict))
        rows.append(row)
    total = {"vertex_orbit_sum": vertex_orbit_sum,
             "expected": 201343200,
             "ok": vertex_orbit_sum == 201343200}
    return {"group_order": str(G_order), "rows": rows, "vertex_total": total,
            "ok": all(r["ok"] for r in rows) and total["ok"]}


def cmd_verify(args) -> int:
    progress = None if args.json else (lambda msg: print(f"# {msg}", flush=True))
    report = verify_table1(progress=progress)
    if args.json:
        _emit(report)
    else:
        for row in report["rows"]:
            status = "PASS" if row["ok"] else "FAIL"
            print(f"{row['name']}: {status}")
            if not row["ok"]:
                print(json.dumps(row, indent=2))
        t = report["vertex_total"]
        print(f"vertex orbit sum {t['vertex_orbit_sum']} "
              f"(expected {t['expected']}): {'PASS' if t['ok'] else 'FAIL'}")
        print(f"overall: {'PASS' if report['ok'] else 'FAIL'}")
    return 0 if report["ok"] else 1


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voronoi-forge",
                                description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (fallback: VORONOI_FORGE_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    lat = sub.add_parser("lattice", help="lattice constants")
    lat_sub = lat.add_subparsers(dest="subcommand", required=True)
    info = lat_sub.add_parser("info")
    info.add_argument("name")
    info.add_argument("--json", action="store_true", default=True,
                      help=argparse.SUPPRESS)
    info.add_argument("--digits", type=int, default=16)
    info.set_defaults(fn=cmd_lattice_info)

    rv = sub.add_parser("relvecs", help="relevant vectors")
    rv.add_argument("name")
    rv.add_argument("--json", action="store_true", default=True,
                    help=argparse.SUPPRESS)
    rv.add_argument("--full", action="store_true",
                    help="also emit every vector as JSON lines")
    rv.set_defaults(fn=cmd_relvecs)

    g = sub.add_parser("group", help="symmetry group computations")
    g_sub = g.add_subparsers(dest="subcommand", required=True)
    go = g_sub.add_parser("order")
    go.add_argument("name")
    go.add_argument("--cap", type=int, default=10**6)
    go.set_defaults(fn=cmd_group_order)
    gob = g_sub.add_parser("orbit")
    gob.add_argument("name")
    gob.add_argument("--vector", required=True,
                     help='JSON array of rationals, e.g. \'["1","1","0",...]\'')
    gob.add_argument("--cap", type=int, default=10**8)
    gob.set_defaults(fn=cmd_group_orbit)
    gst = g_sub.add_parser("stabilizer")
    gst.add_argument("name")
    gst.add_argument("--vector", required=True)
    gst.add_argument("--orbit-size", type=int, default=None)
    gst.add_argument("--seed", type=int, default=0)
    gst.set_defaults(fn=cmd_group_stabilizer)

    f = sub.add_parser("faces", help="face hierarchy")
    f_sub = f.add_subparsers(dest="subcommand", required=True)
    fb = f_sub.add_parser("build")
    fb.add_argument("name")
    fb.add_argument("--dims", default=None, help="a..b range of dimensions")
    fb.add_argument("--chain", default="full", choices=["full", "n2"])
    fb.add_argument("--extended", action="store_true")
    fb.add_argument("--checkpoint", default=None,
                    help="directory for resumable extended-mode results")
    fb.add_argument("--dump", action="store_true",
                    help="include exact vertex coordinates per class")
    fb.set_defaults(fn=cmd_faces_build)

    m = sub.add_parser("moments", help="exact volumes and second moments")
    m_sub = m.add_subparsers(dest="subcommand", required=True)
    me = m_sub.add_parser("exact")
    me.add_argument("name")
    me.add_argument("--extended", action="store_true")
    me.add_argument("--checkpoint", default=None)
    me.add_argument("--digits", type=int, default=16)
    me.set_defaults(fn=cmd_moments_exact)

    s = sub.add_parser("mc", help="Monte-Carlo estimation")
    s_sub = s.add_subparsers(dest="subcommand", required=True)
    se = s_sub.add_parser("estimate")
    se.add_argument("name")
    se.add_argument("-N", type=int, required=True)
    se.add_argument("--seed", type=int, default=0)
    se.add_argument("--json", action="store_true", default=True,
                    help=argparse.SUPPRESS)
    se.set_defaults(fn=cmd_mc_estimate)
    sc = s_sub.add_parser("compare")
    sc.add_argument("--lattice", default="Zn(3)")
    sc.add_argument("-N", type=int, default=100000)
    sc.add_argument("-g", type=int, default=100)
    sc.add_argument("--reps", type=int, default=1000)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--csv", default=None, help="write per-rep values here")
    sc.set_defaults(fn=cmd_mc_compare)

    v = sub.add_parser("verify", help="re-derive the BW16 class table")
    v.add_argument("--json", action="store_true")
    v.set_defaults(fn=cmd_verify)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_threads(args)
    try:
        return args.fn(args)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
