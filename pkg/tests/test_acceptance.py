"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Criteria 1-8 gate the build.  Criterion 9 (the full face-class hierarchy with
exact moments) is a multi-hour resumable computation and only runs when
VORONOI_FORGE_EXTENDED=1; otherwise it reports as skipped rather than
passing vacuously.
"""

import math
import os
from fractions import Fraction as Q

import pytest

from voronoi_forge import exact
from voronoi_forge import faces as fc
from voronoi_forge import group as grp
from voronoi_forge import moments as mm
from voronoi_forge import montecarlo as mc
from voronoi_forge.cli import verify_table1
from voronoi_forge.lattice import make_lattice

EXTENDED = os.environ.get("VORONOI_FORGE_EXTENDED") == "1"


def _report(tag, ok, detail=""):
    print(f"[{tag}] {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{tag}: {detail}"


def test_criterion_1_bw16_relevant_vector_counts(bw16):
    R = bw16.relvecs
    counts = {k: v for k, v in R.by_norm.items()}
    ok = counts == {Q(2): 4320, Q(3): 61440} and len(R.vectors) == 65760
    _report("criterion-1 relevant vectors", ok,
            f"counts by squared norm: { {str(k): v for k, v in counts.items()} }")


def test_criterion_2_group_and_subgroup_orders(bw16):
    L = bw16.L
    order = bw16.group.order()
    perms = grp.bw16_permutation_elements(L)
    perm_orders = []
    for names in (("p1", "p2", "p3"), ("p1", "p4"), ("p3", "p4")):
        gens = [perms[k] for k in names]
        perm_orders.append(grp.group_order(L, gens, exact.vec(L.basis[1])))
    sg = grp.bw16_sign_change_generators(L)
    sign_order = grp.group_order(L, sg["S1"] + sg["S2"] + sg["S3"],
                                 exact.vec(L.basis[0]))
    ok = (order == 89181388800 and perm_orders == [322560] * 3
          and sign_order == 2048)
    _report("criterion-2 group orders", ok,
            f"|G|={order}, perm subgroups={perm_orders}, signs={sign_order}")


def test_criterion_3_class_table_verification(bw16):
    report = verify_table1()
    failing = [r["name"] for r in report["rows"] if not r["ok"]]
    _report("criterion-3 class table", report["ok"],
            f"all rows re-derived; failing rows: {failing or 'none'}; "
            f"vertex orbit sum {report['vertex_total']['vertex_orbit_sum']}")


def test_criterion_4_facet_statistics(bw16):
    got = {}
    for which in ("n1", "n2"):
        fd = fc.bw16_facet(bw16, which)
        got[which] = (fd.vertex_count, fc.bw16_facet_children_count(bw16, fd))
    ok = got == {"n1": (1046430, 7704), "n2": (26160, 828)}
    _report("criterion-4 facet statistics", ok, f"(vertices, children) = {got}")


def test_criterion_5_small_lattice_exact_pipeline(z2, z3, d4):
    details = []
    ok = True
    for L in (z2, z3, d4):
        md = mm.region_moments(fc.build_hierarchy(L))
        vol_ok = md.M0 == abs(exact.det(L.basis))
        ok &= vol_ok
        details.append(f"{L.name} volume={exact.fmt_q(md.M0)}")
    md3 = mm.region_moments(fc.build_hierarchy(z3))
    g3 = mm.quantizer_constant(exact.trace(md3.M2), md3.M0, 3)
    ok &= g3["exact"] and g3["coefficient"] == Q(1, 12) and g3["radicand"] == 1
    details.append("G(Z3)=1/12")
    # independent Monte-Carlo oracle for D4, frozen at N=1e7, seed 20260823:
    oracle_g, oracle_sd = 0.07659694055864798, math.sqrt(8.281413660500636e-11)
    md4 = mm.region_moments(fc.build_hierarchy(d4))
    g4 = mm.quantizer_constant(exact.trace(md4.M2), md4.M0, 4)
    exact_g4 = float(g4["coefficient"]) * math.sqrt(g4["radicand"])
    dev = abs(exact_g4 - oracle_g)
    ok &= dev < 4 * oracle_sd
    details.append(f"G(D4) exact-vs-MC |dev|={dev:.2e} < 4sd={4 * oracle_sd:.2e}")
    _report("criterion-5 small-lattice pipeline", ok, "; ".join(details))


def test_criterion_6_bw16_monte_carlo():
    bw = make_lattice("bw16")
    est = mc.estimate(bw, 10**6, seed=0)
    ref = 0.0682976224893187
    dev = abs(est.G_hat - ref)
    bound = 4 * math.sqrt(est.var_hat_G)
    _report("criterion-6 BW16 Monte-Carlo", dev < bound,
            f"G_hat={est.G_hat:.10f}, |dev|={dev:.3e} < {bound:.3e}")


def test_criterion_7_variance_estimator_comparison(z3):
    rep = mc.compare_estimators(z3, N=100000, g=100, reps=1000, seed=0)
    ratio = rep["spread_jackknife"] / rep["spread_direct"]
    ok = ratio >= 5
    # fully-grouped jackknife degenerates to the direct estimator
    import numpy as np

    w = np.concatenate(list(mc._norm2_chunks(z3, 100000, 0)))
    direct = float(w.var(ddof=1)) / w.size
    jack = mc.jackknife_variance(w, w.size)
    ok &= abs(jack - direct) <= 1e-12 * direct
    _report("criterion-7 estimator comparison", ok,
            f"spread ratio jackknife/direct = {ratio:.1f}x (need >= 5), "
            f"g=N relative gap {abs(jack - direct) / direct:.1e}")


def test_criterion_8_invariant_property_suites(z3, d4):
    """Compact re-statement of the always-on invariants (the module test
    files exercise each in depth)."""
    ok = True
    details = []
    # orbit-stabilizer on D4
    gens = fc.d4_generators(d4)
    x = exact.vec([1, 1, 0, 0])
    om = grp.orbit(d4, x, gens)
    action = grp.action_from_orbits(d4, gens, [exact.vec(r) for r in d4.basis])
    G = grp.MatrixGroup(d4, gens, action)
    st = grp.stabilizer(d4, x, gens, len(om), G, seed=1)
    ok &= len(om) * st.order() == G.order()
    details.append("orbit x stabilizer = |G|")
    # negation closure of relevant vectors
    R = fc.cached_relevant_vectors(d4)
    vs = {v.coords for v in R.vectors}
    ok &= vs == {exact.vscale(Q(-1), v) for v in vs}
    details.append("relevant vectors negation-closed")
    # volume = |det B| and isotropy for the small pipeline
    md = mm.region_moments(fc.build_hierarchy(z3))
    ok &= md.M0 == 1 and mm.isotropy_check(md.M2, 3)
    details.append("volume and isotropy")
    _report("criterion-8 invariant suites", ok, "; ".join(details))


EXPECTED_CLASS_COUNTS = {
    0: 6, 1: 23, 2: 58, 3: 168, 4: 441, 5: 867, 6: 1257, 7: 1329, 8: 1023,
    9: 566, 10: 253, 11: 96, 12: 35, 13: 12, 14: 5, 15: 2, 16: 1,
}


@pytest.mark.skipif(not EXTENDED, reason=(
    "extended criterion: multi-hour resumable BW16 hierarchy run; "
    "set VORONOI_FORGE_EXTENDED=1 (and optionally VORONOI_FORGE_CHECKPOINT) "
    "to execute"))
def test_criterion_9_extended_hierarchy_and_moments(bw16, tmp_path):
    checkpoint = os.environ.get("VORONOI_FORGE_CHECKPOINT") or str(tmp_path)
    records = []
    fc.extended_build(bw16, checkpoint=checkpoint, emit=records.append)
    counts = {r["dim"]: r["classes"] for r in records if "classes" in r}
    counts[16] = 1
    ok = counts == EXPECTED_CLASS_COUNTS
    out = mm.extended_moments(bw16, checkpoint=checkpoint)
    ok &= out["U"] == "207049815983/4287303820800"
    ok &= out["V"] == "1/16"
    # 2-face geometry: the square class and the extreme corner angles
    twofaces = [r for r in records if r.get("dim") == 2 and "geometry" in r]
    squares = [r for r in twofaces if r["geometry"]["shape"] == "square"]
    ok &= any(r["geometry"]["area2"] == "1/81" for r in squares)
    corners = [(c["cos_sign"], exact.parse_q(c["cos2"]))
               for r in twofaces for c in r["geometry"]["corners"]]
    cos_vals = sorted(s * math.sqrt(float(q)) for s, q in corners)
    ok &= abs(cos_vals[0] - math.sqrt(10) / 40) < 1e-12   # largest angle
    ok &= abs(cos_vals[-1] - 29 * math.sqrt(238) / 476) < 1e-12  # smallest
    _report("criterion-9 extended hierarchy", ok,
            f"class counts {counts}; U={out['U']}, V={out['V']}")
