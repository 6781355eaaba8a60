"""Command-line interface: output formats, determinism, exit codes."""

import json

import pytest

from voronoi_forge.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_lattice_info_json(capsys):
    code, out = _run(capsys, "lattice", "info", "Zn(3)")
    assert code == 0
    data = json.loads(out)
    assert data["rank"] == 3
    assert data["volume"] == "1"
    assert data["packing_radius_sq"] == "1/4"
    assert data["kissing_number"] == 6


def test_lattice_info_a2_null_volume(capsys):
    code, out = _run(capsys, "lattice", "info", "a2")
    data = json.loads(out)
    assert code == 0
    assert data["volume"] is None
    assert data["volume_sq"] == "3"


def test_unknown_lattice_is_domain_error(capsys):
    code = main(["lattice", "info", "leech"])
    assert code == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["lattice"])
    assert e.value.code == 2


def test_relvecs_counts(capsys):
    code, out = _run(capsys, "relvecs", "d4")
    assert code == 0
    assert json.loads(out) == {"2": 24}


def test_relvecs_full_lines(capsys):
    code, out = _run(capsys, "relvecs", "Zn(2)", "--full")
    counts, end = json.JSONDecoder().raw_decode(out)
    assert counts == {"1": 4}
    vecs = [json.loads(s) for s in out[end:].strip().splitlines()]
    assert sorted(vecs) == sorted(
        [["1", "0"], ["-1", "0"], ["0", "1"], ["0", "-1"]])


def test_group_order(capsys):
    code, out = _run(capsys, "group", "order", "d4")
    assert code == 0
    assert json.loads(out) == {"order": "1152"}


def test_group_orbit_and_stabilizer(capsys):
    code, out = _run(capsys, "group", "orbit", "Zn(3)",
                     "--vector", '["1","1","0"]')
    assert code == 0
    assert json.loads(out) == {"size": "12"}
    code, out = _run(capsys, "group", "stabilizer", "Zn(3)",
                     "--vector", '["1","1","0"]', "--orbit-size", "12")
    data = json.loads(out)
    assert (data["order"], data["group_order"]) == ("4", "48")


def test_faces_build_cube(capsys):
    code, out = _run(capsys, "faces", "build", "Zn(3)")
    assert code == 0
    recs = [json.loads(s) for s in out.strip().splitlines()]
    counts = {r["dim"]: r["classes"] for r in recs if "classes" in r}
    assert counts == {0: 1, 1: 1, 2: 1, 3: 1}
    by_dim = {r["dim"]: r for r in recs if "vertices" in r}
    assert by_dim[2]["vertices"] == 4 and by_dim[2]["members_constructed"] == 6


def test_faces_build_dims_range(capsys):
    code, out = _run(capsys, "faces", "build", "Zn(2)", "--dims", "1..2")
    recs = [json.loads(s) for s in out.strip().splitlines()]
    assert {r["dim"] for r in recs} == {1, 2}


def test_moments_exact_z3(capsys):
    code, out = _run(capsys, "moments", "exact", "Zn(3)")
    data = json.loads(out)
    assert code == 0
    assert data["U"] == "1/4" and data["V"] == "1"
    assert data["G"]["coefficient"] == "1/12" and data["G"]["radicand"] == 1
    assert data["isotropic"] is True


def test_moments_bw16_requires_extended(capsys):
    assert main(["moments", "exact", "bw16"]) == 1


def test_mc_estimate_json_and_determinism(capsys):
    code, out = _run(capsys, "mc", "estimate", "Zn(3)", "-N", "10000",
                     "--seed", "5")
    assert code == 0
    a = json.loads(out)
    _, out2 = _run(capsys, "mc", "estimate", "Zn(3)", "-N", "10000",
                   "--seed", "5")
    assert json.loads(out2) == a
    assert a["N"] == 10000 and 0 < a["G_hat"] < 1


def test_mc_compare_csv(tmp_path, capsys):
    path = tmp_path / "cmp.csv"
    code, out = _run(capsys, "mc", "compare", "--lattice", "Zn(3)",
                     "-N", "5000", "-g", "10", "--reps", "4", "--seed", "2",
                     "--csv", str(path))
    assert code == 0
    data = json.loads(out)
    assert data["reps"] == 4 and "spread_direct" in data
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "rep,direct,jackknife"
    assert len(lines) == 5
    float(lines[1].split(",")[1])  # parses as a number


def test_faces_chain_n2_rejected_for_extended(tmp_path, capsys):
    code = main(["faces", "build", "bw16", "--extended", "--chain", "n2",
                 "--checkpoint", str(tmp_path)])
    assert code == 1
