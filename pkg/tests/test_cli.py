from __future__ import annotations

import io
import json
import random
import sys

import numpy as np
import pytest

from nilcube.cli import main
from nilcube.cubespace.space import CubespaceMap, build_hk_cubespace
from nilcube.cubespace.textio import write_cubespace, write_map
from nilcube.gowers import CyclicFunction
from nilcube.groups import HEISENBERG, finite_abelian
from nilcube.hostkra import random_hk_cube
from nilcube.nilmanifold import HEIS_NIL

NILSEQ_U3 = 0.7737914956461275


def run(argv, stdin: str | None = None, monkeypatch=None) -> tuple[int, str]:
    out = io.StringIO()
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv, out=out)
    return code, out.getvalue()


def metrics(text: str) -> dict[str, str]:
    res = {}
    for line in text.splitlines():
        key, _, val = line.partition(": ")
        res.setdefault(key, val)
    return res


def write(path, text: str) -> str:
    path.write_text(text)
    return str(path)


def elements(values, fmt) -> str:
    return "".join(fmt(v) + "\n" for v in values)


@pytest.fixture
def z4_file(tmp_path):
    code, text = run(["space", "make-ds", "--group", "z4", "--s", "1", "--kmax", "3"])
    assert code == 0
    return write(tmp_path / "z4.txt", text)


# -- hk -----------------------------------------------------------------------------


def test_hk_check_passes_on_generated_heisenberg_cube(tmp_path):
    cube = random_hk_cube(HEISENBERG, 3, random.Random(5))
    path = write(tmp_path / "cube3.txt", elements(cube, HEISENBERG.format))
    code, text = run(["hk", "check", "--group", "heis", "--config", path])
    assert code == 0
    m = metrics(text)
    assert m["cube"] == "true" and m["status"] == "pass"
    assert sum(1 for key in m if key.startswith("x")) == 8


def test_hk_check_reports_witness(tmp_path):
    path = write(tmp_path / "sq.txt", "rat:0\nrat:1\nrat:2\nrat:4\n")
    code, text = run(["hk", "check", "--group", "q1", "--config", path])
    assert code == 1
    assert "finding: face-coordinate at subset {12} rat:1 outside G_2" in text
    assert text.rstrip().endswith("status: fail")


def test_hk_factor_edge_prints_both_coordinates(tmp_path):
    path = write(tmp_path / "edge.txt", "rat:0\nrat:1\n")
    code, text = run(["hk", "factor", "--group", "q1", "--config", path])
    assert code == 0
    m = metrics(text)
    assert m["x1[]"] == "rat:0"
    assert m["x2[1]"] == "rat:1"


def test_hk_complete_parallelogram(tmp_path):
    path = write(tmp_path / "corner.txt", "rat:0\nrat:1\nrat:2\n")
    code, text = run(["hk", "complete", "--group", "q1", "--corner", path])
    assert code == 0
    assert metrics(text)["completion"] == "rat:3"


def test_hk_complete_names_bad_face(tmp_path):
    path = write(tmp_path / "bad.txt", "rat:0\n" * 6 + "rat:1/2\n")
    code, text = run(["hk", "complete", "--group", "q1", "--corner", path])
    assert code == 2
    assert "omega_1 = 0" in text
    assert text.rstrip().endswith("status: error")


def test_hk_unknown_group(tmp_path):
    path = write(tmp_path / "edge.txt", "rat:0\nrat:1\n")
    code, text = run(["hk", "check", "--group", "nope", "--config", path])
    assert code == 2
    assert "status: error" in text


def test_hk_parse_error_names_line(tmp_path):
    path = write(tmp_path / "e.txt", "rat:0\nheis:0,0,0\n")
    code, text = run(["hk", "check", "--group", "q1", "--config", path])
    assert code == 2
    assert "line 2" in text


# -- nil ----------------------------------------------------------------------------


def test_nil_check_projected_cube(tmp_path):
    cube = [HEIS_NIL.reduce(g) for g in random_hk_cube(HEISENBERG, 2, random.Random(9))]
    path = write(tmp_path / "c.txt", elements(cube, HEIS_NIL.format))
    code, text = run(["nil", "check", "--config", path])
    assert code == 0
    assert metrics(text)["cube"] == "true"


def test_nil_complete_returns_cube(tmp_path):
    rng = random.Random(2)
    cube = [HEIS_NIL.reduce(g) for g in random_hk_cube(HEISENBERG, 2, rng)]
    path = write(tmp_path / "corner.txt", elements(cube[:-1], HEIS_NIL.format))
    code, text = run(["nil", "complete", "--corner", path])
    assert code == 0
    top = metrics(text)["completion"]
    path2 = write(tmp_path / "full.txt", elements(cube[:-1], HEIS_NIL.format) + top + "\n")
    assert run(["nil", "check", "--config", path2])[0] == 0


# -- space --------------------------------------------------------------------------


def test_make_ds_then_structure_group(z4_file):
    code, text = run(["space", "structure-group", z4_file, "--s", "1"])
    assert code == 0
    m = metrics(text)
    assert m["invariant_factors"] == "4"
    assert m["order"] == "4"


def test_structure_group_through_stdin(monkeypatch):
    code, text = run(["space", "make-ds", "--group", "z4", "--s", "1", "--kmax", "3"])
    code, text = run(["space", "structure-group", "--s", "1"], stdin=text, monkeypatch=monkeypatch)
    assert code == 0
    assert metrics(text)["invariant_factors"] == "4"


def test_tower_heights(tmp_path):
    _, text = run(["space", "make-ds", "--group", "z3", "--s", "2", "--kmax", "3"])
    path = write(tmp_path / "d2.txt", text)
    code, text = run(["space", "tower", path])
    assert code == 0
    m = metrics(text)
    assert m["heights"] == "[3, 1, 1]"
    assert m["degree"] == "2"


def test_make_ds_round_trips_through_certify(z4_file):
    code, text = run(["space", "certify", z4_file])
    assert code == 0
    assert metrics(text)["status"] == "pass"


def test_certify_corrupted_file_fails(tmp_path, z4_file):
    lines = open(z4_file).read().splitlines()
    start = lines.index("[cubes.2]") + 1
    victim = next(i for i in range(start, len(lines)) if len(set(lines[i].split())) > 1)
    del lines[victim]
    path = write(tmp_path / "bad.txt", "\n".join(lines) + "\n")
    code, text = run(["space", "certify", path])
    assert code == 1
    assert "finding:" in text
    assert text.rstrip().endswith("status: fail")


def test_format_error_reports_line(tmp_path):
    path = write(tmp_path / "bad.txt", "points: a b\nk_max: 1\n[cubes.1]\na c\n")
    code, text = run(["space", "certify", path])
    assert code == 2
    assert "line 4" in text


def test_uniqueness_and_completion(z4_file):
    assert run(["space", "uniqueness", z4_file, "--k", "2"])[0] == 0
    assert run(["space", "completion", z4_file, "--k", "2"])[0] == 0


def test_fibration_mod_two(tmp_path, z4_file):
    X = build_hk_cubespace(finite_abelian((4,), 1), 3)
    Y = build_hk_cubespace(finite_abelian((2,), 1), 3)
    f = CubespaceMap(X, Y, np.arange(4) % 2)
    path = write(tmp_path / "map.txt", write_map(f))
    code, text = run(["space", "fibration", z4_file, "--map", path])
    assert code == 0
    assert metrics(text)["fiber_surjective"] == "true"
    code, text = run(["space", "structure-group", z4_file, "--s", "1", "--map", path])
    assert code == 0
    assert metrics(text)["invariant_factors"] == "2"


def test_fibration_rejects_non_morphism(tmp_path, z4_file):
    X = build_hk_cubespace(finite_abelian((4,), 1), 3)
    f = CubespaceMap(X, X, np.array([0, 1, 3, 2]))
    path = write(tmp_path / "map.txt", write_map(f))
    code, text = run(["space", "fibration", z4_file, "--map", path])
    assert code == 1
    assert "not-a-morphism" in text


# -- gowers -------------------------------------------------------------------------


def test_gowers_norm_of_ones(tmp_path):
    path = write(tmp_path / "ones.csv", CyclicFunction.constant(16).to_csv())
    code, text = run(["gowers", "norm", "--k", "3", "--N", "16", "--fn", path])
    assert code == 0
    m = metrics(text)
    assert m["norm"] == "1.000000000000"
    assert m["mode"] == "exhaustive"


def test_gowers_inner_with_zero(tmp_path):
    ones = write(tmp_path / "ones.csv", CyclicFunction.constant(8).to_csv())
    zero = write(tmp_path / "zero.csv", CyclicFunction.constant(8, 0).to_csv())
    code, text = run(["gowers", "inner", "--k", "2", "--fns", ones, ones, ones, zero])
    assert code == 0
    assert float(metrics(text)["abs"]) == 0.0


def test_nilseq_then_norm(tmp_path):
    code, csv_text = run(["gowers", "nilseq", "--alpha", "1/7", "--beta", "1/5", "--N", "64"])
    assert code == 0
    path = write(tmp_path / "phi.csv", csv_text)
    code, text = run(["gowers", "norm", "--k", "3", "--fn", path])
    assert code == 0
    assert abs(float(metrics(text)["norm"]) - NILSEQ_U3) < 1e-9


def test_correlate_with_itself(tmp_path):
    _, csv_text = run(["gowers", "nilseq", "--alpha", "1/7", "--beta", "1/5", "--N", "64"])
    path = write(tmp_path / "phi.csv", csv_text)
    code, text = run(["gowers", "correlate", "--fn", path, "--with", path])
    assert code == 0
    assert abs(float(metrics(text)["abs"]) - 1.0) < 1e-9


def test_gowers_modulus_mismatch(tmp_path):
    a = write(tmp_path / "a.csv", CyclicFunction.constant(8).to_csv())
    b = write(tmp_path / "b.csv", CyclicFunction.constant(9).to_csv())
    code, text = run(["gowers", "correlate", "--fn", a, "--with", b])
    assert code == 2
    assert "status: error" in text


def test_gowers_guard_and_monte_carlo(tmp_path):
    path = write(tmp_path / "big.csv", CyclicFunction.constant(1 << 12).to_csv())
    code, text = run(["gowers", "norm", "--k", "3", "--fn", path])
    assert code == 2
    code, text = run(["gowers", "norm", "--k", "3", "--fn", path, "--monte-carlo",
                      "--samples", "1000", "--seed", "4"])
    assert code == 0
    m = metrics(text)
    assert m["mode"] == "monte-carlo"
    assert m["samples"] == "1000" and m["seed"] == "4"


def test_bad_csv_reports_line(tmp_path):
    path = write(tmp_path / "f.csv", "n,re,im\n0,1,0\n1,x,0\n")
    code, text = run(["gowers", "norm", "--k", "2", "--fn", path])
    assert code == 2
    assert "line 3" in text


# -- report plumbing ------------------------------------------------------------------


def test_json_document(tmp_path):
    path = write(tmp_path / "ones.csv", CyclicFunction.constant(16).to_csv())
    code, text = run(["gowers", "norm", "--k", "2", "--fn", path, "--json"])
    assert code == 0
    doc = json.loads(text)
    assert doc["status"] == "pass"
    assert doc["metrics"]["norm"] == pytest.approx(1.0)


def test_json_error_document(tmp_path):
    path = write(tmp_path / "e.txt", "nonsense\n")
    code, text = run(["hk", "check", "--group", "q1", "--config", path, "--json"])
    assert code == 2
    assert json.loads(text)["status"] == "error"


def test_reports_are_byte_identical(tmp_path, z4_file):
    for argv in (["space", "tower", z4_file], ["space", "certify", z4_file],
                 ["space", "structure-group", z4_file, "--s", "1"]):
        assert run(argv) == run(argv)


def test_make_ds_is_deterministic():
    a = run(["space", "make-ds", "--group", "z2xz4", "--s", "1", "--kmax", "2"])
    assert a == run(["space", "make-ds", "--group", "z2xz4", "--s", "1", "--kmax", "2"])
    assert a[1] == write_cubespace(build_hk_cubespace(finite_abelian((2, 4), 1), 2))


def test_make_ds_rejects_infinite_group():
    code, text = run(["space", "make-ds", "--group", "q1", "--s", "1", "--kmax", "2"])
    assert code == 2


def test_usage_error_exit_code():
    assert run(["space"])[0] == 2
