import json
from pathlib import Path

import pytest

from novikov.chain import ChainComplex
from novikov.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", ["circle.json", "sphere_equator.json", "torus_domain.json"])
def test_shipped_scenarios_pass(capsys, name):
    code, out, _ = run(capsys, "report", str(SCENARIOS / name))
    assert code == 0
    assert json.loads(out)["status"] == "pass"


def test_reports_are_byte_identical(capsys):
    path = str(SCENARIOS / "sphere_equator.json")
    first = run(capsys, "report", path, "--seed", "7")[1]
    second = run(capsys, "report", path, "--seed", "7")[1]
    assert first == second


def test_torus_unroll_reports_order_five(capsys):
    code, out, _ = run(capsys, "unroll-compare", str(SCENARIOS / "torus_domain.json"))
    rep = json.loads(out)
    assert code == 0
    assert [r["congruence_order"] for r in rep["results"]] == [5]


def test_verify_on_tetrahedron(capsys, tmp_path):
    s = {"schema": 1, "declarations": {"t": {"kind": "morse", "complex": "sphere", "field": "random"}},
         "commands": [{"op": "verify", "target": "t"}]}
    assert run(capsys, "verify", write(tmp_path, s))[0] == 0


def test_corrupted_square_of_d_fails_and_names_entry(capsys, tmp_path):
    c = ChainComplex({0: ["a"], 1: ["b"], 2: ["c"]}, {1: [[1]], 2: [[2]]})
    s = {"schema": 1, "declarations": {"x": {"kind": "complex", "data": c.to_json()}},
         "commands": [{"op": "verify", "target": "x"}]}
    code, out, _ = run(capsys, "report", write(tmp_path, s))
    assert code == 1
    disc = json.loads(out)["results"][0]["discrepancy"]
    assert disc == [{"degree": 2, "row": "a", "column": "c"}]


def test_homology_of_rp2_text(capsys, tmp_path):
    s = {"schema": 1, "declarations": {"p": {"kind": "morse", "complex": "projective_plane"}},
         "commands": []}
    code, out, _ = run(capsys, "homology", write(tmp_path, s), "--target", "p", "--format", "text")
    assert code == 0
    assert 'homology="Z, Z/2, 0"' in out


def test_invert_geometric_series(capsys, tmp_path):
    s = {"schema": 1, "declarations": {"t": {"kind": "filtered", "labels": ["a"],
                                             "matrix": [["(1)*z^0 + (1)*z^1"]], "precision": 4}},
         "commands": [{"op": "invert", "target": "t"}]}
    code, out, _ = run(capsys, "invert", write(tmp_path, s))
    assert code == 0
    inv = json.loads(out)["results"][0]["inverse"]
    assert inv == [["(1)*z^0 + (-1)*z^1 + (1)*z^2 + (-1)*z^3 + O(z^4)"]]


def test_non_adapted_split_fails_glue_check(capsys, tmp_path):
    s = {"schema": 1, "declarations": {"m": {"kind": "split", "model": "torus_meridians", "seed": 1}},
         "commands": [{"op": "glue-check", "target": "m"}]}
    code, out, _ = run(capsys, "glue-check", write(tmp_path, s))
    assert code == 1
    assert json.loads(out)["results"][0]["discrepancy"] == {"2": [[0, 0, 0], [1, 1, 0]]}


def test_corrupted_square_is_reported(capsys, tmp_path):
    s = {"schema": 1, "declarations": {"q": {"kind": "square", "base": "circle",
                                             "corrupt": [["0~1|0/0", "0~1|0~1/0", 1]]}},
         "commands": [{"op": "setting-check", "target": "q"}]}
    code, out, _ = run(capsys, "setting-check", write(tmp_path, s), "--epsilon", "1")
    assert code == 1
    assert json.loads(out)["results"][0]["discrepancy"][0]["upper"] == "0~1|0~1/0"


@pytest.mark.parametrize("doc, message", [
    ("{not json", "ParseError"),
    ({"schema": 2, "declarations": {}, "commands": []}, "ParseError"),
    ({"schema": 1, "declarations": {}, "commands": [{"op": "frobnicate", "target": "x"}]}, "UnknownCommand"),
    ({"schema": 1, "declarations": {}, "commands": [{"op": "verify", "target": "x"}]}, "NameResolution"),
    ({"schema": 1, "declarations": {"g": {"kind": "domain", "model": "circle"}},
      "commands": [{"op": "unroll-compare", "target": "g"}]}, "ParseError"),
    ({"schema": 1, "declarations": {"f": {"kind": "circle_function",
                                          "data": {"points": [["p", 1, "0"], ["q", 0, "1"]], "winding": 1}}},
      "commands": [{"op": "homology", "target": "f"}]}, "ParseError"),
])
def test_input_errors_exit_two(capsys, tmp_path, doc, message):
    code, out, err = run(capsys, "report", write(tmp_path, doc))
    assert code == 2 and out == ""
    assert message in err


def test_missing_file_exits_two(capsys, tmp_path):
    assert run(capsys, "report", str(tmp_path / "nope.json"))[0] == 2


def test_flags_override_precision(capsys):
    code, out, _ = run(capsys, "invert", str(SCENARIOS / "circle.json"), "--precision", "3")
    assert code == 0
    assert json.loads(out)["results"][0]["precision"] == 3


def test_timing_is_opt_in(capsys):
    path = str(SCENARIOS / "circle.json")
    plain = json.loads(run(capsys, "verify", path)[1])
    timed = json.loads(run(capsys, "verify", path, "--timing")[1])
    assert "seconds" not in plain["results"][0] and "seconds" in timed["results"][0]
