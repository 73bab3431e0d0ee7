import json

import pytest

from orbatlas.cli import main
from orbatlas.document import atlas_to_doc, canonical, mutate

from conftest import atlas


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_fixture(capsys):
    code, out, _ = run(capsys, "validate", "fixture:football")
    assert code == 0 and out


def test_validate_rejects_mutated_file(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text(canonical(mutate(atlas_to_doc(atlas("football")), "non-free")))
    code, out, _ = run(capsys, "validate", str(f), "--json")
    assert code == 1
    assert not json.loads(out)["validation"]["axioms"]["freeness"]["passed"]


def test_input_errors_exit_2(capsys, tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{")
    assert run(capsys, "validate", str(f))[0] == 2
    code, _, err = run(capsys, "validate", str(tmp_path / "missing.json"))
    assert code == 2 and "[input]" in err


def test_fixture_round_trip(capsys, tmp_path):
    f = tmp_path / "fb.json"
    assert run(capsys, "fixture", "football", "-o", str(f))[0] == 0
    assert run(capsys, "validate", str(f))[0] == 0


def test_euler_json(capsys):
    code, out, _ = run(capsys, "euler", "fixture:football", "--json")
    assert code == 0
    assert json.loads(out)["total"] == [5, 6]


def test_euler_section_file(capsys, tmp_path):
    f = tmp_path / "sec.json"
    f.write_text(json.dumps({"zeros": {"N": 1, "S": -1}}))
    code, out, _ = run(capsys, "euler", "fixture:football", "--section", str(f), "--json")
    assert code == 0
    assert json.loads(out)["total"] == [1, 6]
    f.write_text(json.dumps({"zeros": {"N": 3}}))
    assert run(capsys, "euler", "fixture:football", "--section", str(f))[0] == 2


@pytest.mark.parametrize("name,verdict", [("gerbe-trivial", "trivial"), ("gerbe-nontrivial", "nontrivial")])
def test_gerbe(capsys, name, verdict):
    code, out, _ = run(capsys, "gerbe", f"fixture:{name}", "--json")
    assert code == 0
    assert json.loads(out)["verdict"] == verdict


def test_resolve_failure_is_a_stage_error(capsys):
    code, _, err = run(capsys, "resolve", "fixture:gerbe-trivial")
    assert code == 1 and "NoReductionFound" in err


def test_resolve_with_param_and_dot(capsys, tmp_path):
    code, _, _ = run(capsys, "resolve", "fixture:gerbe-nontrivial", "--param", "cover=annulus", "--dot", str(tmp_path))
    assert code == 0
    assert list(tmp_path.glob("*.dot"))


def test_derive_with_reorder_writes_atlas(capsys, tmp_path):
    f = tmp_path / "d.json"
    code, _, _ = run(capsys, "derive", "fixture:football", "--reorder", "1,2", "-o", str(f))
    assert code == 0
    assert json.loads(f.read_text())["provenance"]["order"] == ["2", "1"]
    assert run(capsys, "validate", str(f))[0] == 0


def test_report_with_trace(capsys):
    code, out, err = run(capsys, "report", "fixture:football", "--trace")
    assert code == 0
    assert "5/6" in out and "euler" in err


def test_weights(capsys):
    code, out, _ = run(capsys, "weights", "fixture:football", "--json")
    assert code == 0 and out
