from __future__ import annotations

import json

import pytest

from magtorus.cli import main

FAMILY = """\
degree = 3
lambda = [{k1 = 0, k2 = 0, re = 2.0}, {k1 = 0, k2 = 1, re = 0.5}]
f1 = [{k1 = 0, k2 = 1, im = -0.5}]
[constants]
K1 = 1.0
s0 = 1.0
s2 = 0.5
"""


@pytest.fixture
def family_file(tmp_path):
    p = tmp_path / "fam.toml"
    p.write_text(FAMILY)
    return p


def _json(out_dir, name):
    return json.loads((out_dir / f"{name}.json").read_text())


def test_check_degree3_passes(tmp_path, capsys):
    assert main(["check", "degree3", "--out", str(tmp_path)]) == 0
    data = _json(tmp_path, "degree3")
    assert data["status"] == "PASS" and data["failed"] == []
    assert "[PASS] degree3" in capsys.readouterr().out


def test_perturbation_fails_with_named_rows(tmp_path):
    assert main(["check", "degree3", "--perturb", "b2=0.1", "--out", str(tmp_path)]) == 1
    data = _json(tmp_path, "degree3[b2=0.1]")
    failed = set(data["failed"])
    assert {"bracket_with_H", "bracket", "second_group_2", "second_group_4", "levels_all_conserved"} <= failed


def test_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["check", "linear", "--out", str(d)]) == 0
        assert main(["levels", "--preset", "degree3", "--out", str(d)]) == 0
    for name in ("linear.json", "levels.json", "levels.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_out_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MAGTORUS_OUT", str(tmp_path))
    assert main(["appendix", "verify", "--n", "5"]) == 0
    assert _json(tmp_path, "appendix")["status"] == "PASS"


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["check", "linear", "--tol", "-1"]) == 2
    assert main(["check", "degree3", "--perturb", "zz9=1"]) == 2
    assert main(["family", "build", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("degree = [")
    assert main(["family", "check", str(bad)]) == 2
    assert main(["levels", "--preset", "degree3", "--levels", "1,1"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["check", "nonexistent"])
    assert exc.value.code == 2


def test_family_build_and_check(family_file, tmp_path):
    assert main(["family", "build", str(family_file), "--out", str(tmp_path)]) == 0
    data = _json(tmp_path, "family")
    assert data["degree"] == 3 and data["bracket_sup"] <= 1e-10 and data["reduction_identity"] <= 1e-10
    assert main(["family", "check", str(family_file), "--out", str(tmp_path)]) == 0


def test_check_with_spec_file(family_file, tmp_path):
    assert main(["check", "degree3", "--spec", str(family_file), "--out", str(tmp_path)]) == 0
    assert main(["check", "appendix", "--spec", str(family_file)]) == 2


def test_bracket_and_cascade(capsys):
    assert main(["bracket", "--preset", "linear"]) == 0
    assert json.loads(capsys.readouterr().out)["commutes"] is True
    assert main(["cascade", "--preset", "degree4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["kolokoltsov"]["A0"] == 1.0 and data["kolokoltsov"]["A1"] == 0.0
    assert data["constants"]["K5"]["value"] == 0.0


def test_emit_system(capsys):
    assert main(["cascade", "--emit-system", "--degree", "3"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# 2 L^2 M[s,k]") and "M[4,4]" in out


def test_levels_sharp_and_exit_code(tmp_path):
    assert main(["levels", "--preset", "degree4", "--levels", "1,2,3", "--probes", "7", "--sharp", "--out", str(tmp_path)]) == 0
    assert _json(tmp_path, "levels")["status"] == "all_levels_conserved"
    assert main(["levels", "--preset", "degree3", "--perturb", "b2=0.1", "--levels", "1,2", "--sharp", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "levels.csv").read_text().startswith("level,mode,max_amplitude")


def test_flow(tmp_path):
    assert main(["flow", "--preset", "degree3", "--T", "10", "--out", str(tmp_path)]) == 0
    data = _json(tmp_path, "flow")
    assert data["drift"]["F3"] <= 1e-7
    assert (tmp_path / "flow.csv").read_text().startswith("t,x,y,phi")
    assert main(["flow", "--start", "1,2"]) == 2


def test_blowup(capsys):
    assert main(["blowup"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "blowup" and abs(data["T*"] - 1.0) < 0.01
    assert main(["blowup", "--g0", "const:0.4"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "constant_only"
    assert main(["blowup", "--g0", "bogus"]) == 2


def test_field_ops(tmp_path, capsys):
    lit = tmp_path / "f.json"
    lit.write_text(json.dumps([{"k1": 0, "k2": 0, "re": 2.0}, {"k1": 1, "k2": 0, "re": 0.5}]))
    assert main(["field", str(lit), "--op", "dx"]) == 0
    modes = json.loads(capsys.readouterr().out)["modes"]
    assert {(m["k1"], m["k2"]): m["im"] for m in modes} == {(-1, 0): -0.5, (1, 0): 0.5}
    assert main(["field", str(lit), "--op", "constancy"]) == 0
    assert json.loads(capsys.readouterr().out)["constant"] is False


def test_bandwidth_cap_flag(capsys):
    assert main(["check", "degree3", "--bandwidth-cap", "1"]) == 2
