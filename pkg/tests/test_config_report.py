from __future__ import annotations

import json
import math

import pytest

from magtorus.config import (
    ConfigError,
    RunConfig,
    load_problem,
    parse_levels,
    parse_perturb,
    preset,
    problem_from_mapping,
)
from magtorus.report import Check, Report, canonical_json, emit_report, rows_csv


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(tol=0.0)
    with pytest.raises(ConfigError):
        RunConfig(grid=0)
    with pytest.raises(ConfigError):
        RunConfig(levels=(1.0, 1.0))
    with pytest.raises(ConfigError):
        RunConfig(probes=(-1.0,))
    assert RunConfig(levels=(1.0, 2.0)).levels == (1.0, 2.0)


def test_parsers():
    assert parse_levels("1, 2,3.5") == (1.0, 2.0, 3.5)
    assert parse_levels(None) is None
    assert parse_perturb(["b2=0.1", "a0 = -2"]) == {"b2": 0.1, "a0": -2.0}
    with pytest.raises(ConfigError):
        parse_perturb(["b2"])
    with pytest.raises(ConfigError):
        parse_levels("1,x")


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("nope")


def test_general_problem_mapping():
    data = {
        "lambda": [{"k1": 0, "k2": 0, "re": 2.0}, {"k1": 0, "k2": 1, "re": 0.5}],
        "omega": [{"k1": 0, "k2": 1, "re": -0.5}],
        "F": {"1,0": [{"k1": 0, "k2": 0, "re": 1.0}], "0,0": [{"k1": 0, "k2": 1, "im": -0.5}]},
    }
    prob = problem_from_mapping(data)
    lin = preset("linear")
    assert (prob.F - lin.F).is_zero
    assert (prob.omega - lin.omega).sup_norm() < 1e-15
    with pytest.raises(ConfigError):
        problem_from_mapping({"lambda": data["lambda"], "omega": data["omega"]})


def test_json_problem_file(tmp_path):
    p = tmp_path / "fam.json"
    p.write_text(json.dumps({
        "degree": 4,
        "lambda": [{"k1": 0, "k2": 0, "re": 2.0}, {"k1": 0, "k2": 1, "re": 0.5}],
        "f1": [{"k1": 0, "k2": 1, "im": -0.5}],
        "constants": {"K1": 0.7},
    }))
    prob = load_problem(p)
    assert prob.F.degree == 4 and prob.name == "fam"
    assert set(prob.integrals) == {"F4", "F1", "H"}


def test_perturbed_problem_name(degree3_problem):
    q = degree3_problem.perturbed({"b2": 0.1})
    assert q.name == "degree3[b2=0.1]"
    assert not (q.F - degree3_problem.F).is_zero


def test_canonical_json_is_stable():
    a = canonical_json({"b": 1.0000000001, "a": [math.inf, float("nan"), None, True]})
    assert a == canonical_json({"a": [math.inf, float("nan"), None, True], "b": 1.0000000001})
    assert json.loads(a) == {"a": ["inf", "nan", None, True], "b": 1.0}


def test_check_bounds():
    assert Check("x", 1e-12, 1e-10).passed
    assert not Check("x", math.nan, 1e-10).passed
    assert Check("r", 5.0, 4.0, bound="lower").passed
    assert not Check("r", 2.3, 4.0, bound="lower").passed
    with pytest.raises(ValueError):
        Check("x", 1.0, 1.0, bound="sideways")


def test_report_and_emission(tmp_path):
    r = Report("demo")
    r.add("ok", 0.0, 1.0)
    r.add("bad", 2.0, 1.0)
    assert not r.passed and [c.name for c in r.failures()] == ["bad"]
    assert "FAIL bad" in r.summary()
    paths = emit_report("demo", r.to_json(), tmp_path, rows_csv([{"a": 1.5, "b": None}]))
    assert [p.name for p in paths] == ["demo.json", "demo.csv"]
    assert (tmp_path / "demo.csv").read_text() == "a,b\n1.500000000000e+00,\n"
    assert emit_report("demo", {}, None) == []


def test_empty_report_is_valid(tmp_path):
    r = Report("empty")
    emit_report("empty", r.to_json(), tmp_path)
    data = json.loads((tmp_path / "empty.json").read_text())
    assert data == {"battery": "empty", "status": "PASS", "checks": [], "failed": [], "data": {}}
    assert rows_csv([]) == ""
