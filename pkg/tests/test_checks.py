from __future__ import annotations

import pytest

from magtorus.checks import BATTERIES, run_battery
from magtorus.config import ConfigError, RunConfig


@pytest.mark.parametrize("name", ["linear", "degree3", "degree4", "levels", "appendix"])
def test_battery_passes(name):
    report = run_battery(name, RunConfig())
    assert report.passed, report.summary()


def test_dynamics_battery_rows():
    report = run_battery("dynamics", RunConfig())
    rows = {c.name: c for c in report.checks}
    for name, row in rows.items():
        if name != "tolerance_halving_drift_ratio":
            assert row.passed, report.summary()
    assert rows["tolerance_halving_drift_ratio"].bound == "lower"


def test_perturbed_battery_fails():
    report = run_battery("degree4", RunConfig(perturb={"c2": 0.05}))
    assert not report.passed
    assert "bracket_with_H" in {c.name for c in report.failures()}


def test_unknown_battery():
    with pytest.raises(ConfigError):
        run_battery("nope", RunConfig())
    assert set(BATTERIES) == {"linear", "degree3", "degree4", "levels", "appendix", "dynamics"}
