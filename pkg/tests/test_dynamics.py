from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from magtorus.dynamics import (
    characteristics_blowup,
    constant_field_period_error,
    cubic_charfield,
    drift_report,
    halving_study,
    hopf_charfield,
    integrate_flow,
    momenta,
    time_reversal_error,
    trajectory_csv,
)
from magtorus.field import constant

START = (0.3, 0.7, 0.2)


def _canonical_linear_flow(C, start, T):
    """Hamilton's equations in (x, y, p1, p2) for Lambda = 2 + cos y, Omega = -cos y."""

    def rhs(_t, s):
        x, y, q1, q2 = s
        L, Ly = 2 + math.cos(y), -math.sin(y)
        W = -math.cos(y)
        Hp1, Hp2 = q1 / L, q2 / L
        Hy = -(q1 * q1 + q2 * q2) * Ly / (2 * L * L)
        return [Hp1, Hp2, W * Hp2, -Hy - W * Hp1]

    x, y, phi = start
    r = math.sqrt(C * (2 + math.cos(y)))
    sol = solve_ivp(rhs, (0, T), [x, y, r * math.cos(phi), r * math.sin(phi)], method="LSODA", rtol=1e-12, atol=1e-12)
    return sol.y[:, -1]


def test_flow_matches_canonical_equations(linear_problem):
    p = linear_problem
    traj = integrate_flow(p.lam, p.omega, 1.3, START, 5.0)
    x, y, phi = traj.final
    xe, ye, q1, q2 = _canonical_linear_flow(1.3, START, 5.0)
    assert x == pytest.approx(xe, abs=1e-8)
    assert y == pytest.approx(ye, abs=1e-8)
    d = (phi - math.atan2(q2, q1) + math.pi) % (2 * math.pi) - math.pi
    assert abs(d) < 1e-8


def test_degree3_drift(degree3_problem):
    p = degree3_problem
    traj = integrate_flow(p.lam, p.omega, 1.0, START, 100.0)
    d = drift_report(traj, p.integrals)
    assert d["F1"] <= 1e-8 and d["F3"] <= 1e-7 and d["H"] <= 1e-9
    assert traj.energy_error() <= 1e-10


def test_non_integral_drifts(degree3_problem):
    from magtorus.momentum import p2

    p = degree3_problem
    traj = integrate_flow(p.lam, p.omega, 1.0, START, 20.0)
    assert drift_report(traj, {"p2": p2()})["p2"] > 1e-3


def test_constant_field_circle():
    assert constant_field_period_error() <= 1e-8
    # radius sqrt(C) / omega0 circle: after half a period the displacement is a diameter
    w, C = 0.5, 1.0
    traj = integrate_flow(constant(1.0), constant(w), C, (0.0, 0.0, 0.0), math.pi / w)
    x, y, phi = traj.final
    # positions are reported modulo 2 pi; the clockwise circle ends at (0, -2r)
    wrap = lambda v: (v + math.pi) % (2 * math.pi) - math.pi  # noqa: E731
    assert wrap(x) == pytest.approx(0.0, abs=1e-9)
    assert wrap(y + 2 * math.sqrt(C) / w) == pytest.approx(0.0, abs=1e-9)
    assert wrap(phi - math.pi) == pytest.approx(0.0, abs=1e-9)


def test_time_reversal(linear_problem):
    p = linear_problem
    assert time_reversal_error(p.lam, p.omega, 1.0, START, 30.0) <= 1e-7


def test_momenta_on_energy_level(linear_problem):
    q1, q2 = momenta(linear_problem.lam, 2.0, np.array([0.1]), np.array([0.4]), np.array([0.9]))
    H = (q1**2 + q2**2) / (2 * (2 + np.cos(0.4)))
    assert H[0] == pytest.approx(1.0, abs=1e-14)


def test_trajectory_csv_columns(linear_problem):
    p = linear_problem
    traj = integrate_flow(p.lam, p.omega, 1.0, START, 1.0, n_out=5)
    lines = trajectory_csv(traj, {"F1": p.F}).splitlines()
    assert lines[0] == "t,x,y,phi,F1" and len(lines) == 6


def test_halving_study_reduces_drift(linear_problem):
    p = linear_problem
    study = halving_study(p.lam, p.omega, 1.0, START, 20.0, p.F, tol0=1e-6, halvings=3, method="RK45")
    assert len(study.ratios) == 3
    assert all(d1 < d0 for d0, d1 in zip(study.drifts, study.drifts[1:]))
    # first-order-in-tolerance error control: about 2x per halving
    assert 1.5 < study.mean_ratio < 3.0


def test_invalid_energy(linear_problem):
    with pytest.raises(ValueError):
        integrate_flow(linear_problem.lam, linear_problem.omega, -1.0, START, 1.0)


@pytest.mark.parametrize("amp", [1.0, 2.0, 0.5])
def test_hopf_blowup_time(amp):
    res = characteristics_blowup(hopf_charfield(lambda s: amp * np.sin(s)))
    assert res.status == "blowup"
    assert res.t_star == pytest.approx(1.0 / amp, rel=1e-3)


def test_hopf_constant_data():
    res = characteristics_blowup(hopf_charfield(lambda s: np.full_like(s, 0.3)))
    assert res.status == "constant_only" and res.t_star is None
    assert res.to_json() == {"status": "constant_only", "T*": None, "pair_indices": None, "g_values": None}


def test_cubic_characteristics_cross():
    cf = cubic_charfield(1.0, 0.5, 0.0, 1, lambda s: 1.0 + 0.3 * np.sin(s))
    res = characteristics_blowup(cf)
    assert res.status == "blowup" and res.t_star > 0
    flipped = characteristics_blowup(cubic_charfield(1.0, 0.5, 0.0, -1, lambda s: 1.0 + 0.3 * np.sin(s)))
    assert flipped.status == "blowup"
    with pytest.raises(ValueError):
        cubic_charfield(1.0, 0.0, 0.0, 0, np.sin)
