from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from magtorus.cascade import (
    alpha_beta,
    bracket_coefficients,
    cascade_residuals,
    coefficient_index,
    coefficient_name,
    conserved_combinations,
    format_system,
    kolokoltsov_check,
    system_terms,
)
from magtorus.families import FamilySpec, build_family, perturb
from magtorus.field import TorusField, random_field
from magtorus.momentum import hamiltonian, magnetic_bracket, random_polynomial


def _symbolic_system(N):
    """2 L^2 {F, H} for generic coefficient functions, expanded by sympy."""
    x, y, q1, q2 = sp.symbols("x y q1 q2")
    L = sp.Function("L")(x, y)
    W = sp.Function("W")(x, y)
    a = {(s, k): sp.Function(f"a{s}_{k}")(x, y) for s in range(N + 1) for k in range(s + 1)}
    F = sum(c * q1 ** (s - k) * q2**k for (s, k), c in a.items())
    H = (q1**2 + q2**2) / (2 * L)
    br = (
        F.diff(x) * H.diff(q1) - F.diff(q1) * H.diff(x)
        + F.diff(y) * H.diff(q2) - F.diff(q2) * H.diff(y)
        + W * (F.diff(q1) * H.diff(q2) - F.diff(q2) * H.diff(q1))
    )
    poly = sp.Poly(sp.expand(2 * L**2 * br), q1, q2)
    return x, y, L, W, a, poly


@pytest.mark.parametrize("N", [2, 3])
def test_system_terms_match_symbolic_bracket(N):
    x, y, L, W, a, poly = _symbolic_system(N)
    build = {
        "Lx": lambda m, n: a[(m, n)] * L.diff(x),
        "Ly": lambda m, n: a[(m, n)] * L.diff(y),
        "dx": lambda m, n: L * a[(m, n)].diff(x),
        "dy": lambda m, n: L * a[(m, n)].diff(y),
        "omega": lambda m, n: L * W * a[(m, n)],
    }
    for (s, k), terms in system_terms(N).items():
        ours = sum((t.coef * build[t.role](t.m, t.n) for t in terms), sp.Integer(0))
        want = poly.coeff_monomial(sp.Symbol("q1") ** (s - k) * sp.Symbol("q2") ** k)
        assert sp.expand(ours - want) == 0, (s, k)


def test_coefficients_equal_scaled_bracket(rng):
    F = random_polynomial(3, 1, rng)
    lam = random_field(1, rng, 0.3) + 3.0
    omega = random_field(1, rng)
    rep = bracket_coefficients(F, lam, omega)
    br = magnetic_bracket(F, hamiltonian(lam), omega)
    for (s, k), M in rep.M.items():
        assert (br.a(s, k) * lam * lam * 2 - M).sup_norm() <= 1e-10 * max(1.0, M.sup_norm())


def _instances():
    lam = TorusField.from_function(lambda x, y: 2 + np.cos(y), 1)
    lam2 = TorusField.from_function(lambda x, y: 3 + np.sin(y) + 0.5 * np.cos(2 * y), 2)
    f1 = TorusField.from_function(lambda x, y: np.sin(y), 1)
    f2 = TorusField.from_function(lambda x, y: np.cos(y) - 0.3 * np.sin(2 * y), 2)
    cubic = [{"K1": 1.0, "s0": 1.0, "s2": 0.5}, {"K1": -0.4, "s0": 0.3, "s2": 0.0}, {"K1": 2.0, "s0": -1.0, "s2": 1.5}]
    quartic = [{"K1": 0.7, "K3": -0.4, "s2": 0.3, "s3": 0.2, "s5": -0.25, "s6": 0.15}, {"K1": -1.0, "s3": 0.5}]
    specs = []
    for L, f in ((lam, f1), (lam2, f2)):
        specs += [FamilySpec(3, L, f, c) for c in cubic] + [FamilySpec(4, L, f, c) for c in quartic]
    return specs


INSTANCES = _instances()
PERTURBATIONS = ["b2", "a0", "c0", "b0", "a1", "a3", "c1", "b1", "a2", "b2"]  # never the constant term


@pytest.mark.parametrize("i", range(10))
def test_zero_coefficients_iff_zero_bracket(i):
    spec = INSTANCES[i]
    F = build_family(spec)
    for G, integrable in ((F, True), (perturb(F, PERTURBATIONS[i], 0.1), False)):
        rep = bracket_coefficients(G, spec.lam, spec.omega)
        br = magnetic_bracket(G, spec.hamiltonian, spec.omega).sup_norm()
        coeffs_zero = rep.max_bracket() <= 1e-10
        assert coeffs_zero == (br <= 1e-10) == integrable


def test_kolokoltsov_constants_on_families(degree3_problem, degree4_problem):
    for prob in (degree3_problem, degree4_problem):
        kk = kolokoltsov_check(prob.F)
        assert (kk.A0, kk.A1) == pytest.approx((1.0, 0.0), abs=1e-12)
        assert kk.nonconstant_mass <= 1e-12


def test_cascade_residuals_vanish_on_families(degree3_problem, degree4_problem):
    for prob in (degree3_problem, degree4_problem):
        rep = bracket_coefficients(prob.F, prob.lam, prob.omega)
        res = cascade_residuals(rep, prob.lam, prob.omega)
        assert max(v for k, v in res.items() if k != "omega_from_fg") <= 1e-10
        assert res["omega_from_fg"] <= 1e-12


def test_perturbation_names_failing_rows(degree3_problem):
    p = degree3_problem
    F = perturb(p.F, "b2", 0.1)
    res = cascade_residuals(bracket_coefficients(F, p.lam, p.omega), p.lam, p.omega)
    failing = {k for k, v in res.items() if v > 1e-10}
    assert {"bracket", "second_group_2", "second_group_4"} <= failing


def test_cubic_conserved_combinations(degree3_problem):
    combos = {c.name: c for c in conserved_combinations(degree3_problem.F)}
    assert combos["K1"].value == pytest.approx(1.0, abs=1e-10)
    assert combos["K2"].value == pytest.approx(0.0, abs=1e-10)
    assert all(c.constancy.deviation <= 1e-10 for c in combos.values())


def test_quartic_conserved_combinations(degree4_problem):
    combos = {c.name: c for c in conserved_combinations(degree4_problem.F)}
    assert set(combos) == {"K1", "K2", "K3", "K4", "K5", "G"}
    assert all(c.constancy.deviation <= 1e-10 for c in combos.values())
    for name in ("G", "K2", "K4", "K5"):
        assert combos[name].value == pytest.approx(0.0, abs=1e-10)
    assert combos["K1"].value == pytest.approx(0.7, abs=1e-10)
    assert combos["K3"].value == pytest.approx(-0.4, abs=1e-10)


def test_alternating_sums_small_case(rng):
    F = random_polynomial(2, 1, rng)
    alpha, beta = alpha_beta(F)
    assert (alpha[0] - (F.a(2, 0) - F.a(2, 2))).sup_norm() == 0
    assert (beta[0] - F.a(2, 1)).sup_norm() == 0
    assert (alpha[1] - F.a(1, 0)).sup_norm() == 0


def test_coefficient_names_round_trip():
    for N in (3, 4):
        for s in range(N + 1):
            for k in range(s + 1):
                assert coefficient_index(N, coefficient_name(N, s, k)) == (s, k)
    assert coefficient_index(3, "b2") == (2, 2)
    with pytest.raises(ValueError):
        coefficient_index(3, "a7")


def test_format_system_lists_every_index():
    text = format_system(3)
    assert sum(1 for line in text.splitlines() if line.startswith("M[")) == sum(s + 1 for s in range(5))
