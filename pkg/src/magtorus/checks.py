"""Named check batteries used by ``magtorus check`` and ``magtorus suite``.

Each battery returns a :class:`~magtorus.report.Report` whose rows are named
after the residual they measure, so a failing run says which condition
broke.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from .appendix import (
    CascadeCoefficients,
    ab_recurrence_residuals,
    cascade_by_poisson,
    cascade_closed_form,
    cascade_recurrence_residuals,
    poly_AB,
    top_coefficient,
)
from .cascade import bracket_coefficients, cascade_residuals, conserved_combinations, kolokoltsov_check
from .config import ConfigError, Problem, RunConfig, preset
from .dynamics import (
    characteristics_blowup,
    constant_field_period_error,
    drift_report,
    halving_study,
    hopf_charfield,
    integrate_flow,
    time_reversal_error,
)
from .families import identity_reduction_check
from .field import constant, random_field
from .levels import required_levels, sample_levels, split_by_energy, sqrtc_polynomialize
from .momentum import hamiltonian, magnetic_bracket, p1, random_polynomial
from .report import Report

__all__ = ["BATTERIES", "run_battery", "problem_checks", "FLOW_START"]

FLOW_START = (0.3, 0.7, 0.2)
FLOW_T = 100.0
HALVING_TOL0 = 1e-6
HALVINGS = 10
DRIFT_TOL = {1: 1e-8, 3: 1e-7, 4: 1e-7}
OMEGA_TOL = 1e-12
MASS_TOL = 1e-12
FORCED_ZERO = {3: ("K2", "K3", "G"), 4: ("G", "K2", "K4", "K5")}
DEFAULT_LEVELS = {1: (1.0, 2.0, 3.0), 3: (1.0, 2.0), 4: (1.0, 2.0, 3.0)}
DEFAULT_PROBES = {1: (5.0,), 3: (5.0, 9.3), 4: (7.0,)}


def problem_checks(problem: Problem, cfg: RunConfig, report: Report, flow: bool = True) -> Report:
    """Bracket, cascade, constants, level splitting and drift for one problem."""
    F, lam, omega, H = problem.F, problem.lam, problem.omega, problem.H
    N = F.degree
    tol = cfg.tol

    report.add("bracket_with_H", magnetic_bracket(F, H, omega).sup_norm(), tol)
    rep = bracket_coefficients(F, lam, omega)
    res = cascade_residuals(rep, lam, omega)
    normalised = N >= 2 and problem.spec is not None
    for name, value in sorted(res.items()):
        if name.startswith("cascade_") and not normalised:
            continue  # the first-order cascade presumes alpha_0 = -1, beta_0 = 0
        if name in ("fg_compatibility", "omega_from_fg") and not normalised:
            continue
        report.add(name, value, OMEGA_TOL if name == "omega_from_fg" else tol)

    if problem.spec is not None:
        report.add("reduction_identity", identity_reduction_check(F, problem.spec), tol)
    if N in (3, 4):
        kk = kolokoltsov_check(F)
        report.add("kolokoltsov_A0", abs(kk.A0 - 1.0) if kk.A0 is not None else math.inf, tol, f"A0={kk.A0}")
        report.add("kolokoltsov_A1", abs(kk.A1) if kk.A1 is not None else math.inf, tol, f"A1={kk.A1}")
        report.add("kolokoltsov_nonconstant_mass", kk.nonconstant_mass, MASS_TOL)
        for combo in conserved_combinations(F, rep):
            report.add(f"constant_{combo.name}", combo.constancy.deviation, tol, f"value={combo.value}")
            if problem.spec is not None and combo.name in FORCED_ZERO[N]:
                v = combo.value
                report.add(f"forced_zero_{combo.name}", abs(v) if v is not None else math.inf, tol)

    levels = cfg.levels or DEFAULT_LEVELS.get(N, tuple(float(c) for c in range(1, N + 3)))
    probes = cfg.probes if cfg.probes is not None else DEFAULT_PROBES.get(N, (float(N + 5),))
    sharp = len(levels) < N + 2
    if len(levels) >= required_levels(N, sharp):
        split = split_by_energy(F, lam, omega, levels, probes, sharp=sharp, n_grid=cfg.grid)
        worst = max([*split.level_max.values(), *split.probe_max.values()], default=0.0)
        report.add("levels_all_conserved", split.conserved, None, f"levels={list(levels)} probes={list(probes)} max={worst:.2e}")
        report.data["levels"] = split.to_json()
    else:
        report.add("levels_all_conserved", False, None, f"need {required_levels(N, True)} levels, got {len(levels)}")

    if flow:
        traj = integrate_flow(lam, omega, 1.0, FLOW_START, FLOW_T)
        drifts = drift_report(traj, problem.integrals)
        for name, d in sorted(drifts.items()):
            deg = problem.integrals[name].degree
            report.add(f"drift_{name}", d, 1e-9 if name == "H" else DRIFT_TOL.get(deg, 1e-7))
        report.add("energy_reconstruction", traj.energy_error(), 1e-10)
    return report


def _problem_battery(name: str) -> Callable[[RunConfig, Problem | None], Report]:
    def run(cfg: RunConfig, problem: Problem | None = None) -> Report:
        prob = problem or preset(name, cfg.reciprocal_tol)
        if cfg.perturb:
            prob = prob.perturbed(cfg.perturb)
        report = Report(prob.name)
        return problem_checks(prob, cfg, report)

    return run


def levels_battery(cfg: RunConfig, problem: Problem | None = None) -> Report:
    rep = Report("levels")
    rng = np.random.default_rng(2024)
    F = random_polynomial(3, 2, rng)
    lam = random_field(1, rng, 0.3) + 3.0
    omega = random_field(2, rng)
    lv = (0.5, 1.0, 1.7, 2.5, 3.3, 4.1, 5.0)
    fit = sqrtc_polynomialize(sample_levels(F, lam, omega, lv, cfg.grid))
    rep.add("random_cubic_sqrtC_fit_residual", fit.residual, 1e-9)
    one = constant(1.0)
    viol = split_by_energy(p1(), one, one, (1.0, 2.0, 3.0), (4.0,), n_grid=cfg.grid)
    rep.add("p1_unit_field_violated_everywhere", len(viol.violations) == 4 and not viol.conserved)
    Hs = split_by_energy(hamiltonian(lam), lam, omega, (1.0, 2.0, 3.0, 4.0), (6.0,), n_grid=cfg.grid)
    rep.add("H_conserved", Hs.conserved)
    for name in ("degree3", "degree4"):
        prob = preset(name, cfg.reciprocal_tol)
        N = prob.F.degree
        lvs = DEFAULT_LEVELS[N]
        s = split_by_energy(prob.F, prob.lam, prob.omega, lvs, DEFAULT_PROBES[N], sharp=True, n_grid=cfg.grid)
        worst = max(s.probe_max.values())
        rep.add(f"{name}_probe_levels", worst, 1e-9, f"levels={list(lvs)} probes={list(DEFAULT_PROBES[N])}")
    return rep


def _potential_pair(rng: np.random.Generator, bandwidth: int = 3, scale: float = 1.0):
    phi = random_field(bandwidth, rng, scale)
    return phi.dy, phi.dx


def appendix_battery(cfg: RunConfig, problem: Problem | None = None, n_max: int = 8) -> Report:
    rep = Report("appendix")
    rng = np.random.default_rng(7)
    f, g = _potential_pair(rng)
    rep.add("AB_sum_vs_complex", max(poly_AB(n, f, g).agreement for n in range(n_max + 1)), 1e-12, f"n<={n_max}")
    recurrence = max(max(ab_recurrence_residuals(n, f, g).values()) for n in range(6))
    rep.add("AB_recurrences", recurrence, 1e-10, "n<=5")
    worst_res = worst_poisson = 0.0
    for N in range(2, n_max + 1):
        co = CascadeCoefficients(N, {j: float(rng.normal()) for j in range(2, N + 1)}, {j: float(rng.normal()) for j in range(2, N + 1)})
        sol = cascade_closed_form(N, co, f, g)
        worst_res = max(worst_res, max(cascade_recurrence_residuals(N, sol, f, g).values()))
        po = cascade_by_poisson(N, f, g, {j: (sol[j][0].mean, sol[j][1].mean) for j in sol})
        worst_poisson = max(worst_poisson, max(max((sol[j][0] - po[j][0]).sup_norm(), (sol[j][1] - po[j][1]).sup_norm()) for j in sol))
    rep.add("closed_form_cascade_residual", worst_res, 1e-10, f"2<=N<={n_max}")
    rep.add("closed_form_vs_poisson", worst_poisson, 1e-10)
    rep.add("closed_form_low_orders_exact", _exact_low_orders(n_max))
    rep.add("top_coefficient_product", all(_top_ok(N) for N in range(2, n_max + 1)))
    return rep


def _exact_low_orders(n_max: int) -> bool:
    """Compare the j = 2, 3 tables with the explicit low-order formulas in exact rationals."""
    a2, b2, a3, b3 = Fraction(3, 7), Fraction(-2, 5), Fraction(5, 11), Fraction(1, 3)
    for N in range(3, n_max + 1):
        co = CascadeCoefficients(N, {2: a2, 3: a3}, {2: b2, 3: b3})
        t2, t3 = co.tables[2], co.tables[3]
        want2 = {-1: (a2 / N, b2 / N), 1: (-Fraction(N - 1, N), Fraction(0))}
        want3 = {
            -1: (a3 / N, b3 / N),
            0: (-Fraction(N - 2, N * N) * a2, -Fraction(N - 2, N * N) * b2),
            2: (Fraction((N - 2) * (N - 1), N * N), Fraction(0)),
        }
        if t2 != want2 or t3 != want3:
            return False
    return True


def _top_ok(N: int) -> bool:
    co = CascadeCoefficients(N)
    for j in range(1, N + 1):
        prod = Fraction(1)
        for i in range(N - j + 1, N):
            prod *= i
        if co.m(j - 1, j) != (-1) ** (j - 1) * prod / Fraction(N) ** (j - 1) or co.m(j - 1, j) != top_coefficient(N, j - 1):
            return False
    return True


def dynamics_battery(cfg: RunConfig, problem: Problem | None = None) -> Report:
    rep = Report("dynamics")
    lin = preset("linear", cfg.reciprocal_tol)
    traj = integrate_flow(lin.lam, lin.omega, 1.0, FLOW_START, FLOW_T)
    rep.add("linear_drift_F1", drift_report(traj, {"F1": lin.F})["F1"], 1e-8)
    d3 = preset("degree3", cfg.reciprocal_tol)
    traj3 = integrate_flow(d3.lam, d3.omega, 1.0, FLOW_START, FLOW_T)
    drifts = drift_report(traj3, d3.integrals)
    rep.add("degree3_drift_F1", drifts["F1"], 1e-8)
    rep.add("degree3_drift_F3", drifts["F3"], 1e-7)
    rep.add("degree3_drift_H", drifts["H"], 1e-9)
    rep.add("energy_reconstruction", traj3.energy_error(), 1e-10)
    rep.add("constant_field_period_error", constant_field_period_error(), 1e-8)
    rep.add("time_reversal_error", time_reversal_error(lin.lam, lin.omega, 1.0, FLOW_START, FLOW_T), 1e-7)
    study = halving_study(lin.lam, lin.omega, 1.0, FLOW_START, FLOW_T, lin.F, tol0=HALVING_TOL0, halvings=HALVINGS)
    rep.add(
        "tolerance_halving_drift_ratio",
        study.mean_ratio,
        4.0,
        "ratios=" + ",".join(f"{r:.2f}" for r in study.ratios),
        bound="lower",
    )
    rep.data["halving"] = {"tolerances": list(study.tolerances), "drifts": list(study.drifts), "ratios": list(study.ratios)}
    hopf = characteristics_blowup(hopf_charfield())
    rep.add("hopf_blowup_time", abs(hopf.t_star - 1.0) if hopf.t_star is not None else math.inf, 0.01, f"T*={hopf.t_star}")
    const = characteristics_blowup(hopf_charfield(lambda s: np.full_like(s, 0.7)))
    rep.add("constant_data_constant_only", const.status == "constant_only")
    return rep


BATTERIES: dict[str, Callable[..., Report]] = {
    "linear": _problem_battery("linear"),
    "degree3": _problem_battery("degree3"),
    "degree4": _problem_battery("degree4"),
    "levels": levels_battery,
    "appendix": appendix_battery,
    "dynamics": dynamics_battery,
}


def run_battery(name: str, cfg: RunConfig, problem: Problem | None = None) -> Report:
    try:
        fn = BATTERIES[name]
    except KeyError:
        raise ConfigError(f"unknown battery {name!r}; choose from {sorted(BATTERIES)}") from None
    return fn(cfg, problem)
