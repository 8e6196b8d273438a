from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magtorus.families import perturb
from magtorus.field import constant, random_field
from magtorus.levels import (
    level_condition,
    level_condition_modes,
    mode_tolerance,
    phi_points,
    required_levels,
    sample_levels,
    split_by_energy,
    sqrtc_polynomialize,
)
from magtorus.momentum import hamiltonian, magnetic_bracket, p1, random_polynomial


def _random_problem(rng, degree=3):
    F = random_polynomial(degree, 2, rng)
    lam = random_field(1, rng, 0.3) + 3.0
    omega = random_field(2, rng)
    return F, lam, omega


def test_condition_is_scaled_bracket_on_the_level(rng):
    F, lam, omega = _random_problem(rng)
    C, n, m = 1.7, 4, 8
    values = level_condition(F, lam, omega, C, n_grid=n, phi_n=m)
    nodes = 2 * np.pi * np.arange(n) / n
    X, Y = (a[..., None] for a in np.meshgrid(nodes, nodes, indexing="ij"))
    phi = 2 * np.pi * np.arange(m) / m
    L = lam(X, Y)
    rho = np.sqrt(C * L)
    br = magnetic_bracket(F, hamiltonian(lam), omega)(X, Y, rho * np.cos(phi), rho * np.sin(phi))
    np.testing.assert_allclose(values, np.sqrt(L / C) * br, atol=1e-9)


def test_modes_are_band_limited(rng):
    F, lam, omega = _random_problem(rng)
    lm = level_condition_modes(F, lam, omega, 2.0, n_grid=6, tol=1.0)
    assert list(lm.modes) == list(range(-4, 5))
    # oversampled phi grid: modes beyond N + 1 vanish
    vals = level_condition(F, lam, omega, 2.0, n_grid=6)
    spec = np.fft.fft(vals, axis=-1) / vals.shape[-1]
    high = np.abs(spec[..., 5 : phi_points(3) - 4])
    assert high.max() < 1e-10 * np.abs(spec).max()


def test_random_cubic_is_polynomial_in_sqrtC(rng):
    F, lam, omega = _random_problem(rng)
    levels = (0.5, 1.0, 1.7, 2.5, 3.3, 4.1, 5.0)
    fit = sqrtc_polynomialize(sample_levels(F, lam, omega, levels, 8))
    assert fit.degree == 4
    assert fit.residual <= 1e-9


def test_fit_needs_enough_levels(rng):
    F, lam, omega = _random_problem(rng)
    with pytest.raises(ValueError):
        sqrtc_polynomialize(sample_levels(F, lam, omega, (1.0, 2.0, 3.0), 4))


def test_required_level_counts():
    assert [required_levels(N) for N in (1, 3, 4)] == [3, 5, 6]
    assert [required_levels(N, sharp=True) for N in (1, 2, 3, 4, 5)] == [1, 2, 2, 3, 3]


def test_family_conserved_on_probe_levels(degree3_problem, degree4_problem):
    d3 = degree3_problem
    s3 = split_by_energy(d3.F, d3.lam, d3.omega, (1.0, 2.0), (5.0, 9.3), sharp=True)
    assert s3.conserved and max(s3.probe_max.values()) <= 1e-9
    d4 = degree4_problem
    s4 = split_by_energy(d4.F, d4.lam, d4.omega, (1.0, 2.0, 3.0), (7.0,), sharp=True)
    assert s4.conserved and max(s4.probe_max.values()) <= 1e-9


def test_full_count_interpolation_certifies(degree3_problem):
    d3 = degree3_problem
    s = split_by_energy(d3.F, d3.lam, d3.omega, (1.0, 2.0, 3.0, 4.0, 5.0), (11.0,))
    assert s.conserved
    assert s.fit_max_coefficient is not None and s.fit_max_coefficient < 1e-9


def test_perturbed_family_is_violated(degree3_problem):
    d3 = degree3_problem
    F = perturb(d3.F, "b2", 0.1)
    s = split_by_energy(F, d3.lam, d3.omega, (1.0, 2.0), (5.0,), sharp=True)
    assert not s.conserved
    assert {c for c, _, _ in s.violations} == {1.0, 2.0, 5.0}


def test_unconserved_momentum_flagged_everywhere():
    one = constant(1.0)
    s = split_by_energy(p1(), one, one, (1.0, 2.0, 3.0), (4.0,))
    assert not s.conserved and len(s.violations) == 4


def test_level_validation(degree3_problem):
    d3 = degree3_problem
    with pytest.raises(ValueError):
        split_by_energy(d3.F, d3.lam, d3.omega, (1.0, 1.0), sharp=True)
    with pytest.raises(ValueError):
        split_by_energy(d3.F, d3.lam, d3.omega, (1.0, -2.0), sharp=True)
    with pytest.raises(ValueError):
        split_by_energy(d3.F, d3.lam, d3.omega, (1.0, 2.0))
    with pytest.raises(ValueError):
        level_condition(d3.F, d3.lam, d3.omega, 0.0)


def test_mode_tolerance_grows_with_level(degree3_problem):
    F = degree3_problem.F
    assert mode_tolerance(F, 4.0) > mode_tolerance(F, 1.0) > 1e-10


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hamiltonian_conserved_on_every_level(seed):
    rng = np.random.default_rng(seed)
    lam = random_field(1, rng, 0.3) + 3.0
    omega = random_field(2, rng)
    s = split_by_energy(hamiltonian(lam), lam, omega, (1.0, 2.0, 3.0, 4.0), (6.5,), n_grid=8)
    assert s.conserved
