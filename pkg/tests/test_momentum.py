from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magtorus.field import TorusField, random_field
from magtorus.momentum import MomentumPolynomial, hamiltonian, magnetic_bracket, p1, p2, random_polynomial


def _fd_bracket(F, G, omega, x, y, q1, q2, h=1e-5):
    """Magnetic bracket by central differences of pointwise evaluations."""

    def d(P, i):
        e = np.zeros(4)
        e[i] = h
        pt = np.array([x, y, q1, q2])
        return (P(*(pt + e)) - P(*(pt - e))) / (2 * h)

    Fx, Fy, Fp1, Fp2 = (d(F, i) for i in range(4))
    Gx, Gy, Gp1, Gp2 = (d(G, i) for i in range(4))
    return Fx * Gp1 - Fp1 * Gx + Fy * Gp2 - Fp2 * Gy + omega(x, y) * (Fp1 * Gp2 - Fp2 * Gp1)


def test_evaluation_matches_direct_sum(rng):
    F = random_polynomial(3, 1, rng)
    x, y, q1, q2 = 0.4, 1.3, -0.7, 0.9
    want = sum(float(c(x, y)) * q1**m1 * q2**m2 for (m1, m2), c in F)
    assert float(F(x, y, q1, q2)) == pytest.approx(want, abs=1e-12)


def test_bracket_matches_finite_differences(rng):
    F, G = random_polynomial(3, 1, rng), random_polynomial(2, 1, rng)
    omega = random_field(1, rng)
    br = magnetic_bracket(F, G, omega)
    for x, y, q1, q2 in rng.uniform(-1, 3, size=(5, 4)):
        assert float(br(x, y, q1, q2)) == pytest.approx(_fd_bracket(F, G, omega, x, y, q1, q2), abs=1e-6)


def test_linear_integral_commutes():
    lam = TorusField.from_function(lambda x, y: 2 + np.cos(y), 1)
    u = TorusField.from_function(lambda x, y: np.sin(y), 1)
    F = p1() + u
    br = magnetic_bracket(F, hamiltonian(lam), -u.dy)
    assert br.sup_norm() <= 1e-10
    # the opposite sign of the magnetic field breaks it
    assert magnetic_bracket(F, hamiltonian(lam), u.dy).sup_norm() > 0.1


def test_hamiltonian_shape():
    lam = TorusField.from_function(lambda x, y: 3 + np.sin(x), 1)
    H = hamiltonian(lam)
    assert H.degree == 2
    assert float(H(0.5, 0.0, 1.0, 2.0)) == pytest.approx(5 / (2 * (3 + np.sin(0.5))), abs=1e-12)


def test_json_round_trip(rng):
    F = random_polynomial(2, 1, rng)
    assert (MomentumPolynomial.from_json(F.to_json()) - F).is_zero


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        MomentumPolynomial({(-1, 0): 1.0})


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bracket_antisymmetric_and_self_zero(seed):
    rng = np.random.default_rng(seed)
    F, G = random_polynomial(2, 1, rng), random_polynomial(2, 1, rng)
    omega = random_field(1, rng)
    assert (magnetic_bracket(F, G, omega) + magnetic_bracket(G, F, omega)).sup_norm() < 1e-12
    assert magnetic_bracket(F, F, omega).sup_norm() < 1e-12


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_bracket_leibniz(seed):
    rng = np.random.default_rng(seed)
    F, G, K = (random_polynomial(1, 1, rng) for _ in range(3))
    omega = random_field(1, rng)
    lhs = magnetic_bracket(F * G, K, omega)
    rhs = F * magnetic_bracket(G, K, omega) + G * magnetic_bracket(F, K, omega)
    assert (lhs - rhs).sup_norm() < 1e-11


def test_momentum_coordinates_commute_up_to_field(rng):
    omega = random_field(1, rng)
    assert (magnetic_bracket(p1(), p2(), omega) - MomentumPolynomial.from_field(omega)).sup_norm() < 1e-14
