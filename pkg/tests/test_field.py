from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magtorus.field import (
    AliasingError,
    BandwidthError,
    DegenerateFieldError,
    TorusField,
    bandwidth_cap,
    constancy_test,
    constant,
    field_from_literal,
    field_to_literal,
    from_grid,
    laplacian,
    make_field,
    random_field,
    reciprocal,
    sqrt,
    to_grid,
)

XY = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(2, 50))


def _sample(f):
    return np.asarray(f(*XY))


def test_trig_modes_evaluate_like_numpy():
    f = make_field([(0, 1, -0.5j), (0, -1, 0.5j), (1, 0, 0.5), (-1, 0, 0.5)])
    x, y = XY
    np.testing.assert_allclose(_sample(f), np.sin(y) + np.cos(x), atol=1e-14)


def test_missing_conjugate_modes_are_filled():
    f = field_from_literal([{"k1": 2, "k2": -1, "re": 1.0}])
    x, y = XY
    np.testing.assert_allclose(_sample(f), 2 * np.cos(2 * x - y), atol=1e-14)


def test_derivatives_match_analytic():
    f = TorusField.from_function(lambda x, y: np.sin(2 * x) * np.cos(y), 3)
    x, y = XY
    np.testing.assert_allclose(_sample(f.dx), 2 * np.cos(2 * x) * np.cos(y), atol=1e-12)
    np.testing.assert_allclose(_sample(f.dy), -np.sin(2 * x) * np.sin(y), atol=1e-12)
    np.testing.assert_allclose(_sample(laplacian(f)), -5 * np.sin(2 * x) * np.cos(y), atol=1e-12)


def test_product_matches_pointwise_product(rng):
    a, b = random_field(3, rng), random_field(2, rng)
    np.testing.assert_allclose(_sample(a * b), _sample(a) * _sample(b), atol=1e-13)
    assert (a * b).bandwidth <= 5


def test_reciprocal_and_sqrt_against_numpy():
    lam = TorusField.from_function(lambda x, y: 2 + np.cos(y), 1)
    x, y = XY
    np.testing.assert_allclose(_sample(reciprocal(lam)), 1 / (2 + np.cos(y)), atol=1e-12)
    np.testing.assert_allclose(_sample(sqrt(lam)), np.sqrt(2 + np.cos(y)), atol=1e-12)


def test_reciprocal_of_vanishing_field_raises():
    with pytest.raises(DegenerateFieldError):
        reciprocal(make_field([(1, 0, 0.5), (-1, 0, 0.5)]))


def test_grid_round_trip(rng):
    f = random_field(4, rng)
    g = to_grid(f, 9)
    back = from_grid(g, 4)
    assert (back - f).sup_norm() < 1e-13
    with pytest.raises(AliasingError):
        to_grid(f, 7)


def test_bandwidth_cap_is_enforced(rng):
    a = random_field(3, rng)
    with bandwidth_cap(4):
        with pytest.raises(BandwidthError):
            a * a
    assert (a * a).bandwidth == 6


def test_constancy():
    assert constancy_test(constant(2.5)).value == 2.5
    c = constancy_test(make_field([(0, 0, 1.0), (0, 1, 1e-3)]))
    assert not c.is_constant and c.value is None


def test_literal_round_trip(rng):
    f = random_field(2, rng)
    assert (field_from_literal(field_to_literal(f)) - f).sup_norm() == 0.0


amp = st.floats(-2, 2, allow_nan=False)


@st.composite
def fields(draw, bandwidth=2):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_field(bandwidth, np.random.default_rng(seed), draw(st.floats(0.1, 3)))


@settings(max_examples=30, deadline=None)
@given(fields(), fields(), fields())
def test_ring_laws(a, b, c):
    assert (a * b - b * a).sup_norm() < 1e-13
    assert ((a + b) * c - (a * c + b * c)).sup_norm() < 1e-12
    assert ((a * b) * c - a * (b * c)).sup_norm() < 1e-12


@settings(max_examples=30, deadline=None)
@given(fields(), fields())
def test_leibniz_rule(a, b):
    assert ((a * b).dx - (a.dx * b + a * b.dx)).sup_norm() < 1e-11
    assert ((a * b).dy - (a.dy * b + a * b.dy)).sup_norm() < 1e-11


@settings(max_examples=20, deadline=None)
@given(fields(bandwidth=1), st.floats(2.0, 5.0))
def test_reciprocal_inverts(a, shift):
    lam = a * (1.0 / max(a.sup_norm(), 1.0)) + shift
    assert (lam * reciprocal(lam) - 1.0).sup_norm() < 1e-11
