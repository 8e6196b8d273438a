"""Closed-form integrable magnetic flows with metric and field depending on ``y`` only.

For ``Lambda = Lambda(y)`` and ``Omega = f1'(y) / N`` the linear function
``F1 = p1 - f1(y) / N`` is a first integral on every energy level.  The
cubic and quartic integrals built here are the polynomial combinations of
``F1`` and ``H`` that appear as the only integrable cases of degree 3 and 4;
:func:`identity_reduction_check` confirms each equals its expression in
``F1`` and ``H``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Mapping

from .cascade import coefficient_index
from .field import DEFAULT_RECIPROCAL_TOL, FieldError, TorusField, constancy_test, reciprocal, zero
from .momentum import MomentumPolynomial, hamiltonian, magnetic_bracket, poly_compose

__all__ = [
    "FamilySpec",
    "linear_family",
    "degree3_family",
    "degree4_family",
    "build_family",
    "reduction_rhs",
    "identity_reduction_check",
    "perturb",
    "family_coefficients",
    "bracket_residual",
    "FAMILY_CONSTANTS",
]

FAMILY_CONSTANTS = {
    3: ("K1", "s0", "s1", "s2"),
    4: ("K1", "K3", "s2", "s3", "s5", "s6"),
}


@dataclass(frozen=True)
class FamilySpec:
    """Parameters of a one-variable integrable family.

    Parameters
    ----------
    degree : int
        3 or 4 for the polynomial families; any positive ``N`` for
        :func:`linear_family` powers.
    lam : TorusField
        Conformal factor ``Lambda(y)``, strictly positive.
    f1 : TorusField
        Non-constant ``f1(y)``; the magnetic field is ``f1' / degree``.
    constants : mapping
        ``K1, s0, s2`` (and ``s1``, which must be 0) for degree 3;
        ``K1, K3, s2, s3, s5, s6`` for degree 4.  Missing names default to 0.
    tol : float
        Reciprocal tolerance for ``1 / Lambda``.
    """

    degree: int
    lam: TorusField
    f1: TorusField
    constants: Mapping[str, float] = dc_field(default_factory=dict)
    tol: float = DEFAULT_RECIPROCAL_TOL

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be positive")
        if self.lam.depends_on("x"):
            raise FieldError("Lambda must depend on y only")
        if self.f1.depends_on("x"):
            raise FieldError("f1 must depend on y only")
        if constancy_test(self.f1).is_constant:
            raise FieldError("f1 must be non-constant, otherwise the magnetic field vanishes")
        known = FAMILY_CONSTANTS.get(self.degree)
        if known is not None:
            unknown = set(self.constants) - set(known)
            if unknown:
                raise ValueError(f"unknown constants {sorted(unknown)} for degree {self.degree}")
        if self.degree == 3 and self.constants.get("s1", 0.0) != 0.0:
            raise ValueError("s1 is forced to 0 for the cubic family")
        # validates positivity of Lambda early
        _ = self.inv_lam

    def const(self, name: str) -> float:
        return float(self.constants.get(name, 0.0))

    @cached_property
    def inv_lam(self) -> TorusField:
        return reciprocal(self.lam, self.tol)

    @cached_property
    def omega(self) -> TorusField:
        return self.f1.dy / self.degree

    @cached_property
    def hamiltonian(self) -> MomentumPolynomial:
        return hamiltonian(self.lam, self.tol)

    @cached_property
    def linear_integral(self) -> MomentumPolynomial:
        return linear_family(self.f1, self.degree)[0]


def linear_family(f: TorusField, N: int) -> tuple[MomentumPolynomial, TorusField]:
    """``F1 = p1 - f / N`` and ``Omega = f' / N``.

    ``F1`` commutes with ``H`` for every metric ``Lambda(y)``.
    """
    if f.depends_on("x"):
        raise FieldError("f must depend on y only")
    if N < 1:
        raise ValueError("N must be positive")
    F1 = MomentumPolynomial({(1, 0): 1.0, (0, 0): -f / N})
    return F1, f.dy / N


def _cubic_coefficients(spec: FamilySpec) -> dict[str, TorusField]:
    f1, r = spec.f1, spec.inv_lam
    K1, s0, s2 = spec.const("K1"), spec.const("s0"), spec.const("s2")
    a0 = r * s0 - 1.0
    b2 = (f1 * (-s0) + 3 * s2) * r / 3
    return {
        "a0": a0,
        "a1": zero(),
        "a2": a0 + 1.0,
        "a3": zero(),
        "b0": f1 + b2,
        "b1": zero(),
        "b2": b2,
        "c0": (K1 - f1 * f1) / 3,
        "c1": zero(),
        "d0": (f1 * f1 * f1 - f1 * (3 * K1)) / 27,
    }


def _quartic_coefficients(spec: FamilySpec) -> dict[str, TorusField]:
    f1, r = spec.f1, spec.inv_lam
    c = spec.const
    K1, K3, s2, s3, s5, s6 = c("K1"), c("K3"), c("s2"), c("s3"), c("s5"), c("s6")
    r2 = r * r
    f2 = f1 * f1
    a0 = r2 * s3 + r * s2 - 1.0
    a4 = a0 + 1.0 - r * s2
    b2 = (f1 * (-s2) + 2 * s5) * r / 2
    c2 = (f2 * s2 - f1 * (4 * s5) + 16 * s6) * r / 16
    return {
        "a0": a0,
        "a1": zero(),
        "a2": a0 + a4 + 1.0,
        "a3": zero(),
        "a4": a4,
        "b0": f1 + b2,
        "b1": zero(),
        "b2": b2,
        "b3": zero(),
        "c0": c2 + (K1 - f2 * 1.5) / 4,
        "c1": zero(),
        "c2": c2,
        "d0": (K3 - f1 * (2 * K1) + f2 * f1) / 16,
        "d1": zero(),
        "e0": f1 * (-K3 / 64) + f2 * (K1 / 64) - f2 * f2 / 256,
    }


def _assemble(N: int, named: Mapping[str, TorusField]) -> MomentumPolynomial:
    return MomentumPolynomial.from_indexed({coefficient_index(N, k): v for k, v in named.items()})


def degree3_family(spec: FamilySpec) -> MomentumPolynomial:
    """Cubic integral with ``a1 = a3 = b1 = c1 = 0``, ``a0 = s0/Lambda - 1``,
    ``a2 = a0 + 1``, ``b2 = (3 s2 - s0 f1) / (3 Lambda)``, ``b0 = f1 + b2``,
    ``c0 = (K1 - f1^2) / 3`` and ``d0 = (f1^3 - 3 K1 f1) / 27``."""
    if spec.degree != 3:
        raise ValueError("degree3_family needs a degree-3 spec")
    return _assemble(3, _cubic_coefficients(spec))


def degree4_family(spec: FamilySpec) -> MomentumPolynomial:
    """Quartic integral with ``g = 0`` and ``K2 = K4 = K5 = 0``.

    The remaining coefficients (``a2``, ``b0``, ``c0``, ``d0``)
    follow from ``a2 - a0 - a4 = 1``, ``b0 - b2 = f1``, the constant
    combination ``4 (c0 - c2) + 3/2 f1^2 = K1`` and
    ``16 d0 + 2 K1 f1 - f1^3 = K3``.
    """
    if spec.degree != 4:
        raise ValueError("degree4_family needs a degree-4 spec")
    return _assemble(4, _quartic_coefficients(spec))


def build_family(spec: FamilySpec) -> MomentumPolynomial:
    if spec.degree == 3:
        return degree3_family(spec)
    if spec.degree == 4:
        return degree4_family(spec)
    raise ValueError(f"no polynomial family of degree {spec.degree}")


def family_coefficients(spec: FamilySpec) -> dict[str, TorusField]:
    if spec.degree == 3:
        return _cubic_coefficients(spec)
    if spec.degree == 4:
        return _quartic_coefficients(spec)
    raise ValueError(f"no polynomial family of degree {spec.degree}")


def reduction_rhs(spec: FamilySpec) -> MomentumPolynomial:
    """The family integral written through ``F1`` and ``H``."""
    F1, H = spec.linear_integral, spec.hamiltonian
    c = spec.const
    if spec.degree == 3:
        return poly_compose(
            [
                (-1.0, [F1, F1, F1]),
                (2 * c("s0"), [H, F1]),
                (2 * c("s2"), [H]),
                (c("K1") / 3, [F1]),
            ]
        )
    if spec.degree == 4:
        return poly_compose(
            [
                (-1.0, [F1, F1, F1, F1]),
                (4 * c("s3"), [H, H]),
                (2 * c("s2"), [H, F1, F1]),
                (2 * c("s5"), [H, F1]),
                (2 * c("s6"), [H]),
                (c("K1") / 4, [F1, F1]),
                (c("K3") / 16, [F1]),
            ]
        )
    raise ValueError(f"no reduction identity for degree {spec.degree}")


def identity_reduction_check(F: MomentumPolynomial, spec: FamilySpec) -> float:
    """Largest coefficient sup-norm of ``F - reduction_rhs(spec)``."""
    if F.degree != spec.degree:
        raise ValueError(f"degree mismatch: F has degree {F.degree}, spec {spec.degree}")
    return (F - reduction_rhs(spec)).sup_norm()


def perturb(F: MomentumPolynomial, name: str, delta: float | TorusField) -> MomentumPolynomial:
    """Add ``delta`` to one coefficient, named as ``b2`` or ``"s,k"``."""
    s, k = coefficient_index(F.degree, name)
    return F + MomentumPolynomial({(s - k, k): delta})


def bracket_residual(F: MomentumPolynomial, spec: FamilySpec) -> float:
    return magnetic_bracket(F, spec.hamiltonian, spec.omega).sup_norm()
