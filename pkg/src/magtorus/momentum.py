"""Polynomials in the momenta (p1, p2) with torus-field coefficients.

Also the magnetic Poisson bracket

    {F, G} = sum_i (F_{x_i} G_{p_i} - F_{p_i} G_{x_i})
             + Omega (F_{p1} G_{p2} - F_{p2} G_{p1})

and the conformal-metric Hamiltonian ``H = (p1^2 + p2^2) / (2 Lambda)``.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .field import (
    DEFAULT_RECIPROCAL_TOL,
    TorusField,
    constant,
    derivative,
    field_from_literal,
    field_to_literal,
    reciprocal,
    zero,
)

__all__ = [
    "MomentumPolynomial",
    "PhasePoint",
    "hamiltonian",
    "magnetic_bracket",
    "poly_compose",
    "evaluate_phase",
    "p1",
    "p2",
    "random_polynomial",
]

Exponent = tuple[int, int]
TWO_PI = 2.0 * math.pi


class MomentumPolynomial:
    """Immutable map ``(m1, m2) -> TorusField`` meaning
    ``sum a_{m1,m2}(x, y) p1**m1 p2**m2``.

    Terms whose coefficient is the zero field are never stored, so the zero
    polynomial is the one with no terms.  Scalars are accepted wherever a
    coefficient field is expected.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Exponent, TorusField | float] | None = None):
        clean: dict[Exponent, TorusField] = {}
        for (m1, m2), c in (terms or {}).items():
            if m1 < 0 or m2 < 0:
                raise ValueError(f"negative exponent {(m1, m2)}")
            field = c if isinstance(c, TorusField) else constant(float(c))
            if not field.is_zero:
                clean[(int(m1), int(m2))] = field
        self._terms = clean

    @classmethod
    def monomial(cls, m1: int, m2: int, coeff: TorusField | float = 1.0) -> "MomentumPolynomial":
        return cls({(m1, m2): coeff})

    @classmethod
    def from_field(cls, field: TorusField | float) -> "MomentumPolynomial":
        return cls({(0, 0): field})

    @classmethod
    def from_indexed(cls, coeffs: Mapping[tuple[int, int], TorusField | float]) -> "MomentumPolynomial":
        """Build from ``a_{s,k}`` keyed by ``(s, k)``: the coefficient of
        ``p1**(s-k) p2**k``."""
        out = {}
        for (s, k), c in coeffs.items():
            if not 0 <= k <= s:
                raise ValueError(f"index (s={s}, k={k}) needs 0 <= k <= s")
            out[(s - k, k)] = c
        return cls(out)

    # ------------------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, TorusField]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        """Largest total exponent stored; ``-1`` for the zero polynomial."""
        return max((m1 + m2 for m1, m2 in self._terms), default=-1)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, m1: int, m2: int) -> TorusField:
        return self._terms.get((m1, m2), zero())

    def a(self, s: int, k: int) -> TorusField:
        """Coefficient of ``p1**(s-k) p2**k``, zero outside ``0 <= k <= s``."""
        if s < 0 or k < 0 or k > s:
            return zero()
        return self.coefficient(s - k, k)

    def homogeneous(self, s: int) -> "MomentumPolynomial":
        return MomentumPolynomial({m: c for m, c in self._terms.items() if sum(m) == s})

    def bandwidth(self) -> int:
        return max((c.bandwidth for c in self._terms.values()), default=0)

    def sup_norm(self) -> float:
        """Largest coefficient sup-norm (a scale, not a phase-space norm)."""
        return max((c.sup_norm() for c in self._terms.values()), default=0.0)

    def __iter__(self) -> Iterator[tuple[Exponent, TorusField]]:
        return iter(sorted(self._terms.items()))

    def __len__(self) -> int:
        return len(self._terms)

    # ------------------------------------------------------------------
    # ring operations
    def __add__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out[m] + c if m in out else c
        return MomentumPolynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "MomentumPolynomial":
        return MomentumPolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (numbers.Real, TorusField)):
            return MomentumPolynomial({m: c * other for m, c in self._terms.items()})
        if not isinstance(other, MomentumPolynomial):
            return NotImplemented
        out: dict[Exponent, TorusField] = {}
        for (a1, a2), ca in self._terms.items():
            for (b1, b2), cb in other._terms.items():
                key = (a1 + b1, a2 + b2)
                prod = ca * cb
                out[key] = out[key] + prod if key in out else prod
        return MomentumPolynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, n: int) -> "MomentumPolynomial":
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = MomentumPolynomial.from_field(1.0)
        for _ in range(n):
            result = result * self
        return result

    # ------------------------------------------------------------------
    # calculus
    def dp(self, i: int) -> "MomentumPolynomial":
        """Derivative with respect to ``p1`` (``i=1``) or ``p2`` (``i=2``)."""
        if i not in (1, 2):
            raise ValueError("momentum index must be 1 or 2")
        out = {}
        for (m1, m2), c in self._terms.items():
            m = m1 if i == 1 else m2
            if m == 0:
                continue
            key = (m1 - 1, m2) if i == 1 else (m1, m2 - 1)
            out[key] = c * m
        return MomentumPolynomial(out)

    def dq(self, axis: str) -> "MomentumPolynomial":
        """Derivative with respect to the position ``x`` or ``y``."""
        return MomentumPolynomial({m: derivative(c, axis) for m, c in self._terms.items()})

    # ------------------------------------------------------------------
    def __call__(self, x, y, p1, p2):
        x, y, p1, p2 = (np.asarray(v, dtype=float) for v in (x, y, p1, p2))
        shape = np.broadcast_shapes(x.shape, y.shape, p1.shape, p2.shape)
        # coefficients are evaluated at the (possibly lower-dimensional) positions only
        total = np.zeros(shape)
        for (m1, m2), c in self._terms.items():
            total = total + c(x, y) * p1**m1 * p2**m2
        return total if total.ndim else float(total)

    def to_json(self) -> dict[str, list[dict[str, float]]]:
        return {f"{m1},{m2}": field_to_literal(c) for (m1, m2), c in sorted(self._terms.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, Sequence[Mapping[str, float]]]) -> "MomentumPolynomial":
        terms = {}
        for key, records in data.items():
            try:
                m1, m2 = (int(v) for v in key.split(","))
            except ValueError:
                raise ValueError(f"bad exponent key {key!r}; expected 'm1,m2'") from None
            terms[(m1, m2)] = field_from_literal(records)
        return cls(terms)

    def __repr__(self) -> str:
        parts = [f"p1^{m1} p2^{m2}: bw{c.bandwidth}" for (m1, m2), c in sorted(self._terms.items())]
        return f"MomentumPolynomial(degree={self.degree}, [{'; '.join(parts)}])"


def _as_poly(value) -> MomentumPolynomial | None:
    if isinstance(value, MomentumPolynomial):
        return value
    if isinstance(value, (numbers.Real, TorusField)):
        return MomentumPolynomial.from_field(value)
    return None


def p1() -> MomentumPolynomial:
    return MomentumPolynomial.monomial(1, 0)


def p2() -> MomentumPolynomial:
    return MomentumPolynomial.monomial(0, 1)


@dataclass(frozen=True)
class PhasePoint:
    """Point ``(x, y, p1, p2)`` of the cotangent bundle; positions are reduced mod 2 pi."""

    x: float
    y: float
    p1: float
    p2: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % TWO_PI)
        object.__setattr__(self, "y", float(self.y) % TWO_PI)


def hamiltonian(lam: TorusField, tol: float = DEFAULT_RECIPROCAL_TOL) -> MomentumPolynomial:
    """``H = (p1^2 + p2^2) / (2 Lambda)`` with ``1/Lambda`` approximated to ``tol``.

    Raises :class:`~magtorus.field.DegenerateFieldError` if ``lam`` vanishes.
    """
    half_inv = reciprocal(lam, tol) * 0.5
    return MomentumPolynomial({(2, 0): half_inv, (0, 2): half_inv})


def magnetic_bracket(F: MomentumPolynomial, G: MomentumPolynomial, omega: TorusField) -> MomentumPolynomial:
    F_p1, F_p2 = F.dp(1), F.dp(2)
    G_p1, G_p2 = G.dp(1), G.dp(2)
    canonical = F.dq("x") * G_p1 - F_p1 * G.dq("x") + F.dq("y") * G_p2 - F_p2 * G.dq("y")
    if omega.is_zero:
        return canonical
    return canonical + (F_p1 * G_p2 - F_p2 * G_p1) * omega


def poly_compose(terms: Iterable[tuple[float, Sequence[MomentumPolynomial]]]) -> MomentumPolynomial:
    """Evaluate ``sum_i scalar_i * prod(factors_i)`` exactly.

    >>> F1 = p1()
    >>> poly_compose([(1.0, [F1]), (-1.0, [F1])]).is_zero
    True
    """
    total = MomentumPolynomial()
    for scalar, factors in terms:
        prod = MomentumPolynomial.from_field(1.0)
        for fac in factors:
            prod = prod * fac
        total = total + prod * float(scalar)
    return total


def evaluate_phase(F: MomentumPolynomial, pt: PhasePoint) -> float:
    return float(F(pt.x, pt.y, pt.p1, pt.p2))


def random_polynomial(degree: int, bandwidth: int, rng: np.random.Generator, scale: float = 1.0) -> MomentumPolynomial:
    """Polynomial with every coefficient up to total degree ``degree`` drawn by
    :func:`~magtorus.field.random_field`."""
    from .field import random_field

    return MomentumPolynomial(
        {(m1, s - m1): random_field(bandwidth, rng, scale) for s in range(degree + 1) for m1 in range(s + 1)}
    )
