"""Polynomial solution of the alternating-sum cascade.

With ``f_x = g_y`` and ``w = f_y + g_x`` the cascade

    N Lap(alpha_j) + (N+1-j) ([alpha_{j-1} w]_y - [beta_{j-1} w]_x) = 0
    N Lap(beta_j)  + (N+1-j) ([alpha_{j-1} w]_x + [beta_{j-1} w]_y) = 0

started from ``alpha_0 = -1``, ``beta_0 = 0`` is solved by polynomials in
``f`` and ``g`` built from

    A_n + i B_n = (f + i g)^(n+1) / (n+1)!.

Writing ``Z_n = A_n + i B_n`` (and ``Z_{-1} = 1``) the solution is
``alpha_j + i beta_j = sum_{i=-1}^{j-1} kappa_j[i] Z_i``, where each step
shifts every term up one index with factor ``-(N-j)/N`` and adds the free
harmonic constant ``(a_{j+1} + i b_{j+1}) / N``:

    kappa_{j+1}[i+1] = -(N-j)/N * kappa_j[i],
    kappa_{j+1}[-1]  = (a_{j+1} + i b_{j+1}) / N.

The real and imaginary parts of ``kappa_j[i]`` are the tables ``m_i(j)`` and
``n_i(j)``; the top entry ``kappa_j[j-1]`` is the real number
``c_{j-1} = (-1)^(j-1) (N-j+1)...(N-1) / N^(j-1)``.

The recursion is done in whatever scalar arithmetic the constants are given
in (``int``/``Fraction`` give exact rationals, ``sympy`` symbols give
closed formulas), and only converted to floats when fields are assembled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .field import TorusField, laplacian, zero

__all__ = [
    "AppendixError",
    "ab_binomial",
    "ab_complex",
    "ABPair",
    "poly_AB",
    "ab_recurrence_residuals",
    "CascadeCoefficients",
    "closed_form_tables",
    "closed_form_expression",
    "cascade_closed_form",
    "cascade_recurrence_residuals",
    "cascade_by_poisson",
    "inverse_laplacian",
    "top_coefficient",
]

AB_AGREEMENT_TOL = 1e-12
PRECONDITION_TOL = 1e-12


class AppendixError(ValueError):
    """Precondition or self-consistency failure in the appendix calculus."""


# ----------------------------------------------------------------------
# A_n, B_n


def ab_binomial(n: int, f: Any, g: Any) -> tuple[Any, Any]:
    """``A_n`` and ``B_n`` from the binomial sums.

    Works for any ring elements supporting ``+``, ``*``, integer powers and
    division by an integer (fields, sympy expressions, Fractions).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    fact = math.factorial(n + 1)
    A = None
    for k in range((n + 1) // 2 + 1):
        term = f ** (n - 2 * k + 1) * g ** (2 * k) * ((-1) ** k * math.comb(n + 1, 2 * k))
        A = term if A is None else A + term
    B = None
    for k in range(1, (n + 2) // 2 + 1):
        term = f ** (n - 2 * k + 2) * g ** (2 * k - 1) * ((-1) ** (k + 1) * math.comb(n + 1, 2 * k - 1))
        B = term if B is None else B + term
    return A / fact, B / fact


def ab_complex(n: int, f: Any, g: Any) -> tuple[Any, Any]:
    """``A_n``, ``B_n`` as real and imaginary parts of ``(f + i g)^(n+1) / (n+1)!``.

    The complex power is carried as a (real, imaginary) pair, so this path
    never touches a binomial coefficient.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    re, im = f, g
    for _ in range(n):
        re, im = re * f - im * g, re * g + im * f
    fact = math.factorial(n + 1)
    return re / fact, im / fact


@dataclass(frozen=True)
class ABPair:
    n: int
    A: TorusField
    B: TorusField
    agreement: float


def poly_AB(n: int, f: TorusField, g: TorusField, tol: float = AB_AGREEMENT_TOL) -> ABPair:
    """``(A_n, B_n)`` computed both ways; raises if they differ by more than ``tol``.

    >>> from magtorus.field import constant
    >>> p = poly_AB(1, constant(3.0), constant(1.0))
    >>> round(p.A.mean, 12), round(p.B.mean, 12)
    (4.0, 3.0)
    """
    A, B = ab_binomial(n, f, g)
    Ac, Bc = ab_complex(n, f, g)
    agreement = max((A - Ac).sup_norm(), (B - Bc).sup_norm())
    if agreement > tol:
        raise AppendixError(f"binomial and complex forms of A_{n}, B_{n} differ by {agreement:.3e}")
    return ABPair(n, A, B, agreement)


def _check_compatible(f: TorusField, g: TorusField, tol: float) -> float:
    gap = (f.dx - g.dy).sup_norm()
    if gap > tol:
        raise AppendixError(f"f_x - g_y = {gap:.3e} exceeds {tol:.1e}; f and g must come from a potential")
    return gap


def ab_recurrence_residuals(n: int, f: TorusField, g: TorusField, precondition_tol: float = PRECONDITION_TOL) -> dict[str, float]:
    """Residuals of the ``A_n``/``B_n`` recurrences for compatible ``f, g``.

    ``raise_a``  A_n w - (A_{n+1})_y - (B_{n+1})_x
    ``raise_b``  B_n w + (A_{n+1})_x - (B_{n+1})_y
    ``a_y``      (A_{n+1})_y - (A_n f_y - B_n g_y)
    ``b_x``      (B_{n+1})_x - (B_n f_x + A_n g_x)

    where ``w = f_y + g_x``.
    """
    _check_compatible(f, g, precondition_tol)
    An, Bn = ab_binomial(n, f, g)
    A1, B1 = ab_binomial(n + 1, f, g)
    w = f.dy + g.dx
    return {
        "raise_a": (An * w - A1.dy - B1.dx).sup_norm(),
        "raise_b": (Bn * w + A1.dx - B1.dy).sup_norm(),
        "a_y": (A1.dy - (An * f.dy - Bn * g.dy)).sup_norm(),
        "b_x": (B1.dx - (Bn * f.dx + An * g.dx)).sup_norm(),
    }


# ----------------------------------------------------------------------
# closed-form tables


def _ratio(N: Any, j: int) -> Any:
    """``(N - j) / N`` exactly: a Fraction for integer ``N``, symbolic otherwise."""
    if isinstance(N, int):
        return Fraction(N - j, N)
    return (N - j) / N


def top_coefficient(N: Any, j: int) -> Any:
    """``c_j = (-1)^j (N-j)(N-j+1)...(N-1) / N^j`` (empty product for ``j = 0``)."""
    out: Any = Fraction(1) if isinstance(N, int) else 1
    for i in range(1, j + 1):
        out = out * (-_ratio(N, i))
    return out


def closed_form_tables(
    N: Any, j_max: int, a: Mapping[int, Any] | None = None, b: Mapping[int, Any] | None = None
) -> dict[int, dict[int, tuple[Any, Any]]]:
    """``kappa_j[i] = (m_i(j), n_i(j))`` for ``0 <= j <= j_max`` and ``-1 <= i <= j - 1``.

    ``a`` and ``b`` give the free constants ``a_j``, ``b_j`` for ``j >= 2``
    (missing ones are 0).  ``a_1 = b_1 = 0`` because ``alpha_1 = f`` and
    ``beta_1 = g`` by definition.  Entries that are identically zero are
    omitted.
    """
    a = dict(a or {})
    b = dict(b or {})
    for name, table in (("a", a), ("b", b)):
        for j in table:
            if j < 2:
                raise ValueError(f"{name}_{j} is fixed by alpha_0 = -1, beta_0 = 0, alpha_1 = f, beta_1 = g")
    one: Any = Fraction(1) if isinstance(N, int) else 1
    tables: dict[int, dict[int, tuple[Any, Any]]] = {0: {-1: (-one, 0 * one)}}
    for j in range(j_max):
        r = _ratio(N, j)
        nxt: dict[int, tuple[Any, Any]] = {}
        for i, (m, n) in tables[j].items():
            nxt[i + 1] = (-r * m, -r * n)
        const = (a.get(j + 1, 0) / _as_scalar(N), b.get(j + 1, 0) / _as_scalar(N))
        nxt[-1] = const
        tables[j + 1] = {i: mn for i, mn in nxt.items() if not (_is_zero(mn[0]) and _is_zero(mn[1]))}
    return tables


def _as_scalar(N: Any) -> Any:
    return Fraction(N) if isinstance(N, int) else N


def _is_zero(v: Any) -> bool:
    try:
        return bool(v == 0)
    except TypeError:  # pragma: no cover - exotic scalar types
        return False


@dataclass
class CascadeCoefficients:
    """Free constants and the derived tables of the closed-form cascade.

    ``a[j]``, ``b[j]`` (``j >= 2``) are the harmonic constants picked up at
    each integration step.  ``m(i, j)``, ``n(i, j)`` and ``c(j)`` expose the
    coefficient tables produced by the recursion.
    """

    N: Any
    a: dict[int, Any] = dc_field(default_factory=dict)
    b: dict[int, Any] = dc_field(default_factory=dict)
    j_max: int | None = None

    def __post_init__(self):
        if self.j_max is None:
            if not isinstance(self.N, int):
                raise ValueError("j_max is required when N is symbolic")
            self.j_max = self.N
        self._tables = closed_form_tables(self.N, self.j_max, self.a, self.b)

    @property
    def tables(self) -> dict[int, dict[int, tuple[Any, Any]]]:
        return self._tables

    def kappa(self, i: int, j: int) -> tuple[Any, Any]:
        zero_: Any = 0
        return self._tables[j].get(i, (zero_, zero_))

    def m(self, i: int, j: int) -> Any:
        return self.kappa(i, j)[0]

    def n(self, i: int, j: int) -> Any:
        return self.kappa(i, j)[1]

    def c(self, j: int) -> Any:
        return top_coefficient(self.N, j)


def closed_form_expression(coeffs: CascadeCoefficients, j: int, A: Mapping[int, Any], B: Mapping[int, Any]) -> tuple[Any, Any]:
    """``(alpha_j, beta_j)`` assembled from the tables and given ``A_i``, ``B_i``.

    ``A``/``B`` may hold fields or symbolic expressions; scalar entries of
    the tables are used as they are, so exactness is preserved for sympy.
    """
    alpha: Any = 0
    beta: Any = 0
    for i, (m, n) in sorted(coeffs.tables[j].items()):
        if i == -1:
            alpha, beta = alpha + m, beta + n
        else:
            alpha = alpha + m * A[i] - n * B[i]
            beta = beta + m * B[i] + n * A[i]
    return alpha, beta


def cascade_closed_form(
    N: int, coeffs: CascadeCoefficients, f: TorusField, g: TorusField, precondition_tol: float = PRECONDITION_TOL
) -> dict[int, tuple[TorusField, TorusField]]:
    """``j -> (alpha_j, beta_j)`` for ``0 <= j <= N`` as fields."""
    if coeffs.N != N:
        raise ValueError("coefficient tables were built for a different degree")
    _check_compatible(f, g, precondition_tol)
    A: dict[int, TorusField] = {}
    B: dict[int, TorusField] = {}
    for i in range(max(N - 1, 0) + 1):
        A[i], B[i] = ab_complex(i, f, g)
    out: dict[int, tuple[TorusField, TorusField]] = {}
    for j in range(N + 1):
        num = _float_tables(coeffs, j)
        alpha, beta = zero(), zero()
        for i, (m, n) in num:
            if i == -1:
                alpha, beta = alpha + m, beta + n
            else:
                alpha = alpha + A[i] * m - B[i] * n
                beta = beta + B[i] * m + A[i] * n
        out[j] = (alpha, beta)
    return out


def _float_tables(coeffs: CascadeCoefficients, j: int) -> list[tuple[int, tuple[float, float]]]:
    return [(i, (float(m), float(n))) for i, (m, n) in sorted(coeffs.tables[j].items())]


def cascade_recurrence_residuals(
    N: int, solution: Mapping[int, tuple[TorusField, TorusField]], f: TorusField, g: TorusField
) -> dict[str, float]:
    """Sup-norms of both second-order cascade equations for ``1 <= j <= N``."""
    w = f.dy + g.dx
    res: dict[str, float] = {}
    for j in range(1, N + 1):
        aj, bj = solution[j]
        ap, bp = solution[j - 1]
        aw, bw = ap * w, bp * w
        r_alpha = laplacian(aj) * N + (aw.dy - bw.dx) * (N + 1 - j)
        r_beta = laplacian(bj) * N + (aw.dx + bw.dy) * (N + 1 - j)
        res[f"alpha_j{j}"] = r_alpha.sup_norm()
        res[f"beta_j{j}"] = r_beta.sup_norm()
    return res


def inverse_laplacian(source: TorusField, mean: float = 0.0, tol: float = 1e-12) -> TorusField:
    """Solve ``Lap(u) = source`` spectrally with ``u`` having the given mean.

    ``source`` must have zero mean (up to ``tol`` times its scale).
    """
    scale = max(1.0, source.max_amplitude())
    if abs(source.mean) > tol * scale:
        raise AppendixError(f"Poisson source has non-zero mean {source.mean:.3e}")
    arr = source.array.copy()
    B = source.bandwidth
    k = np.arange(-B, B + 1)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    k2[B, B] = 1
    arr = -arr / k2
    arr[B, B] = mean
    return TorusField(arr)


def cascade_by_poisson(
    N: int, f: TorusField, g: TorusField, means: Mapping[int, tuple[float, float]]
) -> dict[int, tuple[TorusField, TorusField]]:
    """Integrate the second-order cascade directly by spectral Poisson solves.

    ``means[j] = (mean alpha_j, mean beta_j)`` supplies the free constant of
    each solve for ``j >= 2``; ``alpha_0 = -1``, ``beta_0 = 0``,
    ``alpha_1 = f``, ``beta_1 = g``.  This route shares nothing with the
    closed form except the input data, so agreement of non-constant parts is
    an independent check of it.
    """
    w = f.dy + g.dx
    out: dict[int, tuple[TorusField, TorusField]] = {0: (zero() - 1.0, zero()), 1: (f, g)}
    for j in range(2, N + 1):
        ap, bp = out[j - 1]
        aw, bw = ap * w, bp * w
        src_a = (aw.dy - bw.dx) * (-(N + 1 - j) / N)
        src_b = (aw.dx + bw.dy) * (-(N + 1 - j) / N)
        ma, mb = means.get(j, (0.0, 0.0))
        out[j] = (inverse_laplacian(src_a, ma), inverse_laplacian(src_b, mb))
    return out
