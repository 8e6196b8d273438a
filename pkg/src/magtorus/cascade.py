"""The PDE system equivalent to ``{F, H} = 0`` for a degree-N momentum polynomial.

Write ``F = sum_{s<=N} sum_{k<=s} a_{s,k} p1^(s-k) p2^k`` and
``{F, H} = sum_{s<=N+1} sum_{k<=s} M_{s,k} p1^(s-k) p2^k``.  Every ``M_{s,k}``
is stored multiplied through by ``2 Lambda^2`` so that it is a polynomial in
``Lambda``, ``Omega``, the ``a_{s,k}`` and their first derivatives, and can be
computed exactly in the spectral representation:

    2 L^2 M_{s,k} = (s-k-1) a_{s-1,k} L_x + (k+1) a_{s-1,k+1} L_y
                  + (s-k+1) a_{s-1,k-2} L_x + (k-1) a_{s-1,k-1} L_y
                  + 2 L (a_{s-1,k})_x + 2 L (a_{s-1,k-1})_y
                  + 2 L Omega ((s-k+1) a_{s,k-1} - (k+1) a_{s,k+1})

with ``a_{m,n} = 0`` unless ``0 <= n <= m <= N``.

The alternating sums ``alpha_j = a_{N-j,0} - a_{N-j,2} + ...`` and
``beta_j = a_{N-j,1} - a_{N-j,3} + ...`` obey a first-order cascade whose
residuals are reported by :func:`cascade_residuals`.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

from .field import DEFAULT_CONSTANCY_EPS, Constancy, TorusField, constancy_test, laplacian, zero
from .momentum import MomentumPolynomial

__all__ = [
    "SystemTerm",
    "system_terms",
    "format_system",
    "CascadeReport",
    "bracket_coefficients",
    "alpha_beta",
    "cascade_residuals",
    "KolokoltsovResult",
    "kolokoltsov_check",
    "ConservedCombination",
    "conserved_combinations",
    "coefficient_name",
    "coefficient_index",
]

ROLES = ("Lx", "Ly", "dx", "dy", "omega")


class SystemTerm(NamedTuple):
    """One summand of ``2 Lambda^2 M_{s,k}``.

    ``role`` says how ``a_{m,n}`` enters:

    ``Lx``/``Ly``  ``coef * a * Lambda_x`` / ``Lambda_y``
    ``dx``/``dy``  ``coef * Lambda * (a)_x`` / ``(a)_y``
    ``omega``      ``coef * Lambda * Omega * a``
    """

    coef: int
    role: str
    m: int
    n: int


def _in_range(m: int, n: int, N: int) -> bool:
    return 0 <= n <= m <= N


def system_terms(N: int) -> dict[tuple[int, int], list[SystemTerm]]:
    """Nonzero symbolic structure of every ``2 Lambda^2 M_{s,k}`` for degree ``N``."""
    if N < 0:
        raise ValueError("degree must be non-negative")
    system: dict[tuple[int, int], list[SystemTerm]] = {}
    for s in range(N + 2):
        for k in range(s + 1):
            raw = [
                (s - k - 1, "Lx", s - 1, k),
                (k + 1, "Ly", s - 1, k + 1),
                (s - k + 1, "Lx", s - 1, k - 2),
                (k - 1, "Ly", s - 1, k - 1),
                (2, "dx", s - 1, k),
                (2, "dy", s - 1, k - 1),
                (2 * (s - k + 1), "omega", s, k - 1),
                (-2 * (k + 1), "omega", s, k + 1),
            ]
            acc: dict[tuple[str, int, int], int] = defaultdict(int)
            for coef, role, m, n in raw:
                if coef and _in_range(m, n, N):
                    acc[(role, m, n)] += coef
            system[(s, k)] = [
                SystemTerm(c, role, m, n)
                for (role, m, n), c in sorted(acc.items(), key=lambda kv: (ROLES.index(kv[0][0]), kv[0][1], kv[0][2]))
                if c
            ]
    return system


_ROLE_FMT = {
    "Lx": "a[{m},{n}]*L_x",
    "Ly": "a[{m},{n}]*L_y",
    "dx": "L*d_x(a[{m},{n}])",
    "dy": "L*d_y(a[{m},{n}])",
    "omega": "L*Omega*a[{m},{n}]",
}


def format_system(N: int) -> str:
    """Human-readable listing of :func:`system_terms`, one line per ``(s, k)``."""
    lines = [f"# 2 L^2 M[s,k] for degree N={N}; a[m,n] multiplies p1^(m-n) p2^n"]
    for (s, k), terms in sorted(system_terms(N).items()):
        body = " ".join(f"{t.coef:+d}*" + _ROLE_FMT[t.role].format(m=t.m, n=t.n) for t in terms)
        lines.append(f"M[{s},{k}] = {body or '0'}")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# letter names used for degree 3 and 4 integrals: a_i top degree, b_i next, ...

_LETTERS = "abcdefghij"


def coefficient_name(N: int, s: int, k: int) -> str:
    """Letter name of ``a_{s,k}`` in a degree-``N`` integral, e.g. ``b2``."""
    return f"{_LETTERS[N - s]}{k}"


def coefficient_index(N: int, name: str) -> tuple[int, int]:
    """Inverse of :func:`coefficient_name`; also accepts ``"s,k"``."""
    name = name.strip()
    if "," in name:
        s, k = (int(v) for v in name.split(","))
    else:
        letter, rest = name[0], name[1:]
        if letter not in _LETTERS or not rest.isdigit():
            raise ValueError(f"unrecognised coefficient name {name!r}")
        s, k = N - _LETTERS.index(letter), int(rest)
    if not _in_range(s, k, N):
        raise ValueError(f"coefficient {name!r} does not exist for degree {N}")
    return s, k


# ----------------------------------------------------------------------


@dataclass
class CascadeReport:
    """Bracket coefficients and cascade data for one ``(F, Lambda, Omega)``.

    ``M[(s, k)]`` holds ``2 Lambda^2 M_{s,k}``; ``U`` and ``V`` are its
    even/odd alternating sums over ``k``.
    """

    F: MomentumPolynomial
    degree: int
    M: dict[tuple[int, int], TorusField]
    U: dict[int, TorusField]
    V: dict[int, TorusField]
    alpha: dict[int, TorusField]
    beta: dict[int, TorusField]
    omega_reconstructed: TorusField
    residual_norms: dict[str, float] = dc_field(default_factory=dict)

    @property
    def f(self) -> TorusField:
        return self.alpha.get(1, zero())

    @property
    def g(self) -> TorusField:
        return self.beta.get(1, zero())

    def max_bracket(self) -> float:
        return max((m.sup_norm() for m in self.M.values()), default=0.0)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "residuals": dict(sorted(self.residual_norms.items())),
            "bracket_sup": {f"{s},{k}": m.sup_norm() for (s, k), m in sorted(self.M.items())},
        }


def alpha_beta(F: MomentumPolynomial, N: int | None = None) -> tuple[dict[int, TorusField], dict[int, TorusField]]:
    """Alternating sums over each homogeneous slice, indexed from the top degree."""
    N = F.degree if N is None else N
    alpha: dict[int, TorusField] = {}
    beta: dict[int, TorusField] = {}
    for j in range(N + 1):
        s = N - j
        a = zero()
        b = zero()
        for i in range(0, s + 1, 2):
            term = F.a(s, i)
            a = a + term if (i // 2) % 2 == 0 else a - term
        for i in range(1, s + 1, 2):
            term = F.a(s, i)
            b = b + term if (i // 2) % 2 == 0 else b - term
        alpha[j], beta[j] = a, b
    return alpha, beta


def _alternating(values: dict[int, TorusField], start: int, stop: int) -> TorusField:
    total = zero()
    for idx, k in enumerate(range(start, stop + 1, 2)):
        total = total + values[k] if idx % 2 == 0 else total - values[k]
    return total


def bracket_coefficients(F: MomentumPolynomial, lam: TorusField, omega: TorusField) -> CascadeReport:
    """All ``2 Lambda^2 M_{s,k}`` together with ``U_s``, ``V_s``, ``alpha_j``, ``beta_j``.

    Every entry vanishes iff ``F`` Poisson-commutes with ``H``.
    """
    N = F.degree
    if N < 0:
        raise ValueError("the zero polynomial has no cascade")
    Lx, Ly = lam.dx, lam.dy
    lam_omega = lam * omega
    cache: dict[tuple[str, int, int], TorusField] = {}

    def piece(role: str, m: int, n: int) -> TorusField:
        key = (role, m, n)
        if key not in cache:
            a = F.a(m, n)
            if role == "Lx":
                val = a * Lx
            elif role == "Ly":
                val = a * Ly
            elif role == "dx":
                val = lam * a.dx
            elif role == "dy":
                val = lam * a.dy
            else:
                val = lam_omega * a
            cache[key] = val
        return cache[key]

    M: dict[tuple[int, int], TorusField] = {}
    for (s, k), terms in system_terms(N).items():
        total = zero()
        for t in terms:
            total = total + piece(t.role, t.m, t.n) * t.coef
        M[(s, k)] = total

    U, V = {}, {}
    for s in range(N + 2):
        row = {k: M[(s, k)] for k in range(s + 1)}
        U[s] = _alternating(row, 0, s)
        V[s] = _alternating(row, 1, s)
    alpha, beta = alpha_beta(F, N)
    f, g = alpha.get(1, zero()), beta.get(1, zero())
    omega_rec = (f.dy + g.dx) / N if N > 0 else zero()
    return CascadeReport(F, N, M, U, V, alpha, beta, omega_rec)


def cascade_residuals(report: CascadeReport, lam: TorusField, omega: TorusField) -> dict[str, float]:
    """Sup-norms of the cascade equations; also stored on ``report``.

    The first-order cascade assumes the normalisation ``alpha_0 = -1``,
    ``beta_0 = 0``.  Names:

    ``cascade_re_j<j>``  N (alpha_j)_x - N (beta_j)_y - (N+1-j) beta_{j-1} (f_y + g_x)
    ``cascade_im_j<j>``  N (alpha_j)_y + N (beta_j)_x + (N+1-j) alpha_{j-1} (f_y + g_x)
    ``fg_compatibility`` f_x - g_y
    ``omega_from_fg``    Omega - (f_y + g_x) / N
    ``lowest_divergence`` (alpha_{N-1} Lambda)_x + (beta_{N-1} Lambda)_y
    ``bracket``          max over (s, k) of |2 Lambda^2 M_{s,k}|
    ``beta_top_index``   |beta_N|, zero for every F
    """
    N = report.degree
    alpha, beta = report.alpha, report.beta
    f, g = report.f, report.g
    w = f.dy + g.dx
    res: dict[str, float] = {}
    for j in range(1, N + 1):
        re = alpha[j].dx * N - beta[j].dy * N - beta[j - 1] * w * (N + 1 - j)
        im = alpha[j].dy * N + beta[j].dx * N + alpha[j - 1] * w * (N + 1 - j)
        res[f"cascade_re_j{j}"] = re.sup_norm()
        res[f"cascade_im_j{j}"] = im.sup_norm()
    res["fg_compatibility"] = (f.dx - g.dy).sup_norm()
    res["omega_from_fg"] = (omega - report.omega_reconstructed).sup_norm()
    if N >= 1:
        res["lowest_divergence"] = ((alpha[N - 1] * lam).dx + (beta[N - 1] * lam).dy).sup_norm()
    res["bracket"] = report.max_bracket()
    # the degree-0 slice has no odd-index coefficient, so beta_N is empty
    res["beta_top_index"] = beta[N].sup_norm()
    if N == 3:
        res.update(_cubic_second_group(report, lam, omega))
    report.residual_norms.update(res)
    return res


def _cubic_second_group(report: CascadeReport, lam: TorusField, omega: TorusField) -> dict[str, float]:
    """The four degree-3 equations linking ``b_2``, ``f``, ``g`` and ``Omega``,
    evaluated independently of ``M`` (they coincide with ``M_{3,k}`` once
    ``a_2 = a_0 + 1`` and ``a_3 = a_1``)."""
    F = report.F
    a0, a1, b2 = F.a(3, 0), F.a(3, 1), F.a(2, 2)
    f, g = report.f, report.g
    Lx, Ly = lam.dx, lam.dy
    e1 = g * Ly + (b2 + f) * Lx * 2 + lam * (b2.dx + f.dx - a1 * omega) * 2
    e2 = g * Lx + b2 * Ly * 2 + lam * (g.dx + f.dy + b2.dy + (a0 - 2.0) * omega) * 2
    e3 = g * Ly + (b2 + f) * Lx * 2 + lam * (b2.dx + g.dy - a1 * omega) * 2
    e4 = g * Lx + b2 * Ly * 2 + lam * (b2.dy + (a0 + 1.0) * omega) * 2
    return {f"second_group_{i}": e.sup_norm() for i, e in enumerate((e1, e2, e3, e4), start=1)}


# ----------------------------------------------------------------------


@dataclass(frozen=True)
class KolokoltsovResult:
    """Constants ``A0 = -alpha_0`` and ``A1 = -beta_0`` of the top-degree slice.

    ``A0``/``A1`` are ``None`` when the corresponding field is not constant.
    ``nonconstant_mass`` is the summed modulus of all nonzero modes of both
    fields; ``laplacian_norm`` the sup-norm of their Laplacians.
    """

    A0: float | None
    A1: float | None
    nonconstant_mass: float
    laplacian_norm: float

    @property
    def ok(self) -> bool:
        return self.A0 is not None and self.A1 is not None


def kolokoltsov_check(F: MomentumPolynomial, eps: float = DEFAULT_CONSTANCY_EPS) -> KolokoltsovResult:
    """Test harmonicity (equivalently, constancy on the torus) of the leading
    alternating sums and return the constants.

    For degree 3 these are ``a2 - a0`` and ``a3 - a1``; for degree 4
    ``a2 - a0 - a4`` and ``a3 - a1``.
    """
    alpha, beta = alpha_beta(F)
    A0f, A1f = -alpha[0], -beta[0]
    c0, c1 = constancy_test(A0f, eps), constancy_test(A1f, eps)
    lap = max(laplacian(A0f).sup_norm(), laplacian(A1f).sup_norm())
    mass = A0f.nonconstant_mass() + A1f.nonconstant_mass()
    return KolokoltsovResult(c0.value, c1.value, mass, lap)


@dataclass(frozen=True)
class ConservedCombination:
    """A combination of integral coefficients that must be constant."""

    name: str
    field: TorusField
    constancy: Constancy

    @property
    def value(self) -> float | None:
        return self.constancy.value


def _combo(name: str, fld: TorusField, eps: float) -> ConservedCombination:
    return ConservedCombination(name, fld, constancy_test(fld, eps))


def conserved_combinations(
    F: MomentumPolynomial, report: CascadeReport | None = None, eps: float = DEFAULT_CONSTANCY_EPS
) -> list[ConservedCombination]:
    """Constant combinations K1, K2, ... of a degree-3 or degree-4 integral,
    plus ``G`` (the value of ``g``).

    Later combinations use the means of earlier ones as their constants.
    """
    N = F.degree
    if N not in (3, 4):
        raise ValueError(f"conserved combinations are defined for degree 3 and 4, not {N}")
    if report is None:
        alpha, beta = alpha_beta(F)
        f, g = alpha[1], beta[1]
    else:
        f, g = report.f, report.g
    out: list[ConservedCombination] = []
    if N == 3:
        c0, c1 = F.a(1, 0), F.a(1, 1)
        K1 = _combo("K1", c0 * 3 + f * f - g * g, eps)
        K2 = _combo("K2", c1 * 3 + f * g * 2, eps)
        k1, k2 = K1.field.mean, K2.field.mean
        K3 = _combo("K3", g * k1 + f * k2 + g * g * g / 3 - g * f * f, eps)
        out = [K1, K2, K3]
    else:
        c0, c1, c2 = F.a(2, 0), F.a(2, 1), F.a(2, 2)
        d0, d1 = F.a(1, 0), F.a(1, 1)
        f2, g2 = f * f, g * g
        K1 = _combo("K1", (c0 - c2) * 4 + (f2 - g2) * 1.5, eps)
        K2 = _combo("K2", c1 * 4 + f * g * 3, eps)
        k1, k2 = K1.field.mean, K2.field.mean
        K3 = _combo("K3", d0 * 16 + f * (2 * k1) - g * (2 * k2) - f2 * f + f * g2 * 3, eps)
        K4 = _combo("K4", d1 * 16 + g * (2 * k1) + f * (2 * k2) + g2 * g - f2 * g * 3, eps)
        k3, k4 = K3.field.mean, K4.field.mean
        fg = f * g
        K5 = _combo("K5", fg * (f2 - g2) - fg * (2 * k1) + (f2 - g2) * k2 + g * k3 + f * k4, eps)
        out = [K1, K2, K3, K4, K5]
    out.append(_combo("G", g, eps))
    return out
