"""Restriction of the conservation condition to a single energy level.

On ``{H = C/2}`` the momenta are ``p = sqrt(C Lambda) (cos phi, sin phi)``.
For ``G(x, y, phi) = F(x, y, p(x, y, phi))`` the time derivative of ``F``
along the flow is ``sqrt(C / Lambda)`` times

    G_x cos phi + G_y sin phi
        + G_phi (Lambda_y cos phi / (2 Lambda) - Lambda_x sin phi / (2 Lambda)
                 - Omega / sqrt(C Lambda)),

which is a trigonometric polynomial in ``phi`` of degree at most ``N + 1``.
At a fixed point ``(x, y)`` each ``phi``-mode is a polynomial of degree at
most ``N + 1`` in ``t = sqrt(C)``, so vanishing on ``N + 2`` distinct levels
forces vanishing on every level.

Half-integer powers of ``Lambda`` are never represented spectrally: all
quantities are sampled pointwise on an ``(x, y, phi)`` collocation grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .field import DegenerateFieldError, TorusField
from .momentum import MomentumPolynomial

__all__ = [
    "LevelModes",
    "LevelConditionSample",
    "SqrtCFit",
    "SplitResult",
    "level_condition",
    "level_condition_modes",
    "sample_levels",
    "sqrtc_polynomialize",
    "required_levels",
    "split_by_energy",
    "mode_tolerance",
]

DEFAULT_N_GRID = 16


def phi_points(N: int) -> int:
    """Size of the ``phi`` grid: ``4 (N + 2)``, about four times the Nyquist count."""
    return 4 * (N + 2)


def mode_tolerance(F: MomentumPolynomial, C: float, scale: float = 1e-10) -> float:
    """Scale-aware vanishing threshold ``scale * (1 + |F|_sup * C**(N/2))``."""
    N = max(F.degree, 0)
    return scale * (1.0 + F.sup_norm() * C ** (N / 2))


@dataclass(frozen=True)
class _PointData:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    lam_x: np.ndarray
    lam_y: np.ndarray
    omega: np.ndarray


def _sample_geometry(lam: TorusField, omega: TorusField, n_grid: int) -> _PointData:
    nodes = 2 * np.pi * np.arange(n_grid) / n_grid
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    L = np.asarray(lam(X, Y), dtype=float)
    if not np.all(np.isfinite(L)) or L.min() <= 0.0:
        raise DegenerateFieldError(f"Lambda must be positive on the grid (min {L.min():.3g})")
    # trailing axis of length 1 broadcasts against the phi grid
    col = lambda a: np.asarray(a, dtype=float)[..., None]  # noqa: E731
    return _PointData(col(X), col(Y), col(L), col(lam.dx(X, Y)), col(lam.dy(X, Y)), col(omega(X, Y)))


def level_condition(
    F: MomentumPolynomial,
    lam: TorusField,
    omega: TorusField,
    C: float,
    n_grid: int = DEFAULT_N_GRID,
    phi_n: int | None = None,
) -> np.ndarray:
    """Values of the level-restricted condition on an ``(x, y, phi)`` grid.

    Returns an array of shape ``(n_grid, n_grid, phi_n)``; axis 0 is ``x``,
    axis 1 is ``y``, axis 2 is ``phi = 2 pi l / phi_n``.
    """
    if not C > 0:
        raise ValueError("energy constant C must be positive")
    N = F.degree
    phi_n = phi_points(max(N, 0)) if phi_n is None else int(phi_n)
    geo = _sample_geometry(lam, omega, n_grid)
    phi = 2 * np.pi * np.arange(phi_n) / phi_n
    cos, sin = np.cos(phi), np.sin(phi)
    rho = np.sqrt(C * geo.lam)
    P1, P2 = rho * cos, rho * sin

    Fp1, Fp2 = F.dp(1), F.dp(2)
    dF1 = Fp1(geo.x, geo.y, P1, P2)
    dF2 = Fp2(geo.x, geo.y, P1, P2)
    # p depends on (x, y) through Lambda: dp/dx = p * Lambda_x / (2 Lambda)
    euler = P1 * dF1 + P2 * dF2
    G_x = F.dq("x")(geo.x, geo.y, P1, P2) + euler * geo.lam_x / (2 * geo.lam)
    G_y = F.dq("y")(geo.x, geo.y, P1, P2) + euler * geo.lam_y / (2 * geo.lam)
    G_phi = -P2 * dF1 + P1 * dF2
    turn = (geo.lam_y * cos - geo.lam_x * sin) / (2 * geo.lam) - geo.omega / rho
    return G_x * cos + G_y * sin + G_phi * turn


@dataclass(frozen=True)
class LevelModes:
    """``phi``-spectrum of the condition at one energy level.

    ``amplitudes[i]`` is the ``(n_grid, n_grid)`` array of complex
    amplitudes of ``exp(i k phi)`` for ``k = modes[i]``.
    """

    C: float
    modes: tuple[int, ...]
    amplitudes: np.ndarray
    tol: float

    def max_amplitude(self, k: int | None = None) -> float:
        if k is None:
            return float(np.max(np.abs(self.amplitudes))) if self.amplitudes.size else 0.0
        return float(np.max(np.abs(self.amplitudes[self.modes.index(k)])))

    @property
    def conserved(self) -> bool:
        return self.max_amplitude() <= self.tol

    def worst_mode(self) -> int:
        per_mode = np.max(np.abs(self.amplitudes.reshape(len(self.modes), -1)), axis=1)
        return self.modes[int(np.argmax(per_mode))]


def level_condition_modes(
    F: MomentumPolynomial,
    lam: TorusField,
    omega: TorusField,
    C: float,
    n_grid: int = DEFAULT_N_GRID,
    tol: float | None = None,
) -> LevelModes:
    """Discrete ``phi``-Fourier coefficients, modes ``-(N+1) .. N+1``, at every ``(x, y)`` node."""
    N = max(F.degree, 0)
    phi_n = phi_points(N)
    values = level_condition(F, lam, omega, C, n_grid, phi_n)
    spec = np.fft.fft(values, axis=-1) / phi_n
    modes = tuple(range(-(N + 1), N + 2))
    amps = np.stack([spec[..., k % phi_n] for k in modes])
    return LevelModes(float(C), modes, amps, mode_tolerance(F, C) if tol is None else float(tol))


@dataclass(frozen=True)
class LevelConditionSample:
    """Mode amplitudes over several levels: ``amplitudes[l, i]`` belongs to
    level ``levels[l]`` and mode ``modes[i]``."""

    degree: int
    levels: tuple[float, ...]
    modes: tuple[int, ...]
    amplitudes: np.ndarray

    @property
    def sqrt_levels(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.levels))


def _check_levels(levels: Sequence[float]) -> tuple[float, ...]:
    lv = tuple(float(c) for c in levels)
    if any(not c > 0 for c in lv):
        raise ValueError("energy levels must be positive")
    if len(set(lv)) != len(lv):
        raise ValueError(f"duplicate energy levels in {lv}")
    return lv


def sample_levels(
    F: MomentumPolynomial,
    lam: TorusField,
    omega: TorusField,
    levels: Sequence[float],
    n_grid: int = DEFAULT_N_GRID,
) -> LevelConditionSample:
    lv = _check_levels(levels)
    per_level = [level_condition_modes(F, lam, omega, C, n_grid) for C in lv]
    modes = per_level[0].modes if per_level else ()
    amps = np.stack([m.amplitudes for m in per_level]) if per_level else np.zeros((0,))
    return LevelConditionSample(max(F.degree, 0), lv, modes, amps)


@dataclass(frozen=True)
class SqrtCFit:
    """Least-squares fit of every mode amplitude by a polynomial in ``t = sqrt(C)``.

    ``coefficients[d, i]`` is the ``(n_grid, n_grid)`` array of ``t**d``
    coefficients for mode ``modes[i]``.
    """

    degree: int
    modes: tuple[int, ...]
    coefficients: np.ndarray
    residual: float

    def max_coefficient(self, k: int | None = None) -> float:
        c = self.coefficients if k is None else self.coefficients[:, self.modes.index(k)]
        return float(np.max(np.abs(c))) if c.size else 0.0

    def mode_degree(self, k: int, tol: float) -> int:
        """Highest power of ``t`` whose coefficient exceeds ``tol`` (``-1`` if none)."""
        c = self.coefficients[:, self.modes.index(k)]
        big = [d for d in range(c.shape[0]) if np.max(np.abs(c[d])) > tol]
        return max(big, default=-1)


def sqrtc_polynomialize(sample: LevelConditionSample, degree: int | None = None, min_levels: int | None = None) -> SqrtCFit:
    """Fit each mode amplitude by a polynomial of degree ``N + 1`` in ``sqrt(C)``.

    At least ``N + 3`` levels are required so that the fit is overdetermined
    and the degree bound can actually fail; the largest absolute fit
    residual is reported.
    """
    N = sample.degree
    degree = N + 1 if degree is None else int(degree)
    need = degree + 2 if min_levels is None else int(min_levels)
    _check_levels(sample.levels)
    m = len(sample.levels)
    if m < need:
        raise ValueError(f"need at least {need} levels to test a degree-{degree} fit, got {m}")
    t = sample.sqrt_levels
    V = np.vander(t, degree + 1, increasing=True)
    rhs = sample.amplitudes.reshape(m, -1)
    coef, *_ = np.linalg.lstsq(V.astype(complex), rhs, rcond=None)
    resid = rhs - V @ coef
    shape = (degree + 1,) + sample.amplitudes.shape[1:]
    return SqrtCFit(degree, sample.modes, coef.reshape(shape), float(np.max(np.abs(resid))) if resid.size else 0.0)


def required_levels(N: int, sharp: bool = False) -> int:
    """Number of levels that certify conservation on all levels.

    The default is the general bound ``N + 2``.  ``sharp=True`` gives the
    smaller counts ``(N + 1) / 2`` (odd ``N``) or ``(N + 2) / 2`` (even ``N``),
    i.e. 2 for ``N = 3`` and 3 for ``N = 4``; these are exercised as an
    experiment and always backed by probe levels.
    """
    if N < 0:
        raise ValueError("degree must be non-negative")
    if not sharp:
        return N + 2
    return (N + 1) // 2 if N % 2 else (N + 2) // 2


@dataclass
class SplitResult:
    """Outcome of :func:`split_by_energy`.

    ``status`` is ``"all_levels_conserved"`` or ``"violated"``.  ``violations``
    lists ``(level, mode, amplitude)`` for every level (given or probe) where
    some mode exceeds its tolerance.
    """

    status: str
    degree: int
    levels: tuple[float, ...]
    probes: tuple[float, ...]
    level_max: dict[float, float]
    probe_max: dict[float, float]
    violations: list[tuple[float, int, float]] = dc_field(default_factory=list)
    fit_max_coefficient: float | None = None
    sharp: bool = False
    rows: list[dict] = dc_field(default_factory=list)

    @property
    def conserved(self) -> bool:
        return self.status == "all_levels_conserved"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "degree": self.degree,
            "sharp": self.sharp,
            "levels": list(self.levels),
            "probes": list(self.probes),
            "fit_max_coefficient": self.fit_max_coefficient,
            "violations": [{"level": c, "mode": k, "amplitude": a} for c, k, a in self.violations],
            "rows": self.rows,
        }


def _rows(lm: LevelModes, fit_degree: int | None, fit_residual: float | None) -> list[dict]:
    return [
        {
            "level": lm.C,
            "mode": k,
            "max_amplitude": lm.max_amplitude(k),
            "fit_degree": fit_degree,
            "fit_residual": fit_residual,
        }
        for k in lm.modes
    ]


def split_by_energy(
    F: MomentumPolynomial,
    lam: TorusField,
    omega: TorusField,
    levels: Sequence[float],
    probes: Iterable[float] = (),
    sharp: bool = False,
    tol: float | None = None,
    n_grid: int = DEFAULT_N_GRID,
) -> SplitResult:
    """Decide conservation on all levels from conservation on finitely many.

    With the general count (``N + 2`` levels) the ``phi``-mode amplitudes
    are interpolated in ``sqrt(C)`` and the interpolant coefficients must all
    vanish; this is the "finitely many levels => all levels" direction.
    Each probe level is then checked directly, which tests the converse
    numerically.  ``tol`` overrides the per-level scale-aware threshold.
    """
    N = F.degree
    lv = _check_levels(levels)
    need = required_levels(N, sharp)
    if len(lv) < need:
        raise ValueError(f"degree {N} needs at least {need} levels{' (sharp)' if sharp else ''}, got {len(lv)}")
    pr = tuple(float(c) for c in probes)
    if any(not c > 0 for c in pr):
        raise ValueError("probe levels must be positive")

    def thr(C: float) -> float:
        return mode_tolerance(F, C) if tol is None else float(tol)

    given = [level_condition_modes(F, lam, omega, C, n_grid, thr(C)) for C in lv]
    violations: list[tuple[float, int, float]] = []
    for lm in given:
        if not lm.conserved:
            violations.append((lm.C, lm.worst_mode(), lm.max_amplitude()))

    fit_max = None
    fit_degree = fit_residual = None
    if len(lv) >= N + 2:
        sample = LevelConditionSample(N, lv, given[0].modes, np.stack([g.amplitudes for g in given]))
        fit = sqrtc_polynomialize(sample, degree=N + 1, min_levels=N + 2)
        fit_max = fit.max_coefficient()
        fit_degree, fit_residual = fit.degree, fit.residual
        if fit_max > thr(max(lv)) and not violations:
            violations.append((math.nan, -1, fit_max))

    checked = [level_condition_modes(F, lam, omega, C, n_grid, thr(C)) for C in pr]
    for lm in checked:
        if not lm.conserved:
            violations.append((lm.C, lm.worst_mode(), lm.max_amplitude()))

    rows = [r for lm in given + checked for r in _rows(lm, fit_degree, fit_residual)]
    return SplitResult(
        status="violated" if violations else "all_levels_conserved",
        degree=N,
        levels=lv,
        probes=pr,
        level_max={lm.C: lm.max_amplitude() for lm in given},
        probe_max={lm.C: lm.max_amplitude() for lm in checked},
        violations=violations,
        fit_max_coefficient=fit_max,
        sharp=sharp,
        rows=rows,
    )
