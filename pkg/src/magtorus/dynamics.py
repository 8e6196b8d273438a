"""Magnetic geodesic flow at fixed energy, drift diagnostics, and the
characteristics blow-up detector for quasilinear transport equations.

On the level ``{H = C/2}`` the state is ``(x, y, phi)`` with
``p = sqrt(C Lambda) (cos phi, sin phi)`` and

    x'   = sqrt(C / Lambda) cos phi
    y'   = sqrt(C / Lambda) sin phi
    phi' = sqrt(C) (Lambda_y cos phi - Lambda_x sin phi) / (2 Lambda^(3/2)) - Omega / Lambda.

Energy is built into the coordinates, so drift of any other integral is the
real signal.  ``Lambda``, its gradient and ``Omega`` are evaluated by direct
Fourier summation at trajectory points, never by grid interpolation.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .field import DegenerateFieldError, TorusField
from .momentum import MomentumPolynomial

__all__ = [
    "PointSampler",
    "Trajectory",
    "StepSizeUnderflow",
    "integrate_flow",
    "drift_report",
    "momenta",
    "CharField",
    "hopf_charfield",
    "cubic_charfield",
    "BlowupResult",
    "characteristics_blowup",
    "trajectory_csv",
    "HalvingStudy",
    "halving_study",
    "time_reversal_error",
    "constant_field_period_error",
]

TWO_PI = 2.0 * math.pi
DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12


class StepSizeUnderflow(RuntimeError):
    """The adaptive integrator could not meet its tolerance; ``state`` is the
    last accepted ``(t, x, y, phi)``."""

    def __init__(self, message: str, state: tuple[float, float, float, float]):
        super().__init__(f"{message} at t={state[0]:.6g}, (x, y, phi)=({state[1]:.6g}, {state[2]:.6g}, {state[3]:.6g})")
        self.state = state


class PointSampler:
    """Evaluate several fields at one point with a single set of exponentials."""

    def __init__(self, fields: Sequence[TorusField]):
        B = max((f.bandwidth for f in fields), default=0)
        self._B = B
        self._k = np.arange(-B, B + 1, dtype=float)
        stack = np.zeros((len(fields), 2 * B + 1, 2 * B + 1), dtype=complex)
        for i, f in enumerate(fields):
            b = f.bandwidth
            stack[i, B - b : B + b + 1, B - b : B + b + 1] = f.array
        self._stack = stack

    def __call__(self, x: float, y: float) -> np.ndarray:
        ex = np.exp(1j * x * self._k)
        ey = np.exp(1j * y * self._k)
        return (ex @ self._stack @ ey).real


@dataclass
class Trajectory:
    """Samples of ``(x, y, phi)`` at fixed energy ``C``.

    ``states`` has shape ``(len(times), 3)``; ``x`` and ``y`` are stored mod
    ``2 pi``; ``phi`` is left unwrapped so that winding is visible.
    """

    times: np.ndarray
    states: np.ndarray
    C: float
    lam: TorusField
    omega: TorusField
    rtol: float
    atol: float
    nfev: int = 0
    diagnostics: dict[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def energy_error(self) -> float:
        """``max |H - C/2|`` with ``H`` recomputed from the reconstructed momenta."""
        x, y, phi = self.states.T
        lam = np.asarray(self.lam(x, y))
        p1, p2 = momenta(self.lam, self.C, x, y, phi)
        H = (p1**2 + p2**2) / (2 * lam)
        return float(np.max(np.abs(H - self.C / 2)))


def momenta(lam: TorusField, C: float, x, y, phi) -> tuple[np.ndarray, np.ndarray]:
    rho = np.sqrt(C * np.asarray(lam(x, y)))
    return rho * np.cos(phi), rho * np.sin(phi)


def integrate_flow(
    lam: TorusField,
    omega: TorusField,
    C: float,
    start: tuple[float, float, float],
    T: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    method: str = "DOP853",
    max_step: float = math.inf,
    n_out: int | None = None,
) -> Trajectory:
    """Integrate the fixed-energy flow from ``start = (x0, y0, phi0)`` to time ``T``.

    Uses an embedded explicit Runge-Kutta pair (``DOP853`` by default) with
    local error control ``rtol``/``atol``.  Every accepted step is recorded
    unless ``n_out`` asks for that many equally spaced samples instead.

    Raises
    ------
    DegenerateFieldError
        if ``Lambda`` is not positive at the start.
    StepSizeUnderflow
        if the step size collapses; the exception carries the last state.
    """
    if not C > 0:
        raise ValueError("energy constant C must be positive")
    if not T > 0:
        raise ValueError("integration time must be positive")
    sample = PointSampler([lam, lam.dx, lam.dy, omega])
    sqrtC = math.sqrt(C)
    if sample(start[0], start[1])[0] <= 0:
        raise DegenerateFieldError("Lambda must be positive")

    def rhs(_t, s):
        x, y, phi = s
        L, Lx, Ly, Om = sample(x, y)
        c, sn = math.cos(phi), math.sin(phi)
        rootL = math.sqrt(L)
        v = sqrtC / rootL
        return [
            v * c,
            v * sn,
            sqrtC * (Ly * c - Lx * sn) / (2 * L * rootL) - Om / L,
        ]

    t_eval = None if n_out is None else np.linspace(0.0, T, n_out)
    sol = solve_ivp(rhs, (0.0, T), list(start), method=method, rtol=rtol, atol=atol, max_step=max_step, t_eval=t_eval)
    if sol.status != 0:
        last = (float(sol.t[-1]), *(float(v) for v in sol.y[:, -1]))
        raise StepSizeUnderflow(sol.message, last)
    states = sol.y.T.copy()
    states[:, 0] %= TWO_PI
    states[:, 1] %= TWO_PI
    return Trajectory(sol.t, states, float(C), lam, omega, rtol, atol, int(sol.nfev))


def drift_report(traj: Trajectory, integrals: dict[str, MomentumPolynomial] | Sequence[MomentumPolynomial]) -> dict[str, float]:
    """``max_t |F(t) - F(0)|`` for each integral along ``traj``."""
    if not isinstance(integrals, dict):
        integrals = {f"F{i}": F for i, F in enumerate(integrals)}
    x, y, phi = traj.states.T
    p1, p2 = momenta(traj.lam, traj.C, x, y, phi)
    out = {}
    for name, F in integrals.items():
        vals = np.asarray(F(x, y, p1, p2))
        out[name] = float(np.max(np.abs(vals - vals[0])))
    return out


def trajectory_csv(traj: Trajectory, integrals: dict[str, MomentumPolynomial] | None = None) -> str:
    """CSV with columns ``t, x, y, phi`` followed by one column per integral."""
    integrals = integrals or {}
    x, y, phi = traj.states.T
    p1, p2 = momenta(traj.lam, traj.C, x, y, phi)
    cols = {name: np.asarray(F(x, y, p1, p2)) for name, F in integrals.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y", "phi", *cols])
    for i, t in enumerate(traj.times):
        w.writerow([f"{v:.12e}" for v in (t, x[i], y[i], phi[i], *(c[i] for c in cols.values()))])
    return buf.getvalue()


# ----------------------------------------------------------------------
# characteristics of beta(g) g_y - alpha(g) g_x = 0


@dataclass(frozen=True)
class CharField:
    """Velocities ``(-alpha(g), beta(g))`` of the straight characteristics and
    initial data ``g0(s)`` on the transversal ``{(s, 0) : 0 <= s < period}``."""

    alpha: Callable[[np.ndarray], np.ndarray]
    beta: Callable[[np.ndarray], np.ndarray]
    g0: Callable[[np.ndarray], np.ndarray]
    period: float = TWO_PI
    name: str = "custom"


def hopf_charfield(g0: Callable[[np.ndarray], np.ndarray] = np.sin) -> CharField:
    """``g_y + g g_x = 0``: ``beta = 1``, ``alpha(g) = -g``."""
    return CharField(lambda g: -np.asarray(g, dtype=float), lambda g: np.ones_like(np.asarray(g, dtype=float)), g0, name="hopf")


def cubic_charfield(
    K1: float, K2: float, K3: float, branch: int, g0: Callable[[np.ndarray], np.ndarray]
) -> CharField:
    """Characteristic field of the degree-3 transport equation.

    ``Q = sqrt(3 K2^2 + 4 g (g^3 + 3 g K1 - 3 K3))``,
    ``alpha = 3 K2 (s sqrt3 K2 - Q) - s 2 sqrt3 g (2 g^3 + 3 K3)``,
    ``beta = 6 g^2 Q`` with ``s = branch = +1`` or ``-1``.

    ``branch`` is the sign of the square root in ``f(g)``; ``alpha`` carries
    the opposite sign in front of ``sqrt3`` because it comes from ``f'(g)``
    on that branch.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    s = -branch
    r3 = math.sqrt(3.0)

    def Q(g):
        g = np.asarray(g, dtype=float)
        disc = 3 * K2**2 + 4 * g * (g**3 + 3 * g * K1 - 3 * K3)
        if np.any(disc < 0):
            raise ValueError("Q is not real on the range of the data")
        return np.sqrt(disc)

    def alpha(g):
        g = np.asarray(g, dtype=float)
        return 3 * K2 * (s * r3 * K2 - Q(g)) - s * 2 * r3 * g * (2 * g**3 + 3 * K3)

    def beta(g):
        g = np.asarray(g, dtype=float)
        return 6 * g**2 * Q(g)

    return CharField(alpha, beta, g0, name=f"cubic(K1={K1},K2={K2},K3={K3},branch={branch:+d})")


@dataclass(frozen=True)
class BlowupResult:
    """``status`` is ``constant_only``, ``blowup`` or ``no_crossing``."""

    status: str
    t_star: float | None = None
    pair: tuple[int, int] | None = None
    g_values: tuple[float, float] | None = None
    s_values: tuple[float, float] | None = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "T*": self.t_star,
            "pair_indices": list(self.pair) if self.pair else None,
            "g_values": list(self.g_values) if self.g_values else None,
        }


def _crossing_times(s_i, s_j, vi, vj):
    """Parameters ``(tau_i, tau_j)`` where ``(s_i, 0) + tau_i v_i`` meets ``(s_j, 0) + tau_j v_j``.

    Returns ``nan`` for (nearly) parallel lines.
    """
    det = -vi[0] * vj[1] + vj[0] * vi[1]
    dx = s_j - s_i
    with np.errstate(divide="ignore", invalid="ignore"):
        tau_i = -dx * vj[1] / det
        tau_j = -dx * vi[1] / det
    bad = np.abs(det) <= 1e-300
    tau_i = np.where(bad, np.nan, tau_i)
    tau_j = np.where(bad, np.nan, tau_j)
    return tau_i, tau_j


def _pair_time(s_i, s_j, g_i, g_j, cf: CharField):
    vi = (-np.asarray(cf.alpha(g_i)), np.asarray(cf.beta(g_i)))
    vj = (-np.asarray(cf.alpha(g_j)), np.asarray(cf.beta(g_j)))
    ti, tj = _crossing_times(s_i, s_j, vi, vj)
    t = np.maximum(ti, tj)
    return np.where((ti > 0) & (tj > 0), t, np.inf)


def characteristics_blowup(
    cf: CharField, n_samples: int = 2048, const_tol: float = 1e-12, refine: bool = True
) -> BlowupResult:
    """First crossing of straight characteristics launched from the transversal.

    Characteristics from adjacent samples (including the periodic wrap-around
    pair) are intersected; the crossing "time" of a pair is the larger of the
    two line parameters, counted only if both are positive.  The minimum over
    pairs is refined by a bounded scalar minimisation over the launch point
    with a pair separation of ``1e-6`` of a sample spacing.
    """
    s = cf.period * np.arange(n_samples) / n_samples
    g = np.asarray(cf.g0(s), dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("initial data is not finite")
    if np.max(np.abs(g - g[0])) <= const_tol * (1 + abs(g[0])):
        return BlowupResult("constant_only")
    a, b = np.asarray(cf.alpha(g), dtype=float), np.asarray(cf.beta(g), dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("alpha or beta is not evaluable on the data range")
    s_next = np.append(s[1:], s[0] + cf.period)
    g_next = np.roll(g, -1)
    times = _pair_time(s, s_next, g, g_next, cf)
    i = int(np.argmin(times))
    if not np.isfinite(times[i]):
        return BlowupResult("no_crossing")
    j = (i + 1) % n_samples
    t_star = float(times[i])
    s_pair = (float(s[i]), float(s_next[i]))
    g_pair = (float(g[i]), float(g_next[i]))
    if refine:
        h = cf.period / n_samples
        eps = 1e-6 * h

        def local(sv):
            gi, gj = cf.g0(np.array([sv])), cf.g0(np.array([sv + eps]))
            return float(_pair_time(np.array([sv]), np.array([sv + eps]), gi, gj, cf)[0])

        res = minimize_scalar(local, bounds=(s[i] - h, s[i] + 2 * h), method="bounded", options={"xatol": 1e-10 * cf.period})
        if np.isfinite(res.fun) and res.fun < t_star:
            t_star = float(res.fun)
            s_pair = (float(res.x), float(res.x + eps))
            g_pair = (float(cf.g0(np.array([res.x]))[0]), float(cf.g0(np.array([res.x + eps]))[0]))
    return BlowupResult("blowup", t_star, (i, j), g_pair, s_pair)


# ----------------------------------------------------------------------
# diagnostics built on integrate_flow


def _wrapped(d):
    return (np.asarray(d) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class HalvingStudy:
    """Drift of one integral for a ladder of tolerances ``tol0 / 2**i``.

    ``ratios[i] = drifts[i] / drifts[i + 1]``; ``mean_ratio`` is their
    geometric mean, the observed reduction per halving.
    """

    tolerances: tuple[float, ...]
    drifts: tuple[float, ...]
    ratios: tuple[float, ...]
    mean_ratio: float


def halving_study(
    lam: TorusField,
    omega: TorusField,
    C: float,
    start: tuple[float, float, float],
    T: float,
    integral: MomentumPolynomial,
    tol0: float = 1e-8,
    halvings: int = 4,
    method: str = "DOP853",
) -> HalvingStudy:
    tols, drifts = [], []
    for i in range(halvings + 1):
        tol = tol0 / 2**i
        traj = integrate_flow(lam, omega, C, start, T, rtol=tol, atol=tol, method=method)
        tols.append(tol)
        drifts.append(drift_report(traj, {"F": integral})["F"])
    ratios = tuple(drifts[i] / drifts[i + 1] if drifts[i + 1] > 0 else math.inf for i in range(halvings))
    finite = [r for r in ratios if math.isfinite(r) and r > 0]
    mean = float(np.exp(np.mean(np.log(finite)))) if finite else math.nan
    return HalvingStudy(tuple(tols), tuple(drifts), ratios, mean)


def time_reversal_error(
    lam: TorusField,
    omega: TorusField,
    C: float,
    start: tuple[float, float, float],
    T: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> float:
    """Integrate to ``T``, reverse the velocity and integrate back.

    Reversing the velocity is ``phi -> phi + pi``; the magnetic term is odd
    under time reversal, so the return leg runs with ``-Omega``.  Returns the
    largest wrapped distance of ``(x, y, phi)`` from the start.
    """
    fwd = integrate_flow(lam, omega, C, start, T, rtol=rtol, atol=atol)
    x, y, phi = fwd.final
    back = integrate_flow(lam, -omega, C, (x, y, phi + math.pi), T, rtol=rtol, atol=atol)
    xe, ye, pe = back.final
    d = _wrapped([xe - start[0], ye - start[1], pe - math.pi - start[2]])
    return float(np.max(np.abs(d)))


def constant_field_period_error(
    omega0: float = 0.5, C: float = 1.0, start: tuple[float, float, float] = (0.1, 0.2, 0.3),
    rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
) -> float:
    """Flat metric, constant field: the orbit is a circle of period ``2 pi / omega0``.

    Returns the wrapped distance between start and end state after one period.
    """
    from .field import constant

    traj = integrate_flow(constant(1.0), constant(omega0), C, start, TWO_PI / abs(omega0), rtol=rtol, atol=atol)
    x, y, phi = traj.final
    return float(np.max(np.abs(_wrapped([x - start[0], y - start[1], phi - start[2]]))))
