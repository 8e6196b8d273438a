"""Band-limited real fields on the torus T^2 = R^2 / (2 pi Z)^2.

A :class:`TorusField` stores the Fourier amplitudes ``c[k1, k2]`` of

    u(x, y) = sum_{|k1|, |k2| <= B} c[k1, k2] exp(i (k1 x + k2 y))

in a dense centred array of shape ``(2B + 1, 2B + 1)``.  Sums, products and
derivatives are carried out exactly on the amplitudes (products grow the
bandwidth), while reciprocals and square roots go through a collocation grid
with an explicit residual tolerance.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
import numbers
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import signal

__all__ = [
    "TorusField",
    "GridField",
    "Constancy",
    "FieldError",
    "BandwidthError",
    "AliasingError",
    "DegenerateFieldError",
    "make_field",
    "constant",
    "zero",
    "derivative",
    "laplacian",
    "multiply",
    "reciprocal",
    "sqrt",
    "to_grid",
    "from_grid",
    "constancy_test",
    "field_from_literal",
    "field_to_literal",
    "bandwidth_cap",
    "get_bandwidth_cap",
    "DEFAULT_RECIPROCAL_TOL",
    "DEFAULT_CONSTANCY_EPS",
    "random_field",
]

PRUNE_RTOL = 1e-14
DEFAULT_CONSTANCY_EPS = 1e-10
DEFAULT_RECIPROCAL_TOL = 1e-12
DEFAULT_BANDWIDTH_CAP = 256
# relative tolerance used to decide that two user-supplied amplitudes disagree
_CONJUGATE_RTOL = 1e-12

_BANDWIDTH_CAP: contextvars.ContextVar[int] = contextvars.ContextVar(
    "magtorus_bandwidth_cap", default=DEFAULT_BANDWIDTH_CAP
)


class FieldError(ValueError):
    """Base class for invalid field operations."""


class BandwidthError(FieldError):
    """Raised when a result would exceed the active bandwidth cap."""


class AliasingError(FieldError):
    """Raised when a grid is too coarse for an exact spectral round trip."""


class DegenerateFieldError(FieldError):
    """Raised when a field vanishes where an inverse or root is required."""


def get_bandwidth_cap() -> int:
    return _BANDWIDTH_CAP.get()


@contextlib.contextmanager
def bandwidth_cap(cap: int) -> Iterator[int]:
    """Temporarily change the hard cap on product bandwidths.

    >>> with bandwidth_cap(8):
    ...     pass
    """
    if cap < 0:
        raise ValueError("bandwidth cap must be non-negative")
    token = _BANDWIDTH_CAP.set(int(cap))
    try:
        yield cap
    finally:
        _BANDWIDTH_CAP.reset(token)


def _wavenumbers(bandwidth: int) -> np.ndarray:
    return np.arange(-bandwidth, bandwidth + 1)


def _symmetrize(arr: np.ndarray) -> np.ndarray:
    return 0.5 * (arr + np.conj(arr[::-1, ::-1]))


def _trim(arr: np.ndarray) -> np.ndarray:
    """Drop outer rings of zeros so the stored bandwidth is the actual one."""
    B = arr.shape[0] // 2
    nz = np.nonzero(arr)
    if nz[0].size == 0:
        return np.zeros((1, 1), dtype=complex)
    b = int(max(np.abs(nz[0] - B).max(), np.abs(nz[1] - B).max()))
    return arr[B - b : B + b + 1, B - b : B + b + 1]


class TorusField:
    """Real-valued band-limited function on the 2-torus.

    Instances are immutable.  Build them with :func:`make_field`,
    :func:`constant`, :meth:`from_function` or by arithmetic on existing
    fields; the constructor itself is internal.

    Parameters
    ----------
    array : ndarray
        Centred complex amplitude array of odd, square shape.
    scale : float, optional
        Magnitude used for pruning; amplitudes below ``1e-14 * scale`` are
        dropped.  Defaults to the largest amplitude present.
    """

    __slots__ = ("_c",)

    def __init__(self, array: np.ndarray, scale: float | None = None):
        arr = np.array(array, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 == 0:
            raise FieldError(f"amplitude array must be square with odd size, got {arr.shape}")
        arr = _symmetrize(arr)
        if scale is None:
            scale = float(np.abs(arr).max()) if arr.size else 0.0
        if scale > 0:
            arr[np.abs(arr) <= PRUNE_RTOL * scale] = 0.0
        arr = _trim(arr)
        arr.setflags(write=False)
        self._c = arr

    # ------------------------------------------------------------------
    # construction helpers
    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray, np.ndarray], np.ndarray], bandwidth: int
    ) -> "TorusField":
        """Interpolate ``func(x, y)`` by a field of the given bandwidth.

        Exact when ``func`` is itself band-limited to ``bandwidth``.
        """
        n = 2 * bandwidth + 1
        grid = np.arange(n) * (2 * np.pi / n)
        X, Y = np.meshgrid(grid, grid, indexing="ij")
        return from_grid(GridField(np.asarray(func(X, Y), dtype=float)), bandwidth)

    # ------------------------------------------------------------------
    # basic properties
    @property
    def array(self) -> np.ndarray:
        """Read-only centred amplitude array, index ``[k1 + B, k2 + B]``."""
        return self._c

    @property
    def bandwidth(self) -> int:
        return self._c.shape[0] // 2

    @property
    def is_zero(self) -> bool:
        return not self._c.any()

    @property
    def coeffs(self) -> dict[tuple[int, int], complex]:
        """Nonzero amplitudes keyed by wave vector; empty for the zero field."""
        B = self.bandwidth
        i, j = np.nonzero(self._c)
        return {(int(a - B), int(b - B)): complex(self._c[a, b]) for a, b in zip(i, j)}

    def coeff(self, k1: int, k2: int) -> complex:
        B = self.bandwidth
        if abs(k1) > B or abs(k2) > B:
            return 0j
        return complex(self._c[k1 + B, k2 + B])

    @property
    def mean(self) -> float:
        return self.coeff(0, 0).real

    def max_amplitude(self) -> float:
        return float(np.abs(self._c).max())

    def l1_norm(self) -> float:
        return float(np.abs(self._c).sum())

    def nonconstant_mass(self) -> float:
        """Sum of moduli of all nonzero-wave-vector amplitudes.

        Bounds the sup-norm of ``self - self.mean`` from above.
        """
        return self.l1_norm() - abs(self.coeff(0, 0))

    def sup_norm(self, oversample: int = 2) -> float:
        """Maximum modulus on a uniform grid that resolves every stored mode."""
        if self.is_zero:
            return 0.0
        n = max(16, oversample * (2 * self.bandwidth + 1))
        return float(np.abs(to_grid(self, n).values).max())

    def depends_on(self, axis: str) -> bool:
        """Whether any stored mode has a nonzero wavenumber along ``axis``."""
        ax = _axis_index(axis)
        B = self.bandwidth
        k = _wavenumbers(B)
        mask = (k != 0)[:, None] if ax == 0 else (k != 0)[None, :]
        return bool(np.any(self._c * mask))

    # ------------------------------------------------------------------
    # evaluation
    def __call__(self, x, y):
        """Evaluate by direct Fourier summation; ``x`` and ``y`` broadcast."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        k = _wavenumbers(self.bandwidth)
        ex = np.exp(1j * x[..., None] * k)
        ey = np.exp(1j * y[..., None] * k)
        val = np.einsum("...a,ab,...b->...", ex, self._c, ey, optimize=True).real
        return val if val.ndim else float(val)

    # ------------------------------------------------------------------
    # arithmetic
    def _binary_add(self, other: "TorusField", sign: float) -> "TorusField":
        B = max(self.bandwidth, other.bandwidth)
        out = np.zeros((2 * B + 1, 2 * B + 1), dtype=complex)
        a, b = self._c, other._c
        ba, bb = self.bandwidth, other.bandwidth
        out[B - ba : B + ba + 1, B - ba : B + ba + 1] += a
        out[B - bb : B + bb + 1, B - bb : B + bb + 1] += sign * b
        scale = max(self.max_amplitude(), other.max_amplitude())
        return TorusField(out, scale=scale)

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._binary_add(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._binary_add(other, -1.0)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other._binary_add(self, -1.0)

    def __neg__(self) -> "TorusField":
        return TorusField(-self._c)

    def __pos__(self) -> "TorusField":
        return self

    def __mul__(self, other):
        if isinstance(other, TorusField):
            return multiply(self, other)
        if isinstance(other, numbers.Real):
            return TorusField(self._c * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return TorusField(self._c / float(other))
        return NotImplemented

    def __pow__(self, n: int) -> "TorusField":
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise FieldError("only non-negative integer powers are supported")
        result = constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # calculus shortcuts
    @property
    def dx(self) -> "TorusField":
        return derivative(self, "x")

    @property
    def dy(self) -> "TorusField":
        return derivative(self, "y")

    def __repr__(self) -> str:
        modes = self.coeffs
        if len(modes) > 6:
            return f"TorusField(bandwidth={self.bandwidth}, modes={len(modes)})"
        body = ", ".join(f"{k}: {v:.6g}" for k, v in sorted(modes.items()))
        return f"TorusField({{{body}}})"


def _coerce(value) -> TorusField | None:
    if isinstance(value, TorusField):
        return value
    if isinstance(value, numbers.Real):
        return constant(float(value))
    return None


def _axis_index(axis: str | int) -> int:
    if axis in ("x", 0):
        return 0
    if axis in ("y", 1):
        return 1
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def constant(value: float) -> TorusField:
    if isinstance(value, complex):
        if value.imag:
            raise FieldError("constant fields must be real")
        value = value.real
    return TorusField(np.array([[float(value)]], dtype=complex))


def zero() -> TorusField:
    return constant(0.0)


def make_field(modes: Iterable[tuple[int, int, complex]]) -> TorusField:
    """Build a real field from ``(k1, k2, amplitude)`` triples.

    Missing conjugate partners are filled in.  A mode given together with a
    partner that is not its complex conjugate, a repeated mode, or an
    imaginary mean are rejected.

    Examples
    --------
    >>> make_field([(0, 0, 2), (0, 1, 0.5), (0, -1, 0.5)])(0.0, 0.0)
    3.0
    """
    given: dict[tuple[int, int], complex] = {}
    for k1, k2, amp in modes:
        key = (int(k1), int(k2))
        if key in given:
            raise FieldError(f"mode {key} given twice")
        given[key] = complex(amp)
    if not given:
        return zero()
    full = dict(given)
    for (k1, k2), amp in given.items():
        partner = (-k1, -k2)
        expected = amp.conjugate()
        if partner in given:
            other = given[partner]
            if abs(other - expected) > _CONJUGATE_RTOL * (1.0 + abs(amp)):
                raise FieldError(
                    f"amplitudes at {(k1, k2)} and {partner} are not complex conjugates"
                )
        else:
            full[partner] = expected
    B = max(max(abs(k1), abs(k2)) for k1, k2 in full)
    arr = np.zeros((2 * B + 1, 2 * B + 1), dtype=complex)
    for (k1, k2), amp in full.items():
        arr[k1 + B, k2 + B] = amp
    return TorusField(arr)


def derivative(field: TorusField, axis: str) -> TorusField:
    """Partial derivative: mode ``(k1, k2)`` is multiplied by ``i k_axis``."""
    ax = _axis_index(axis)
    k = _wavenumbers(field.bandwidth)
    factor = (1j * k)[:, None] if ax == 0 else (1j * k)[None, :]
    return TorusField(field.array * factor, scale=field.max_amplitude() * max(1, field.bandwidth))


def laplacian(field: TorusField) -> TorusField:
    k = _wavenumbers(field.bandwidth)
    factor = -(k[:, None] ** 2 + k[None, :] ** 2)
    return TorusField(field.array * factor, scale=field.max_amplitude() * max(1, field.bandwidth) ** 2)


def multiply(a: TorusField, b: TorusField) -> TorusField:
    """Exact product by spectral convolution.

    Raises
    ------
    BandwidthError
        If ``a.bandwidth + b.bandwidth`` exceeds the active cap.
    """
    if a.is_zero or b.is_zero:
        return zero()
    B = a.bandwidth + b.bandwidth
    cap = get_bandwidth_cap()
    if B > cap:
        raise BandwidthError(f"product bandwidth {B} exceeds cap {cap}")
    out = signal.convolve(a.array, b.array, mode="full")
    scale = min(a.l1_norm() * b.max_amplitude(), a.max_amplitude() * b.l1_norm())
    return TorusField(out, scale=scale)


# ----------------------------------------------------------------------
# collocation grids


@dataclass(frozen=True)
class GridField:
    """Real samples ``values[i, j] = u(2 pi i / n, 2 pi j / n)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise FieldError("grid values must be a square 2-d array")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        g = np.arange(self.n) * (2 * np.pi / self.n)
        return np.meshgrid(g, g, indexing="ij")


def to_grid(field: TorusField, n: int, strict: bool = True) -> GridField:
    """Sample ``field`` on an ``n x n`` uniform grid.

    Point values are exact for every ``n``: modes are folded modulo ``n``
    before the inverse FFT.  With ``strict=True`` (the default) a grid that
    cannot support an exact round trip (``n < 2B + 1``) is an error.
    """
    B = field.bandwidth
    if strict and n < 2 * B + 1:
        raise AliasingError(f"grid size {n} cannot resolve bandwidth {B} (need >= {2 * B + 1})")
    idx = _wavenumbers(B) % n
    folded = np.zeros((n, n), dtype=complex)
    np.add.at(folded, (idx[:, None], idx[None, :]), field.array)
    return GridField(np.real(np.fft.ifft2(folded)) * n * n)


def from_grid(grid: GridField, bandwidth: int) -> TorusField:
    """Discrete Fourier projection of grid samples onto ``|k| <= bandwidth``."""
    n = grid.n
    if n < 2 * bandwidth + 1:
        raise AliasingError(
            f"grid size {n} cannot resolve bandwidth {bandwidth} (need >= {2 * bandwidth + 1})"
        )
    spec = np.fft.fft2(grid.values) / (n * n)
    idx = _wavenumbers(bandwidth) % n
    return TorusField(spec[np.ix_(idx, idx)])


def _grid_series(
    field: TorusField,
    pointwise: Callable[[np.ndarray], np.ndarray],
    residual: Callable[[TorusField], TorusField],
    tol: float,
) -> TorusField:
    """Smallest truncation of the Fourier series of ``pointwise(field)``
    whose ``residual`` has sup-norm at most ``tol``."""
    cap = get_bandwidth_cap()
    n = max(32, 4 * field.bandwidth + 4)
    last_resid = math.inf

    def check(spec: np.ndarray, n_: int, b: int) -> tuple[TorusField, float]:
        idx = _wavenumbers(b) % n_
        trial = TorusField(spec[np.ix_(idx, idx)])
        return trial, residual(trial).sup_norm()

    while True:
        values = pointwise(to_grid(field, n, strict=False).values)
        spec = np.fft.fft2(values) / (n * n)
        bmax = min(n // 2 - 1, cap - field.bandwidth, cap)
        if bmax < 0:
            raise BandwidthError(f"bandwidth cap {cap} leaves no room for the result")
        # doubling search, then bisection between the last failure and first success
        lo, hi, found = -1, None, None
        b = 1
        while True:
            b = min(b, bmax)
            trial, resid = check(spec, n, b)
            last_resid = resid
            if resid <= tol:
                hi, found = b, trial
                break
            lo = b
            if b == bmax:
                break
            b *= 2
        if found is not None:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                trial, resid = check(spec, n, mid)
                if resid <= tol:
                    hi, found = mid, trial
                else:
                    lo = mid
            return found
        if bmax < n // 2 - 1 or n > 8 * cap:
            raise BandwidthError(
                f"tolerance {tol:g} unreachable under bandwidth cap {cap} "
                f"(best residual {last_resid:.3e})"
            )
        n *= 2


def _check_nonvanishing(field: TorusField, what: str) -> None:
    n = max(64, 4 * field.bandwidth + 4)
    v = to_grid(field, n, strict=False).values
    vmax = np.abs(v).max()
    if vmax == 0 or v.min() * v.max() <= 0 or np.abs(v).min() <= 1e-12 * vmax:
        raise DegenerateFieldError(f"{what}: field vanishes or changes sign on the torus")


def reciprocal(field: TorusField, tol: float = DEFAULT_RECIPROCAL_TOL) -> TorusField:
    """Truncated spectral approximation ``r`` of ``1 / field``.

    The returned ``r`` satisfies ``sup |field * r - 1| <= tol`` on a grid that
    resolves the product.

    Raises
    ------
    DegenerateFieldError
        If ``field`` has a zero or changes sign.
    BandwidthError
        If ``tol`` cannot be met under the bandwidth cap.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_nonvanishing(field, "reciprocal")
    if field.bandwidth == 0:
        return constant(1.0 / field.mean)
    return _grid_series(field, lambda v: 1.0 / v, lambda r: field * r - 1.0, tol)


def sqrt(field: TorusField, tol: float = DEFAULT_RECIPROCAL_TOL) -> TorusField:
    """Truncated spectral approximation ``r`` of ``sqrt(field)`` for positive fields,
    with ``sup |r * r - field| <= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_nonvanishing(field, "sqrt")
    if to_grid(field, 16, strict=False).values.min() < 0:
        raise DegenerateFieldError("sqrt: field is negative")
    if field.bandwidth == 0:
        return constant(math.sqrt(field.mean))
    return _grid_series(field, np.sqrt, lambda r: r * r - field, tol)


@dataclass(frozen=True)
class Constancy:
    """Outcome of :func:`constancy_test`.

    ``value`` is the mean amplitude when the field is constant, else ``None``;
    ``deviation`` is the largest nonzero-wave-vector amplitude.
    """

    is_constant: bool
    value: float | None
    deviation: float

    def __bool__(self) -> bool:
        return self.is_constant


def constancy_test(field: TorusField, eps: float = DEFAULT_CONSTANCY_EPS) -> Constancy:
    mean = field.coeff(0, 0)
    arr = np.array(field.array)
    B = field.bandwidth
    arr[B, B] = 0
    dev = float(np.abs(arr).max()) if arr.size else 0.0
    if dev <= eps * (1.0 + abs(mean)):
        return Constancy(True, mean.real, dev)
    return Constancy(False, None, dev)


# ----------------------------------------------------------------------
# literal (JSON/TOML) form


def field_from_literal(records: Sequence[Mapping[str, float]]) -> TorusField:
    """Load ``[{k1, k2, re, im}, ...]`` records; ``re`` and ``im`` default to 0."""
    modes = []
    for rec in records:
        try:
            amp = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
            modes.append((int(rec["k1"]), int(rec["k2"]), amp))
        except KeyError as exc:
            raise FieldError(f"field literal record {dict(rec)!r} lacks {exc}") from None
    return make_field(modes)


def _clean_float(v: float) -> float:
    v = float(f"{v:.15g}")
    return 0.0 if v == 0 else v


def field_to_literal(field: TorusField) -> list[dict[str, float]]:
    """Records sorted by ``(k1, k2)`` so emitted files are byte-stable."""
    return [
        {"k1": k1, "k2": k2, "re": _clean_float(a.real), "im": _clean_float(a.imag)}
        for (k1, k2), a in sorted(field.coeffs.items())
    ]


def random_field(bandwidth: int, rng: np.random.Generator, scale: float = 1.0) -> TorusField:
    """Real field with independent Gaussian amplitudes on every mode up to ``bandwidth``.

    Amplitudes are scaled by ``scale / (2 bandwidth + 1)`` so the sup-norm
    stays of order ``scale`` regardless of bandwidth.
    """
    n = 2 * bandwidth + 1
    arr = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * (scale / n)
    return TorusField(arr)
