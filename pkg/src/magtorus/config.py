"""Run configuration, TOML/JSON loaders and built-in problem presets.

Family specification files look like::

    degree = 3
    lambda = [{k1 = 0, k2 = 0, re = 2.0}, {k1 = 0, k2 = 1, re = 0.5}]
    f1 = [{k1 = 0, k2 = 1, im = -0.5}]
    [constants]
    K1 = 1.0
    s0 = 1.0
    s2 = 0.5

Field literals are lists of ``{k1, k2, re, im}`` records (``re``/``im``
default to 0); missing conjugate modes are filled in.  A general problem
file instead gives ``lambda``, ``omega`` and ``F``, where ``F`` maps
``"m1,m2"`` exponent keys to field literals.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on older interpreters
    import tomli as tomllib

from .families import FamilySpec, build_family, perturb
from .field import DEFAULT_RECIPROCAL_TOL, TorusField, field_from_literal, make_field
from .momentum import MomentumPolynomial, hamiltonian, p1

__all__ = [
    "ConfigError",
    "RunConfig",
    "Problem",
    "load_mapping",
    "family_spec_from_mapping",
    "problem_from_mapping",
    "load_problem",
    "preset",
    "PRESETS",
    "parse_levels",
    "parse_perturb",
]


class ConfigError(ValueError):
    """Malformed configuration."""


@dataclass
class RunConfig:
    """Parameters shared by CLI commands.  All tolerances must be positive
    and level lists distinct and positive."""

    tol: float = 1e-10
    reciprocal_tol: float = DEFAULT_RECIPROCAL_TOL
    grid: int = 16
    bandwidth_cap: int | None = None
    levels: tuple[float, ...] | None = None
    probes: tuple[float, ...] | None = None
    perturb: dict[str, float] = dc_field(default_factory=dict)
    out: Path | None = None

    def __post_init__(self):
        for name in ("tol", "reciprocal_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive number, got {v}")
        if self.grid < 1:
            raise ConfigError("grid must be a positive integer")
        if self.bandwidth_cap is not None and self.bandwidth_cap < 1:
            raise ConfigError("bandwidth cap must be a positive integer")
        for name in ("levels", "probes"):
            v = getattr(self, name)
            if v is None:
                continue
            if any(not c > 0 for c in v):
                raise ConfigError(f"{name} must be positive")
            if len(set(v)) != len(v):
                raise ConfigError(f"{name} must be distinct")


def parse_levels(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse level list {text!r}") from None


def parse_perturb(items: list[str] | None) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--perturb expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"bad perturbation value in {item!r}") from None
    return out


def load_mapping(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc


def _literal(data: Mapping[str, Any], key: str) -> TorusField:
    if key not in data:
        raise ConfigError(f"missing field literal {key!r}")
    try:
        return field_from_literal(data[key])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad field literal {key!r}: {exc}") from exc


def family_spec_from_mapping(data: Mapping[str, Any], tol: float = DEFAULT_RECIPROCAL_TOL) -> FamilySpec:
    try:
        degree = int(data["degree"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("family spec needs an integer 'degree'") from None
    constants = {str(k): float(v) for k, v in dict(data.get("constants", {})).items()}
    try:
        return FamilySpec(degree, _literal(data, "lambda"), _literal(data, "f1"), constants, tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class Problem:
    """Metric, magnetic field and a candidate integral ``F``.

    ``integrals`` holds every polynomial whose drift is meaningful (``F``
    itself, ``H`` and, for families, the linear integral).
    """

    name: str
    lam: TorusField
    omega: TorusField
    F: MomentumPolynomial
    spec: FamilySpec | None = None
    reciprocal_tol: float = DEFAULT_RECIPROCAL_TOL
    integrals: dict[str, MomentumPolynomial] = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.integrals:
            self.integrals = {"F": self.F}
        self.integrals.setdefault("H", hamiltonian(self.lam, self.reciprocal_tol))

    @property
    def H(self) -> MomentumPolynomial:
        return self.integrals["H"]

    def perturbed(self, changes: Mapping[str, float]) -> "Problem":
        F = self.F
        for name, delta in changes.items():
            try:
                F = perturb(F, name, delta)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        tag = ",".join(f"{k}={v:g}" for k, v in sorted(changes.items()))
        return Problem(f"{self.name}[{tag}]" if tag else self.name, self.lam, self.omega, F, self.spec, self.reciprocal_tol)


def problem_from_mapping(data: Mapping[str, Any], name: str = "problem", tol: float = DEFAULT_RECIPROCAL_TOL) -> Problem:
    if "f1" in data:
        spec = family_spec_from_mapping(data, tol)
        return _family_problem(name, spec)
    lam, omega = _literal(data, "lambda"), _literal(data, "omega")
    if "F" not in data:
        raise ConfigError("problem needs 'F' (exponent map) or a family spec")
    try:
        F = MomentumPolynomial.from_json(data["F"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad polynomial 'F': {exc}") from exc
    return Problem(name, lam, omega, F, None, tol)


def load_problem(path: str | Path, tol: float = DEFAULT_RECIPROCAL_TOL) -> Problem:
    return problem_from_mapping(load_mapping(path), Path(path).stem, tol)


def _family_problem(name: str, spec: FamilySpec) -> Problem:
    F = build_family(spec)
    integrals = {f"F{spec.degree}": F, "F1": spec.linear_integral, "H": spec.hamiltonian}
    return Problem(name, spec.lam, spec.omega, F, spec, spec.tol, integrals)


# ----------------------------------------------------------------------
# presets

def _lam_default() -> TorusField:
    return make_field([(0, 0, 2.0), (0, 1, 0.5), (0, -1, 0.5)])


def _sin_y() -> TorusField:
    return make_field([(0, 1, -0.5j), (0, -1, 0.5j)])


DEGREE3_CONSTANTS = {"K1": 1.0, "s0": 1.0, "s2": 0.5}
DEGREE4_CONSTANTS = {"K1": 0.7, "K3": -0.4, "s2": 0.3, "s3": 0.2, "s5": -0.25, "s6": 0.15}


def _linear(tol: float) -> Problem:
    lam, u = _lam_default(), _sin_y()
    omega = -u.dy
    F = p1() + u
    return Problem("linear", lam, omega, F, None, tol, {"F1": F})


def _degree3(tol: float) -> Problem:
    return _family_problem("degree3", FamilySpec(3, _lam_default(), _sin_y(), dict(DEGREE3_CONSTANTS), tol))


def _degree4(tol: float) -> Problem:
    return _family_problem("degree4", FamilySpec(4, _lam_default(), _sin_y(), dict(DEGREE4_CONSTANTS), tol))


PRESETS = {"linear": _linear, "degree3": _degree3, "degree4": _degree4}


def preset(name: str, tol: float = DEFAULT_RECIPROCAL_TOL) -> Problem:
    """Built-in problems: ``linear`` (``Lambda = 2 + cos y``, ``Omega = -cos y``,
    ``F = p1 + sin y``), ``degree3`` and ``degree4`` (the closed-form families
    with ``Lambda = 2 + cos y``, ``f1 = sin y`` and default constants)."""
    try:
        return PRESETS[name](tol)
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
