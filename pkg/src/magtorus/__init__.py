"""Polynomial-in-momenta first integrals of magnetic geodesic flows on the
two-torus with a conformally flat metric ``Lambda(x, y) (dx^2 + dy^2)``.

Submodules
----------
field
    Band-limited real Fourier fields on the torus.
momentum
    Polynomials in the momenta with field coefficients and the magnetic bracket.
cascade
    Bracket coefficients, alternating sums and cascade residuals.
levels
    Fixed-energy level condition and splitting by energy.
families
    Closed-form integrable families of degree 3 and 4.
appendix
    Closed-form polynomial solution of the harmonic cascade.
dynamics
    Fixed-energy flow integration and characteristics blow-up detection.
checks, config, report, cli
    Check batteries, configuration, deterministic reports and the CLI.
"""
from __future__ import annotations

from .appendix import CascadeCoefficients, cascade_by_poisson, cascade_closed_form, closed_form_tables, poly_AB
from .cascade import CascadeReport, bracket_coefficients, cascade_residuals, conserved_combinations, kolokoltsov_check
from .config import ConfigError, Problem, RunConfig, load_problem, preset
from .dynamics import characteristics_blowup, cubic_charfield, hopf_charfield, integrate_flow
from .families import FamilySpec, build_family
from .field import TorusField, bandwidth_cap, constant, make_field
from .levels import split_by_energy
from .momentum import MomentumPolynomial, hamiltonian, magnetic_bracket, p1, p2

__version__ = "0.1.0"

__all__ = [
    "TorusField",
    "make_field",
    "constant",
    "bandwidth_cap",
    "MomentumPolynomial",
    "hamiltonian",
    "magnetic_bracket",
    "p1",
    "p2",
    "CascadeReport",
    "bracket_coefficients",
    "cascade_residuals",
    "conserved_combinations",
    "kolokoltsov_check",
    "split_by_energy",
    "FamilySpec",
    "build_family",
    "CascadeCoefficients",
    "closed_form_tables",
    "cascade_closed_form",
    "cascade_by_poisson",
    "poly_AB",
    "integrate_flow",
    "characteristics_blowup",
    "hopf_charfield",
    "cubic_charfield",
    "ConfigError",
    "Problem",
    "RunConfig",
    "load_problem",
    "preset",
]
