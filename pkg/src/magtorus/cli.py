"""``magtorus`` command-line interface.

Every command accepts ``--out DIR`` (default: ``$MAGTORUS_OUT``).  Reports
are written as canonical JSON (sorted keys, six significant digits) plus CSV
where tabular data exists; without an output directory the JSON goes to
stdout.  ``check`` and ``suite`` exit with status 1 when any residual exceeds
its tolerance; configuration errors exit with status 2.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .appendix import AppendixError
from .cascade import bracket_coefficients, cascade_residuals, conserved_combinations, format_system, kolokoltsov_check
from .checks import BATTERIES, FLOW_START, appendix_battery, run_battery
from .config import ConfigError, Problem, RunConfig, load_mapping, load_problem, parse_levels, parse_perturb, preset, PRESETS
from .config import family_spec_from_mapping
from .dynamics import (
    BlowupResult,
    characteristics_blowup,
    cubic_charfield,
    drift_report,
    hopf_charfield,
    integrate_flow,
    trajectory_csv,
)
from .families import bracket_residual, build_family, identity_reduction_check
from .field import (
    FieldError,
    bandwidth_cap,
    constancy_test,
    field_from_literal,
    field_to_literal,
    laplacian,
    reciprocal,
    sqrt,
    to_grid,
)
from .levels import split_by_energy
from .momentum import magnetic_bracket
from .report import Report, canonical_json, default_out_dir, emit_report, rows_csv

__all__ = ["main", "build_parser"]

FIELD_OPS = ("show", "dx", "dy", "laplacian", "reciprocal", "sqrt", "constancy", "grid")


# ----------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=1e-10, help="residual tolerance (default 1e-10)")
    p.add_argument("--reciprocal-tol", type=float, default=1e-12, help="tolerance for 1/Lambda (default 1e-12)")
    p.add_argument("--grid", type=int, default=16, help="(x, y) collocation points per axis for level checks")
    p.add_argument("--bandwidth-cap", type=int, default=None, help="hard cap on product bandwidths")
    p.add_argument("--out", type=Path, default=None, help="output directory (default $MAGTORUS_OUT)")
    return p


def _problem_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--spec", type=Path, help="family spec or problem file (TOML or JSON)")
    g.add_argument("--preset", choices=sorted(PRESETS), help="built-in problem (default: linear)")
    p.add_argument("--perturb", action="append", metavar="NAME=VALUE", help="add VALUE to coefficient NAME (e.g. b2=0.1)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="magtorus", description="Polynomial integrals of magnetic geodesic flows on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", parents=[common], help="inspect a field literal")
    p.add_argument("file", type=Path, help="field literal (JSON list, or TOML/JSON with a 'modes' list)")
    p.add_argument("--op", choices=FIELD_OPS, default="show")
    p.add_argument("--n", type=int, default=None, help="grid size for --op grid")

    p = sub.add_parser("bracket", parents=[common], help="magnetic bracket of F with H")
    _problem_args(p)

    p = sub.add_parser("cascade", parents=[common], help="bracket coefficients and cascade residuals")
    _problem_args(p)
    p.add_argument("--emit-system", action="store_true", help="print the symbolic structure of every 2 L^2 M[s,k]")
    p.add_argument("--degree", type=int, default=None, help="degree for --emit-system without a problem")

    p = sub.add_parser("levels", parents=[common], help="energy-level splitting")
    _problem_args(p)
    p.add_argument("--levels", type=str, default=None, help="comma-separated energy constants C")
    p.add_argument("--probes", type=str, default=None, help="comma-separated probe levels")
    p.add_argument("--sharp", action="store_true", help="allow the smaller experimental level counts")

    p = sub.add_parser("family", parents=[common], help="closed-form integrable families")
    fam = p.add_subparsers(dest="action", required=True)
    fb = fam.add_parser("build", parents=[common], help="emit the integral as JSON")
    fb.add_argument("spec_file", type=Path)
    fc = fam.add_parser("check", parents=[common], help="run the problem checks on a family")
    fc.add_argument("spec_file", type=Path)
    fc.add_argument("--levels", type=str, default=None)
    fc.add_argument("--probes", type=str, default=None)
    fc.add_argument("--perturb", action="append", metavar="NAME=VALUE")

    p = sub.add_parser("appendix", parents=[common], help="polynomial cascade solution")
    app = p.add_subparsers(dest="action", required=True)
    av = app.add_parser("verify", parents=[common], help="verify the closed form up to degree N")
    av.add_argument("--n", type=int, default=8, help="largest degree N (default 8)")

    p = sub.add_parser("flow", parents=[common], help="integrate the fixed-energy flow")
    _problem_args(p)
    p.add_argument("--C", type=float, default=1.0, help="energy constant (H = C/2)")
    p.add_argument("--start", type=str, default=",".join(str(v) for v in FLOW_START), help="x,y,phi")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--rtol", type=float, default=1e-12)

    p = sub.add_parser("blowup", parents=[common], help="characteristics crossing detector")
    p.add_argument("--model", choices=("hopf", "cubic"), default="hopf")
    p.add_argument("--K1", type=float, default=1.0)
    p.add_argument("--K2", type=float, default=0.0)
    p.add_argument("--K3", type=float, default=0.0)
    p.add_argument("--branch", type=int, choices=(1, -1), default=1)
    p.add_argument("--g0", type=str, default="sin", help="'sin', 'const:V' or 'sin:A,B' meaning A + B sin s")
    p.add_argument("--samples", type=int, default=2048)

    p = sub.add_parser("check", parents=[common], help="run a named check battery")
    p.add_argument("battery", choices=sorted(BATTERIES))
    p.add_argument("--spec", type=Path, default=None, help="family spec / problem for linear, degree3, degree4")
    p.add_argument("--levels", type=str, default=None)
    p.add_argument("--probes", type=str, default=None)
    p.add_argument("--perturb", action="append", metavar="NAME=VALUE")

    sub.add_parser("suite", parents=[common], help="run every battery")
    return parser


# ----------------------------------------------------------------------
# helpers


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        tol=args.tol,
        reciprocal_tol=args.reciprocal_tol,
        grid=args.grid,
        bandwidth_cap=args.bandwidth_cap,
        levels=parse_levels(getattr(args, "levels", None)),
        probes=parse_levels(getattr(args, "probes", None)),
        perturb=parse_perturb(getattr(args, "perturb", None)),
        out=args.out if args.out is not None else default_out_dir(),
    )


def _problem(args: argparse.Namespace, cfg: RunConfig) -> Problem:
    if getattr(args, "spec", None) is not None:
        prob = load_problem(args.spec, cfg.reciprocal_tol)
    else:
        prob = preset(getattr(args, "preset", None) or "linear", cfg.reciprocal_tol)
    return prob.perturbed(cfg.perturb) if cfg.perturb else prob


def _output(name: str, payload, cfg: RunConfig, csv_text: str | None = None) -> None:
    paths = emit_report(name, payload, cfg.out, csv_text)
    if paths:
        for p in paths:
            print(p)
    else:
        sys.stdout.write(canonical_json(payload))


def _field_file(path: Path):
    if path.suffix.lower() == ".json":
        import json

        data = json.loads(path.read_text())
    else:
        data = load_mapping(path)
    records = data["modes"] if isinstance(data, dict) else data
    return field_from_literal(records)


def _g0(text: str):
    if text == "sin":
        return np.sin
    kind, _, rest = text.partition(":")
    try:
        if kind == "const":
            v = float(rest)
            return lambda s: np.full_like(np.asarray(s, dtype=float), v)
        if kind == "sin":
            a, b = (float(t) for t in rest.split(","))
            return lambda s: a + b * np.sin(s)
    except ValueError:
        pass
    raise ConfigError(f"cannot parse initial data {text!r}")


# ----------------------------------------------------------------------
# commands


def cmd_field(args, cfg: RunConfig) -> int:
    fld = _field_file(args.file)
    op = args.op
    if op == "constancy":
        c = constancy_test(fld)
        _output("field", {"constant": c.is_constant, "value": c.value, "deviation": c.deviation}, cfg)
        return 0
    if op == "grid":
        n = args.n or 2 * fld.bandwidth + 1
        g = to_grid(fld, n)
        _output("field", {"n": g.n, "values": g.values.tolist()}, cfg)
        return 0
    result = {
        "show": lambda f: f,
        "dx": lambda f: f.dx,
        "dy": lambda f: f.dy,
        "laplacian": laplacian,
        "reciprocal": lambda f: reciprocal(f, cfg.reciprocal_tol),
        "sqrt": lambda f: sqrt(f, cfg.reciprocal_tol),
    }[op](fld)
    _output("field", {"op": op, "bandwidth": result.bandwidth, "modes": field_to_literal(result)}, cfg)
    return 0


def cmd_bracket(args, cfg: RunConfig) -> int:
    prob = _problem(args, cfg)
    br = magnetic_bracket(prob.F, prob.H, prob.omega)
    ok = br.sup_norm() <= cfg.tol
    _output("bracket", {"problem": prob.name, "sup_norm": br.sup_norm(), "commutes": ok, "bracket": br.to_json()}, cfg)
    return 0


def cmd_cascade(args, cfg: RunConfig) -> int:
    if args.emit_system:
        if args.degree is not None:
            N = args.degree
        else:
            N = _problem(args, cfg).F.degree
        print(format_system(N))
        return 0
    prob = _problem(args, cfg)
    rep = bracket_coefficients(prob.F, prob.lam, prob.omega)
    cascade_residuals(rep, prob.lam, prob.omega)
    payload = {"problem": prob.name, **rep.to_json()}
    if prob.F.degree in (3, 4):
        kk = kolokoltsov_check(prob.F)
        payload["kolokoltsov"] = {"A0": kk.A0, "A1": kk.A1, "nonconstant_mass": kk.nonconstant_mass}
        payload["constants"] = {c.name: {"value": c.value, "deviation": c.constancy.deviation} for c in conserved_combinations(prob.F, rep)}
    _output("cascade", payload, cfg)
    return 0


def cmd_levels(args, cfg: RunConfig) -> int:
    prob = _problem(args, cfg)
    N = prob.F.degree
    levels = cfg.levels or tuple(float(c) for c in range(1, N + 3))
    res = split_by_energy(prob.F, prob.lam, prob.omega, levels, cfg.probes or (), sharp=args.sharp, n_grid=cfg.grid)
    columns = ["level", "mode", "max_amplitude", "fit_degree", "fit_residual"]
    _output("levels", {"problem": prob.name, **res.to_json()}, cfg, rows_csv(res.rows, columns))
    return 0 if res.conserved else 1


def cmd_family(args, cfg: RunConfig) -> int:
    spec = family_spec_from_mapping(load_mapping(args.spec_file), cfg.reciprocal_tol)
    if args.action == "build":
        F = build_family(spec)
        payload = {
            "degree": spec.degree,
            "F": F.to_json(),
            "bracket_sup": bracket_residual(F, spec),
            "reduction_identity": identity_reduction_check(F, spec),
        }
        _output("family", payload, cfg)
        return 0
    report = run_battery(f"degree{spec.degree}" if spec.degree in (3, 4) else "linear", cfg, load_problem(args.spec_file, cfg.reciprocal_tol))
    return _finish(report, cfg)


def cmd_appendix(args, cfg: RunConfig) -> int:
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    return _finish(appendix_battery(cfg, n_max=args.n), cfg)


def cmd_flow(args, cfg: RunConfig) -> int:
    prob = _problem(args, cfg)
    try:
        start = tuple(float(v) for v in args.start.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse --start {args.start!r}") from None
    if len(start) != 3:
        raise ConfigError("--start needs x,y,phi")
    traj = integrate_flow(prob.lam, prob.omega, args.C, start, args.T, rtol=args.rtol, atol=args.rtol)
    drifts = drift_report(traj, prob.integrals)
    payload = {"problem": prob.name, "C": args.C, "T": args.T, "steps": len(traj.times), "drift": drifts, "energy_error": traj.energy_error()}
    _output("flow", payload, cfg, trajectory_csv(traj, prob.integrals))
    return 0


def cmd_blowup(args, cfg: RunConfig) -> int:
    g0 = _g0(args.g0)
    cf = hopf_charfield(g0) if args.model == "hopf" else cubic_charfield(args.K1, args.K2, args.K3, args.branch, g0)
    res: BlowupResult = characteristics_blowup(cf, n_samples=args.samples)
    _output("blowup", res.to_json(), cfg)
    return 0


def _finish(report: Report, cfg: RunConfig) -> int:
    print(report.summary())
    paths = emit_report(report.battery, report.to_json(), cfg.out)
    for p in paths:
        print(p)
    return 0 if report.passed else 1


def cmd_check(args, cfg: RunConfig) -> int:
    problem = load_problem(args.spec, cfg.reciprocal_tol) if args.spec is not None else None
    if problem is not None and args.battery not in ("linear", "degree3", "degree4"):
        raise ConfigError(f"--spec does not apply to battery {args.battery!r}")
    return _finish(run_battery(args.battery, cfg, problem), cfg)


def cmd_suite(args, cfg: RunConfig) -> int:
    reports = [run_battery(name, cfg) for name in BATTERIES]
    for r in reports:
        print(r.summary())
    payload = {
        "status": "PASS" if all(r.passed for r in reports) else "FAIL",
        "batteries": {r.battery: r.to_json() for r in reports},
    }
    for p in emit_report("suite", payload, cfg.out):
        print(p)
    return 0 if all(r.passed for r in reports) else 1


COMMANDS = {
    "field": cmd_field,
    "bracket": cmd_bracket,
    "cascade": cmd_cascade,
    "levels": cmd_levels,
    "family": cmd_family,
    "appendix": cmd_appendix,
    "flow": cmd_flow,
    "blowup": cmd_blowup,
    "check": cmd_check,
    "suite": cmd_suite,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        cap = bandwidth_cap(cfg.bandwidth_cap) if cfg.bandwidth_cap is not None else contextlib.nullcontext()
        with cap:
            return COMMANDS[args.command](args, cfg)
    except (ConfigError, FieldError, AppendixError, OSError, KeyError) as exc:
        print(f"magtorus: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
