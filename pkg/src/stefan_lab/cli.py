"""Command-line entry point ``stefan-lab``.

Exit codes: 0 success, 2 validation or schema failure, 3 numerical abort,
4 usage error or missing input file. Every file written with ``--out`` gets a
sidecar ``<out>.manifest.json`` holding provenance and timing, so the payload
itself stays byte-identical across repeated runs.  JSON floats use Python's shortest
round-trip repr; non-finite values are written as ``null``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import equilibrium as eq
from . import hanzawa as hz
from . import material as mt
from . import simulate as sm
from . import spectral as sp
from . import verify as vf
from .errors import (
    DomainError,
    GeometryError,
    MeltingPointError,
    NoEquilibriumError,
    PoleError,
    QuadratureError,
    SchemaError,
    SolverError,
    WellPosednessError,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 4

TOL_PROFILES = {
    "default": {"spectral_cells": sp.DEFAULT_CELLS, "newton_tol": 1e-12, "constraint_tol": 1e-10},
    "strict": {"spectral_cells": 2 * sp.DEFAULT_CELLS, "newton_tol": 1e-13, "constraint_tol": 1e-12},
}

log = logging.getLogger("stefan_lab")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output helpers ---------------------------------------------------------

def clean(obj):
    """Recursively convert numpy scalars and arrays; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj):
    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out, args, inputs, t0):
    manifest = {
        "command": ["stefan-lab", *args.argv],
        "inputs": {str(p): digest(p) for p in inputs if p},
        "parameters": {k: v for k, v in vars(args).items() if k not in ("func", "argv")},
        "version": __version__,
        "wall_time_seconds": time.perf_counter() - t0,
    }
    Path(str(out) + ".manifest.json").write_text(dumps(manifest))


def emit_json(payload, args, inputs, t0):
    text = dumps(payload)
    if args.out:
        Path(args.out).write_text(text)
        write_manifest(args.out, args, inputs, t0)
    else:
        sys.stdout.write(text)


def write_rows_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


def need_file(path):
    if path is None:
        return None
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def read_json(path):
    try:
        return json.loads(Path(need_file(path)).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON in {path}: {exc}") from None


# --- subcommands ------------------------------------------------------------

def cmd_material_validate(args, t0):
    model = mt.load_model(need_file(args.file))
    rep = mt.validate(model, samples=args.samples)
    payload = {"ok": rep.ok, "u_m": rep.u_m, "violations": [str(v) for v in rep.violations]}
    emit_json(payload, args, [args.file], t0)
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def _model_domain(args):
    model = mt.load_model(need_file(args.model))
    domain = eq.load_domain(need_file(args.domain))
    return model, domain


def cmd_equilibria_solve(args, t0):
    model, domain = _model_domain(args)
    roots = eq.solve_for_energy(model, domain, args.E0, args.m)
    payload = {
        "E0": args.E0,
        "m": args.m,
        "equilibria": [{"u_star": r.u_star, "energy_slope": r.energy_slope, **r.point.to_dict()} for r in roots],
    }
    emit_json(payload, args, [args.model, args.domain], t0)
    return EXIT_OK


def cmd_equilibria_point(args, t0):
    model, domain = _model_domain(args)
    p = eq.indicators(model, domain, args.u, args.m)
    payload = p.to_dict()
    payload["E_e"] = eq.equilibrium_energy(model, domain, args.u, args.m)
    payload["E_e_prime"] = eq.equilibrium_energy_derivative(model, domain, args.u, args.m)
    emit_json(payload, args, [args.model, args.domain], t0)
    return EXIT_OK


BIFURCATION_COLUMNS = ("u", "R", "E_e", "E_e_prime", "zeta", "eta", "l_star", "feasible", "predicted_unstable")


def cmd_equilibria_bifurcation(args, t0):
    model, domain = _model_domain(args)
    rows = eq.bifurcation_curve(model, domain, args.m, args.points)
    if args.out:
        write_rows_csv(args.out, BIFURCATION_COLUMNS, rows)
        write_manifest(args.out, args, [args.model, args.domain], t0)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(BIFURCATION_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in BIFURCATION_COLUMNS])
    return EXIT_OK


def _parse_lambda_max(text):
    if text in (None, "auto"):
        return None
    try:
        x = float(text)
    except ValueError:
        raise UsageError(f"--lambda-max must be a number or 'auto', got {text!r}") from None
    if not x > sp.LAMBDA_MIN:
        raise UsageError("--lambda-max must exceed the scan floor 1e-6")
    return x


def cmd_spectrum(args, t0):
    model = mt.load_model(need_file(args.model))
    g = read_json(args.geom)
    geom = sp.geometry_from_dict(g, R_star=eq.radius(model, args.u_star))
    if geom.n != model.n:
        raise SchemaError("$.n", "geometry dimension differs from the model's")
    payload = sp.spectrum_report(
        model,
        args.u_star,
        geom.R_Omega,
        l_max=args.l_max,
        lam_max=_parse_lambda_max(args.lambda_max),
        cells=TOL_PROFILES[args.tol_profile]["spectral_cells"],
        threads=args.threads,
    )
    emit_json(payload, args, [args.model, args.geom], t0)
    return EXIT_OK


def _sim_config(args, data):
    cfg = sm.config_from_dict(data)
    prof = TOL_PROFILES[args.tol_profile]
    return replace(cfg, newton_tol=min(cfg.newton_tol, prof["newton_tol"]), constraint_tol=min(cfg.constraint_tol, prof["constraint_tol"]))


def cmd_simulate(args, t0):
    if args.model is None or args.geom is None or args.config is None:
        raise UsageError("simulate needs --model, --geom and --config (or the stability-sweep subcommand)")
    model = mt.load_model(need_file(args.model))
    g = read_json(args.geom)
    raw = read_json(args.config)
    if not isinstance(raw, dict):
        raise SchemaError("$", "config must be a JSON object")
    raw = dict(raw)
    u_star = raw.pop("u_star", args.u_star)
    if u_star is None:
        raise SchemaError("$.u_star", "missing (give it in the config or via --u-star)")
    if "R_Omega" not in g:
        raise SchemaError("$.R_Omega", "missing")
    R_Omega = float(g["R_Omega"])
    cfg = _sim_config(args, raw)
    state = sm.initial_state(model, float(u_star), R_Omega, cfg, seed=args.seed)
    res = sm.run(model, state, R_Omega, cfg, R_star=eq.radius(model, float(u_star)), with_mcflow=args.mcflow)
    if args.out:
        res.diagnostics.write_csv(args.out)
        write_manifest(args.out, args, [args.model, args.geom, args.config], t0)
    else:
        res.diagnostics.write_csv("/dev/stdout")
    return EXIT_OK


def cmd_stability_sweep(args, t0):
    data = read_json(args.cases)
    cases = sm.sweep_cases_from_dict(data, base_dir=Path(args.cases).parent)
    prof = TOL_PROFILES[args.tol_profile]
    cases = [replace(c, config=replace(c.config, newton_tol=min(c.config.newton_tol, prof["newton_tol"]))) for c in cases]
    verdicts = sm.stability_sweep(cases, threads=args.threads)
    emit_json({"cases": verdicts}, args, [args.cases], t0)
    return EXIT_NUMERICAL if any(v["error"] for v in verdicts) else EXIT_OK


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        grid = (int(a), int(b))
    except ValueError:
        raise UsageError(f"--grid must look like 256x512, got {text!r}") from None
    if min(grid) < 8:
        raise UsageError("--grid needs at least 8 points per direction")
    return grid


def cmd_hanzawa_check(args, t0):
    grid = _parse_grid(args.grid)
    if args.n not in (2, 3):
        raise UsageError("--n must be 2 or 3")
    report = hz.battery_report(n=args.n, S=args.R, grid=grid)
    emit_json(report, args, [], t0)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_verify_all(args, t0):
    model = mt.load_model(need_file(args.model))
    domain = eq.load_domain(need_file(args.geom))
    echo = lambda line: print(line, file=sys.stderr)
    results = vf.run_all(echo=echo)
    extra = vf.model_checks(model, domain, args.u_star, cells=TOL_PROFILES[args.tol_profile]["spectral_cells"])
    for r in extra:
        echo(r.line())
    payload = {
        "passed": all(r.passed for r in results + extra),
        "criteria": [r.to_dict() for r in results],
        "model_checks": [r.to_dict() for r in extra],
    }
    emit_json(payload, args, [args.model, args.geom], t0)
    return EXIT_OK if payload["passed"] else EXIT_VALIDATION


# --- parser -----------------------------------------------------------------

def build_parser():
    p = Parser(
        prog="stefan-lab",
        description="Stability analysis and radial dynamics of the two-phase Stefan problem with surface tension.",
        epilog="Exit codes: 0 ok, 2 validation/schema failure, 3 numerical abort, 4 usage error or missing file. "
        "Log level from STEFAN_LAB_LOG (e.g. INFO). Output formats are documented in docs/formats.md.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads for mode scans and sweeps")
    p.add_argument("--seed", type=int, default=None, help="seed for noise perturbations")
    p.add_argument("--tol-profile", choices=sorted(TOL_PROFILES), default="default", help="tolerance profile")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    m = sub.add_parser("material", help="material model checks")
    msub = m.add_subparsers(dest="action", required=True, parser_class=Parser)
    mv = msub.add_parser("validate", help="check the standing assumptions; JSON {ok, u_m, violations}")
    mv.add_argument("file")
    mv.add_argument("--samples", type=int, default=2048)
    mv.add_argument("--out")
    mv.set_defaults(func=cmd_material_validate)

    e = sub.add_parser("equilibria", help="equilibria and stability indicators")
    esub = e.add_subparsers(dest="action", required=True, parser_class=Parser)
    es = esub.add_parser("solve", help="all equilibria with E_e(u) = E0; JSON list of points")
    es.add_argument("--E0", type=float, required=True)
    ep = esub.add_parser("point", help="indicators at one temperature; JSON point")
    ep.add_argument("--u", type=float, required=True)
    eb = esub.add_parser(
        "bifurcation",
        help="CSV columns: u, R, E_e, E_e_prime, zeta, eta, l_star, feasible, predicted_unstable",
    )
    eb.add_argument("--points", type=int, default=eq.SCAN_POINTS)
    for q, fn in ((es, cmd_equilibria_solve), (ep, cmd_equilibria_point), (eb, cmd_equilibria_bifurcation)):
        q.add_argument("--model", required=True)
        q.add_argument("--domain", required=True)
        q.add_argument("--m", type=int, default=1)
        q.add_argument("--out")
        q.set_defaults(func=fn)

    s = sub.add_parser(
        "spectrum",
        help="positive eigenvalues per mode; JSON {kernel_dim, positive[{lambda, l, mult}], predicted, match, limits}",
    )
    s.add_argument("--model", required=True)
    s.add_argument("--geom", required=True)
    s.add_argument("--u-star", type=float, required=True)
    s.add_argument("--l-max", type=int, default=8)
    s.add_argument("--lambda-max", default="auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    r = sub.add_parser(
        "simulate",
        help="radial run; CSV columns: t, R, u_Gamma, V, E, Phi, gt_residual, mcflow_residual",
    )
    r.add_argument("--model")
    r.add_argument("--geom")
    r.add_argument("--config")
    r.add_argument("--u-star", type=float, default=None, help="equilibrium temperature if not in the config")
    r.add_argument("--mcflow", action="store_true", help="evaluate mcflow_residual (no undercooling only)")
    r.add_argument("--out")
    r.set_defaults(func=cmd_simulate)
    rsub = r.add_subparsers(dest="action", parser_class=Parser)
    rs = rsub.add_parser(
        "stability-sweep",
        help="JSON cases[{name, predicted_stable, observed_stable, fitted_rate, spectral_rate, relative_error, energy_drift, error}]",
    )
    rs.add_argument("--cases", required=True)
    rs.add_argument("--out")
    rs.set_defaults(func=cmd_stability_sweep)

    h = sub.add_parser("hanzawa-check", help="height-function battery; JSON {passed, checks[...]}")
    h.add_argument("--n", type=int, default=3)
    h.add_argument("--R", type=float, default=1.0)
    h.add_argument("--grid", default="64x128")
    h.add_argument("--out")
    h.set_defaults(func=cmd_hanzawa_check)

    v = sub.add_parser("verify-all", help="acceptance battery plus model checks; exit 0 iff all pass")
    v.add_argument("--model", required=True)
    v.add_argument("--geom", required=True)
    v.add_argument("--u-star", type=float, default=None, help="also count eigenvalues of the model at this temperature")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify_all)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    level = os.environ.get("STEFAN_LAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    if args.threads < 1:
        print("stefan-lab: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        return args.func(args, t0)
    except (FileNotFoundError, UsageError) as exc:
        print(f"stefan-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, MeltingPointError, DomainError, NoEquilibriumError, PoleError) as exc:
        print(f"stefan-lab: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (WellPosednessError, GeometryError, SolverError, QuadratureError) as exc:
        print(f"stefan-lab: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
