"""Command-line interface: ``dpnls <command> --p P --q Q [options]``.

JSON goes to stdout unless ``--out`` is given.  Every output starts with the
resolved configuration so that files are self-describing.  Exit codes: 0 ok,
1 usage error, 2 domain error, 3 numerical failure, 4 internal inconsistency.

CSV outputs
  profile      x, phi
  region-scan  p, q, regime, omega_star
  simulate     t, orbital_distance, mass, energy
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal, InvalidOperation

import numpy as np

from . import model, profile, simulator, stability
from .errors import ConsistencyError, DivergenceError, DomainError, DpnlsError, NumericalError
from .model import Nonlinearity
from .quadrature import DEFAULT_TOL
from .specialfn import DEFAULT_SERIES_TOL

SCHEMA = 1
DEFAULT_ROOT_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def decimal(text: str) -> float:
    """Parse a decimal literal; rejects hex, nan and inf spellings."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not value.is_finite():
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return float(value)


def _fmt(x):
    """Stable JSON-ready value: floats rounded to 15 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.15g}")
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _fmt(getattr(x, f.name)) for f in dataclasses.fields(x)
                if not f.name.startswith("_") and f.name != "nl"}
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_fmt(v) for v in x.tolist()]
    return x


def _config(args) -> dict:
    cfg = {"command": args.command}
    for key, value in vars(args).items():
        if key not in ("command", "handler", "format", "out"):
            cfg[key] = value
    cfg["output_format"] = args.format
    return cfg


def _emit_json(args, payload: dict) -> str:
    doc = {"schema": SCHEMA, "config": _config(args)}
    doc.update(payload)
    return json.dumps(_fmt(doc), indent=2) + "\n"


def _emit_csv(args, header, rows, extra=None) -> str:
    buf = io.StringIO()
    meta = {"schema": SCHEMA, "config": _config(args)}
    if extra:
        meta.update(extra)
    buf.write("# " + json.dumps(_fmt(meta), sort_keys=False) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.15g}" if isinstance(v, float) else ("" if v is None else v)
                         for v in row])
    return buf.getvalue()


def _nl(args) -> Nonlinearity:
    return Nonlinearity(args.p, args.q)


# --------------------------------------------------------------------------
# handlers
# --------------------------------------------------------------------------

def cmd_classify(args):
    report = stability.classify(_nl(args), tol=args.quad_tol, root_tol=args.root_tol)
    payload = _fmt(report)
    payload["theory_intervals"] = [
        {"lower": _fmt(iv.lower), "upper": _fmt(iv.upper),
         "lower_closed": iv.lower_closed, "upper_closed": iv.upper_closed,
         "verdict": iv.verdict}
        for iv in report.theory_intervals
    ]
    payload["numeric_sign_scan"] = [{"omega": _fmt(w), "sign": s}
                                    for w, s in report.numeric_sign_scan]
    payload["mu_estimate_is_numeric"] = report.mu_estimate is not None
    return _emit_json(args, {"report": payload})


def cmd_dmass(args):
    value = stability.dmass(_nl(args), args.omega, tol=args.quad_tol)
    return _emit_json(args, {"omega": args.omega, "dmass": value, "sign": int(np.sign(value))})


def cmd_limit(args):
    return _emit_json(args, {"limit": stability.zero_frequency_limit(_nl(args))})


def cmd_threshold(args):
    nl = _nl(args)
    th = stability.threshold(nl, tol=args.quad_tol, root_tol=args.root_tol)
    omega0 = model.critical_points(nl).omega0 if nl.subcritical else None
    if th is None:
        return _emit_json(args, {"regime": stability.select_regime(nl), "omega_star": None,
                                 "omega0": omega0})
    return _emit_json(args, {"regime": "sharp_threshold", "omega_star": th.omega_star,
                             "omega0": th.omega0, "threshold": th})


def cmd_critical_points(args):
    nl = _nl(args)
    return _emit_json(args, {"coefficients": nl.coeffs,
                             "critical_points": model.critical_points(nl),
                             "ordering_flags": model.ordering_flags(nl)})


def cmd_profile(args):
    prof = profile.build_profile(_nl(args), args.omega, args.n_samples, args.x_max)
    if args.format == "json":
        return _emit_json(args, {"peak": prof.peak, "x_max": prof.x_max,
                                 "x": prof.x, "phi": prof.phi})
    return _emit_csv(args, ["x", "phi"], zip(prof.x.tolist(), prof.phi.tolist()),
                     {"peak": prof.peak})


def cmd_h_limit(args):
    nl = _nl(args)
    nl.require_subcritical("h-limit")
    try:
        res = stability.h_limit_integral(nl, tol=args.quad_tol)
    except DivergenceError:
        return _emit_json(args, {"divergent": True, "quadrature": None, "closed_form": None})
    return _emit_json(args, {"divergent": False, "quadrature": res.quadrature,
                             "error_estimate": res.error_estimate,
                             "closed_form": res.closed_form,
                             "series": stability.h_limit_series(nl, args.series_tol)})


def _scan_cell(task):
    p, q, quad_tol, root_tol = task
    try:
        nl = Nonlinearity(p, q)
    except DomainError:
        return None
    regime = stability.select_regime(nl)
    omega_star = None
    if regime == "sharp_threshold":
        omega_star = stability.threshold(nl, quad_tol, root_tol, audit_points=3).omega_star
    return (p, q, regime, omega_star)


def cmd_region_scan(args):
    ps = np.linspace(args.p_min, args.p_max, args.p_steps)
    qs = np.linspace(args.q_min, args.q_max, args.q_steps)
    tasks = [(float(p), float(q), args.quad_tol, args.root_tol) for p in ps for q in qs]
    if args.workers == 1:
        rows = list(map(_scan_cell, tasks))
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_scan_cell, tasks, chunksize=4))
    rows = sorted((r for r in rows if r is not None), key=lambda r: (r[0], r[1]))
    if args.format == "json":
        return _emit_json(args, {"cells": [dict(zip(("p", "q", "regime", "omega_star"), r))
                                           for r in rows]})
    return _emit_csv(args, ["p", "q", "regime", "omega_star"], rows)


def cmd_simulate(args):
    res = simulator.stability_experiment(
        _nl(args), args.omega, eps=args.eps, t_end=args.t_end, n=args.n, dt=args.dt,
        record_every=args.record_every, perturbation=args.perturbation)
    summary = {"max_distance": res.max_distance, "verdict_hint": res.verdict_hint,
               "verdict_is_heuristic": True, "h1_norm": res.h1_norm,
               "blown_up": res.blown_up, "mass_drift": res.mass_drift,
               "energy_drift": res.energy_drift}
    rows = [(pt.t, pt.orbital_distance, pt.mass, pt.energy) for pt in res.series]
    if args.format == "json":
        summary["series"] = [dict(zip(("t", "orbital_distance", "mass", "energy"), r))
                             for r in rows]
        return _emit_json(args, summary)
    return _emit_csv(args, ["t", "orbital_distance", "mass", "energy"], rows, summary)


def cmd_audit(args):
    audit = stability.sign_pattern_audit(_nl(args), tol=args.quad_tol)
    return _emit_json(args, {"audit": audit, "passed": audit.passed})


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpnls", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--quad-tol", type=decimal, default=DEFAULT_TOL)
    common.add_argument("--root-tol", type=decimal, default=DEFAULT_ROOT_TOL)
    common.add_argument("--series-tol", type=decimal, default=DEFAULT_SERIES_TOL)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", metavar="PATH", default=None)

    pair = _Parser(add_help=False)
    pair.add_argument("--p", type=decimal, required=True)
    pair.add_argument("--q", type=decimal, required=True)

    freq = _Parser(add_help=False)
    freq.add_argument("--omega", type=decimal, required=True)

    def add(name, handler, parents, help_text, default_format="json"):
        sp = sub.add_parser(name, parents=parents, help=help_text, description=help_text)
        sp.set_defaults(handler=handler, default_format=default_format)
        return sp

    add("classify", cmd_classify, [pair, common], "stability report over omega > 0")
    add("dmass", cmd_dmass, [pair, freq, common], "M'(omega)")
    add("limit", cmd_limit, [pair, common], "zero-frequency limit of M'")
    add("threshold", cmd_threshold, [pair, common], "sharp threshold omega_*")
    add("critical-points", cmd_critical_points, [pair, common], "h0, s_j, t_j, omega0, orderings")
    sp = add("profile", cmd_profile, [pair, freq, common], "profile samples (CSV: x, phi)", "csv")
    sp.add_argument("--n-samples", type=int, default=profile.DEFAULT_SAMPLES)
    sp.add_argument("--x-max", type=decimal, default=None)
    add("h-limit", cmd_h_limit, [pair, common], "limit integral: quadrature and closed form")
    sp = add("region-scan", cmd_region_scan, [common],
             "regimes over a (p, q) rectangle (CSV: p, q, regime, omega_star)", "csv")
    for name, default in (("p-min", 1.1), ("p-max", 4.0), ("q-min", 1.5), ("q-max", 6.0)):
        sp.add_argument(f"--{name}", type=decimal, default=default)
    sp.add_argument("--p-steps", type=int, default=10)
    sp.add_argument("--q-steps", type=int, default=10)
    sp.add_argument("--workers", type=int, default=None, help="process count (default: CPU count)")
    sp = add("simulate", cmd_simulate, [pair, freq, common],
             "perturbed standing wave (CSV: t, orbital_distance, mass, energy)", "csv")
    sp.add_argument("--eps", type=decimal, default=1e-3)
    sp.add_argument("--t-end", type=decimal, default=30.0)
    sp.add_argument("--n", type=int, default=simulator.DEFAULT_N)
    sp.add_argument("--dt", type=decimal, default=simulator.DEFAULT_DT)
    sp.add_argument("--record-every", type=decimal, default=0.1)
    sp.add_argument("--perturbation", choices=("scale", "bump"), default="scale")
    add("audit", cmd_audit, [pair, common], "sign-pattern audit of F0 and F1")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 1
    args.format = args.format or args.default_format
    del args.default_format
    try:
        text = args.handler(args)
    except ConsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=stderr)
        return 4
    except DomainError as exc:
        print(f"domain error: {exc}", file=stderr)
        return 2
    except (NumericalError, DpnlsError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return 3
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())
