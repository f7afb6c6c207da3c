"""Command line interface: ``vpx {mrs,recurrence,approx,norm,run}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from .errors import ConfigError, VpxError
from .weights import PRESETS, load_spec, preset, weight


def _spec(text):
    if text in PRESETS:
        return preset(text)
    if not os.path.exists(text):
        raise argparse.ArgumentTypeError(
            f"{text!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    try:
        return load_spec(text)
    except (ConfigError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        out = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("need positive integers")
    return out


def _p(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    p = float(text)
    if not p >= 1:
        raise argparse.ArgumentTypeError("p must be >= 1 or 'inf'")
    return p


def _grid(text, default_L):
    """``lo:hi:num`` or ``num`` (symmetric around 0 out to ``default_L``)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.linspace(-default_L, default_L, int(parts[0]))
        if len(parts) == 3:
            return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise ConfigError(f"grid must be 'num' or 'lo:hi:num', got {text!r}")


def _fmt(v):
    return repr(float(v))


def cmd_mrs(args):
    from .mrs import mrs_table

    table = mrs_table(args.spec, args.quad_order, args.method)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["n", "a_n", "delta_n", "T(a_n)"])
    for n, a, d, T in table.rows(args.n_list):
        out.writerow([n, _fmt(a), _fmt(d), _fmt(T)])
    return 0


def cmd_recurrence(args):
    from .orthopoly import build_recurrence, orthonormality_residual, verification_rule

    table = build_recurrence(args.spec, n_max=args.n_max, order=args.order)
    text = table.to_json(args.out)
    if args.out is None:
        print(text)
    res = orthonormality_residual(table, verification_rule(table))
    print(f"n_max={table.n_max} L={table.L:.6g} M={table.discretization['M']} "
          f"orthonormality residual {res:.2e}", file=sys.stderr)
    return 0


def _coeffs_for(spec, f, n):
    from .operators import fourier_coeffs
    from .orthopoly import recurrence_table

    table = recurrence_table(spec, max(2 * n, 8))
    return fourier_coeffs(table, f, 2 * n)


def cmd_approx(args):
    from .functions import parse_target
    from .mrs import mrs_table
    from .operators import vp_eval, vp_mean

    f = parse_target(args.f, args.spec)
    vp = vp_mean(_coeffs_for(args.spec, f, args.n), args.n)
    x = _grid(args.grid, 1.2 * mrs_table(args.spec).a(2 * args.n))
    fx, vx, wx = f(x), vp_eval(vp, x), weight(args.spec, x)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["x", "f", "v_n", "w", "error"])
    for row in zip(x, fx, vx, wx, np.abs(fx - vx) * wx):
        out.writerow([_fmt(t) for t in row])
    return 0


def cmd_norm(args):
    from .functions import parse_target
    from .norms import NormRequest, weighted_norm
    from .operators import vp_eval, vp_mean

    f = parse_target(args.f, args.spec)
    g = f
    if args.of != "f":
        vp = vp_mean(_coeffs_for(args.spec, f, args.n), args.n)
        g = (lambda x: vp_eval(vp, x)) if args.of == "vp" else (lambda x: f(x) - vp_eval(vp, x))
    bps = f.breakpoints_within(1e3)
    atol = args.atol
    if atol is None:
        atol = 0.0
        if args.of != "f":
            # rounding-level errors cannot be refinement-stable in relative terms
            fn = weighted_norm(f, NormRequest(p=args.p, weight_mode=args.mode, n=args.n,
                                              L=args.L, breakpoints=bps), args.spec)
            atol = 1e-12 * fn.value
    req = NormRequest(p=args.p, weight_mode=args.mode, n=args.n, L=args.L, breakpoints=bps,
                      degree=1 if args.of == "f" else 2 * args.n, rtol=args.rtol, atol=atol)
    res = weighted_norm(g, req, args.spec)
    out = {"spec": args.spec.to_dict(), "f": args.f, "of": args.of, "n": args.n,
           "p": "inf" if args.p == math.inf else args.p, "mode": args.mode}
    out.update(res.to_dict())
    print(json.dumps(out, indent=1, default=str))
    return 0


def cmd_run(args):
    from .harness import exit_code, load_config, run_all

    config = load_config(args.config) if args.config else {}
    if args.workers is not None:
        config["workers"] = args.workers
    reports = run_all(config, args.out, emit_plots_data=args.emit_plots_data)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        if not r.gated:
            status = "INFO"
        line = f"{status:4s}  {r.experiment:22s} {r.variant:22s} {r.weight:10s}"
        print(f"{line} {r.runtime_s:7.1f}s" + (f"  {r.error}" if r.error else ""))
    return exit_code(reports)


def build_parser():
    ap = argparse.ArgumentParser(prog="vpx", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mrs", help="MRS numbers as CSV")
    p.add_argument("--spec", type=_spec, required=True, help="preset name or TOML/JSON file")
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--quad-order", type=int, default=20)
    p.add_argument("--method", choices=("graded", "chebyshev"), default="graded")
    p.set_defaults(func=cmd_mrs)

    p = sub.add_parser("recurrence", help="recurrence table as JSON")
    p.add_argument("--spec", type=_spec, required=True)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--order", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_recurrence)

    p = sub.add_parser("approx", help="tabulate v_n(f) on a grid as CSV")
    p.add_argument("--spec", type=_spec, required=True)
    p.add_argument("--f", required=True, help="e.g. builtin:sin, gauss-bump(0,1)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", default="201", help="'num' or 'lo:hi:num'")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("norm", help="weighted L^p norm as JSON")
    p.add_argument("--spec", type=_spec, required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--p", type=_p, default=2.0)
    p.add_argument("--mode", default="w",
                   choices=("w", "w_over_T4", "T4_w", "w_over_sqrtT", "T34_w"))
    p.add_argument("--of", choices=("f", "vp", "error"), default="f",
                   help="norm of f, of v_n(f) or of f - v_n(f)")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--L", type=float, default=None, help="truncation radius")
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=None,
                   help="absolute refinement slack; default 1e-12 ||f m|| for vp and error")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("run", help="run the experiment sweep")
    p.add_argument("--config", default=None, help="TOML or JSON; defaults built in")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--emit-plots-data", action="store_true")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (VpxError, ConfigError) as exc:
        print(f"vpx: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
