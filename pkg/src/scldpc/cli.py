"""Command-line interface: ``scldpc <command> ...``.

Exit codes: 0 on success, 1 on numeric failure (a JSON diagnostic is printed),
2 on invalid usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting
from ._numeric import BracketError, ConvergenceError
from .de import DEConfig, bp_threshold_coupled, variant_params
from .distance import ss_exponent, ss_growth_curve
from .ensemble import (ChainParams, RegularEnsemble, design_rate_chain, design_rate_smoothed,
                       h_landscape, stable_fp, thresholds_regular)
from .exit import (area_under_bp_exit, ebp_curve, map_threshold_via_area, steep_branch,
                   wiggle_report)
from .fixedpoint import (InterpolatedFamily, construct_one_sided_fp, eps_star_bound_check,
                         family_area, fp_diagnostics, phase_bounds)
from .io import RunManifest, Timer, csv_text, default_threads, json_text, write_text

EXIT_COLUMNS = ["chi", "eps", "h_ebp", "converged", "iterations", "x_max", "x_edge"]
OUTPUT_KEYS = ("csv", "json", "svg", "outdir", "record_time", "threads", "func")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def _ensemble(args) -> RegularEnsemble:
    return RegularEnsemble(args.l, args.r)


def _params(args, L: int):
    variant = args.variant or ("smoothed" if args.w is not None else "chain")
    return variant_params(_ensemble(args), L, args.w, variant)


def _chi_grid(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("--chi-grid needs at least 2 points")
    return np.arange(1, n + 1) / (n + 1)


def _manifest(args, tolerances: dict) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in OUTPUT_KEYS}
    return RunManifest(args.command, params, tolerances, seed=getattr(args, "seed", None))


def _emit(args, manifest, summary, header=None, rows=None, figure=None, timer=None) -> None:
    if timer is not None and args.record_time:
        manifest.wall_clock = timer.elapsed
    if args.csv and header is not None:
        write_text(args.csv, csv_text(header, rows, manifest))
    text = json_text(summary, manifest)
    if args.json:
        write_text(args.json, text)
    if args.svg and figure is not None:
        figure(args.svg)
    sys.stdout.write(text)


def _curve_rows(curve):
    return [[p.chi, p.eps, p.h_ebp, p.converged, p.iterations, p.x_max, p.x_edge]
            for p in curve.points]


def _map_threads(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # results come back in input order


# ---------------------------------------------------------------- commands

def cmd_thresholds(args) -> None:
    e = _ensemble(args)
    with Timer() as t:
        rep = thresholds_regular(e)
        eps_area = map_threshold_via_area(e)
        summary = {"l": e.l, "r": e.r, "eps_bp": rep.eps_bp, "eps_map": rep.eps_map,
                   "eps_map_area": eps_area, "x_bp": rep.x_bp, "x_map": rep.x_map,
                   "design_rate": float(e.rate)}
        rows = []
        if args.L:
            cfg = DEConfig(max_iter=args.max_iter)
            Ls = sorted(set(args.L))
            params = [_params(args, L) for L in Ls]
            vals = _map_threads(lambda p: bp_threshold_coupled(p, cfg, args.bisect_tol),
                                params, args.threads)
            coupled = []
            for L, p, v in zip(Ls, params, vals):
                rate = design_rate_chain(p) if isinstance(p, ChainParams) else \
                    design_rate_smoothed(p)
                coupled.append({"L": L, "eps_bp": v, "design_rate": float(rate)})
                rows.append([L, v, float(rate)])
            summary["coupled"] = coupled
            summary["variant"] = type(params[0]).__name__
    header = ["L", "eps_bp", "design_rate"] if rows else ["eps_bp", "eps_map", "eps_map_area",
                                                           "design_rate"]
    if not rows:
        rows = [[rep.eps_bp, rep.eps_map, eps_area, float(e.rate)]]
    _emit(args, _manifest(args, {"root": rep.tol, "bisect": args.bisect_tol}), summary,
          header, rows, timer=t)


def _curve_for(args):
    params = _ensemble(args) if args.L is None else _params(args, args.L)
    return ebp_curve(params, _chi_grid(args.chi_grid), DEConfig(tol=args.tol))


def cmd_ebp(args) -> None:
    with Timer() as t:
        curve = _curve_for(args)
    eps, h = curve.column("eps"), curve.column("h_ebp")
    summary = {"descriptor": curve.descriptor, "n_points": len(curve.points),
               "all_converged": bool(all(p.converged for p in curve.points)),
               "eps_min": float(eps.min()), "eps_max": float(eps.max())}
    _emit(args, _manifest(args, {"de": args.tol}), summary, EXIT_COLUMNS, _curve_rows(curve),
          lambda path: plotting.exit_curve(eps, h, path, title=str(curve.descriptor)), t)


def cmd_wiggle(args) -> None:
    if args.L is None:
        raise ValueError("wiggle needs a coupled ensemble (--L)")
    e = _ensemble(args)
    with Timer() as t:
        curve = _curve_for(args)
        band = tuple(args.band) if args.band else steep_branch(curve, e)
        rep = wiggle_report(curve, band)
    summary = {"descriptor": curve.descriptor, "eps_min": rep.eps_min, "eps_max": rep.eps_max,
               "amplitude": rep.amplitude, "chi_band": list(rep.chi_band),
               "n_points": rep.n_points, "wiggle_count": rep.wiggle_count}
    inside = [p for p in curve.points if band[0] <= p.chi <= band[1]]
    _emit(args, _manifest(args, {"de": args.tol}), summary, EXIT_COLUMNS, _curve_rows(curve),
          lambda path: plotting.wiggle([p.chi for p in inside], [p.eps for p in inside], path,
                                       band, str(curve.descriptor)), t)


def cmd_fp(args) -> None:
    with Timer() as t:
        fp = construct_one_sided_fp(args.l, args.r, args.w, args.Lp, args.chi,
                                    strict=args.strict)
        diag = fp_diagnostics(fp)
        summary = {"eps_star": fp.eps_star, "outcome": fp.outcome, "iterations": fp.iterations,
                   "eps_spread": fp.eps_spread, "residual": fp.residual,
                   "length_bound": fp.length_bound, "x": fp.values,
                   "diagnostics": {"ok": diag.ok, "x_u": diag.x_u, "x_s": diag.x_s,
                                   "spacing_slack": diag.spacing_slack,
                                   "transition_count": diag.transition_count,
                                   "violations": diag.violations}}
        if args.L is not None:
            fam = InterpolatedFamily(fp, args.L)
            area = family_area(fam)
            bound = eps_star_bound_check(fp, args.L)
            phases = phase_bounds(fam)
            summary["family"] = {"L": args.L, "area": area.A, "area_bound": area.bound,
                                 "area_residual": area.residual,
                                 "area_within_bound": area.within_bound,
                                 "eps_star_gap": bound.observed, "eps_star_bound": bound.bound,
                                 "eps_star_bound_formal": bound.formal,
                                 "phase_bounds_ok": [phases.phase1_ok, phases.phase2_ok,
                                                     phases.phase3_ok],
                                 "max_alpha_step": phases.max_step}
    idx = np.arange(-fp.Lp, 1)
    rows = [[int(i), float(v)] for i, v in zip(idx, fp.values)]
    x_s = stable_fp(fp.ensemble, fp.eps_star) if fp.eps_star < 1 else 1.0
    _emit(args, _manifest(args, {"step": 1e-11}), summary, ["i", "x"], rows,
          lambda path: plotting.constellation(fp.values, path, idx,
                                              f"eps*={fp.eps_star:.6f}", x_s), t)


def cmd_area(args) -> None:
    e = _ensemble(args)
    with Timer() as t:
        rep = thresholds_regular(e)
        eps_area = map_threshold_via_area(e, args.quad_tol)
        grid = np.linspace(rep.eps_bp, 1.0, args.points + 1)[1:]
        rows = [[float(u), area_under_bp_exit(e, float(u), args.quad_tol)] for u in grid]
    summary = {"eps_map_area": eps_area, "eps_map_poly": rep.eps_map,
               "difference": abs(eps_area - rep.eps_map), "design_rate": float(e.rate)}
    _emit(args, _manifest(args, {"quad": args.quad_tol}), summary, ["eps", "area"], rows,
          lambda path: plotting.landscape([r[0] for r in rows], [r[1] - float(e.rate)
                                                                  for r in rows], path,
                                          {"MAP": eps_area}, "area minus rate"), t)


def cmd_ss(args) -> None:
    e = _ensemble(args)
    with Timer() as t:
        rep = ss_exponent(e)
        omegas = np.linspace(0, 1, args.points + 2)[1:-1]
        pts = ss_growth_curve(e, omegas)
    summary = {"x_hat": rep.x_hat, "omega_hat": rep.omega_hat, "l_omega_hat": rep.l_omega_hat,
               "b_at_root": rep.b_at_root}
    rows = [[p.omega, p.exponent, p.x] for p in pts if p.ok]
    _emit(args, _manifest(args, {"root": 1e-14}), summary, ["omega", "exponent", "x"], rows,
          lambda path: plotting.growth([r[0] for r in rows], [r[1] for r in rows], path,
                                       rep.omega_hat, f"({e.l},{e.r})"), t)


def cmd_hprops(args) -> None:
    e = _ensemble(args)
    with Timer() as t:
        land = h_landscape(args.eps, e)
        x = np.linspace(0, 1, args.points)
        h = e.h(x, args.eps)
    rows = [[float(a), float(b)] for a, b in zip(x, h)]
    points = {"x_u": land.x_u, "x_s": land.x_s, "x_*": land.x_star, "x^*": land.x_upstar}
    _emit(args, _manifest(args, {"root": 1e-12}), land.as_dict(), ["x", "h"], rows,
          lambda path: plotting.landscape(x, h, path, points, f"h(x), eps={args.eps}"), t)


def cmd_report(args) -> None:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    e = _ensemble(args)
    tag = f"{e.l}_{e.r}"
    rep = thresholds_regular(e)
    eps_mid = args.eps if args.eps is not None else 0.5 * (rep.eps_bp + rep.eps_map)
    common = dict(l=e.l, r=e.r, record_time=args.record_time, json=None)
    jobs = [
        (cmd_thresholds, dict(command="thresholds", L=None, w=None, variant=None,
                              bisect_tol=1e-7, max_iter=1_000_000, threads=1), "thresholds"),
        (cmd_ebp, dict(command="ebp", L=None, w=None, variant=None, chi_grid=args.chi_grid,
                       tol=1e-12), "ebp_uncoupled"),
        (cmd_ebp, dict(command="ebp", L=args.L, w=args.w, variant="smoothed",
                       chi_grid=args.chi_grid, tol=1e-12), f"ebp_L{args.L}_w{args.w}"),
        (cmd_hprops, dict(command="hprops", eps=eps_mid, points=401), "hprops"),
        (cmd_ss, dict(command="ss", points=200), "ss"),
        (cmd_area, dict(command="area", quad_tol=1e-12, points=100), "area"),
    ]
    written = []
    saved = sys.stdout
    try:
        for fn, extra, name in jobs:
            ns = argparse.Namespace(**common, **extra)
            ns.csv = str(out / f"{name}_{tag}.csv")
            ns.svg = str(out / f"{name}_{tag}.svg")
            ns.json = str(out / f"{name}_{tag}.json")
            sys.stdout = _Sink()
            fn(ns)
            written += [ns.csv, ns.json, ns.svg]
    finally:
        sys.stdout = saved
    sys.stdout.write(json.dumps({"outdir": str(out), "files": sorted(
        Path(p).name for p in written if Path(p).exists())}, indent=2) + "\n")


class _Sink:
    def write(self, _):
        return 0

    def flush(self):
        pass


# ---------------------------------------------------------------- parser

def _add_outputs(p) -> None:
    p.add_argument("--csv", metavar="PATH", help="write the CurveFile here")
    p.add_argument("--json", metavar="PATH", help="also write the JSON summary here")
    p.add_argument("--svg", metavar="PATH", help="render a figure here")
    p.add_argument("--record-time", action="store_true",
                   help="store wall-clock time in the manifest (breaks byte-identity)")


def _add_degrees(p) -> None:
    p.add_argument("l", type=int, help="variable degree")
    p.add_argument("r", type=int, help="check degree")


def _add_coupling(p, multiple: bool = False) -> None:
    if multiple:
        p.add_argument("--L", type=int, action="append", help="chain half-length (repeatable)")
    else:
        p.add_argument("--L", type=int, help="chain half-length")
    p.add_argument("--w", type=int, help="smoothing window; implies the smoothed ensemble")
    p.add_argument("--variant", choices=["chain", "smoothed"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scldpc", description="LDPC ensembles on the BEC.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("thresholds", help="BP and MAP thresholds")
    _add_degrees(p)
    _add_coupling(p, multiple=True)
    p.add_argument("--bisect-tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=100_000_000)
    p.add_argument("--threads", type=int, default=default_threads())
    _add_outputs(p)
    p.set_defaults(func=cmd_thresholds)

    for name, fn in (("ebp", cmd_ebp), ("wiggle", cmd_wiggle)):
        p = sub.add_parser(name, help="EBP EXIT curve" if name == "ebp" else "wiggle amplitude")
        _add_degrees(p)
        _add_coupling(p)
        p.add_argument("--chi-grid", type=int, default=400, help="number of entropy values")
        p.add_argument("--tol", type=float, default=1e-12)
        if name == "wiggle":
            p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                           help="entropy band (default: detected steep branch)")
        _add_outputs(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("fp", help="one-sided fixed point")
    _add_degrees(p)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--Lp", type=int, required=True)
    p.add_argument("--chi", type=float, required=True)
    p.add_argument("--L", type=int, help="also build the interpolated family on [-L, L]")
    p.add_argument("--strict", action="store_true", help="enforce the chain-length bound")
    _add_outputs(p)
    p.set_defaults(func=cmd_fp)

    p = sub.add_parser("area", help="MAP threshold from the area under the BP EXIT curve")
    _add_degrees(p)
    p.add_argument("--quad-tol", type=float, default=1e-12)
    p.add_argument("--points", type=int, default=100)
    _add_outputs(p)
    p.set_defaults(func=cmd_area)

    p = sub.add_parser("ss", help="stopping-set growth exponent")
    _add_degrees(p)
    p.add_argument("--points", type=int, default=200)
    _add_outputs(p)
    p.set_defaults(func=cmd_ss)

    p = sub.add_parser("hprops", help="fixed-point landscape of h at eps")
    p.add_argument("eps", type=float)
    _add_degrees(p)
    p.add_argument("--points", type=int, default=401)
    _add_outputs(p)
    p.set_defaults(func=cmd_hprops)

    p = sub.add_parser("report", help="write CSV, JSON and SVG for a standard set of analyses")
    p.add_argument("outdir")
    _add_degrees(p)
    p.add_argument("--L", type=int, default=16)
    p.add_argument("--w", type=int, default=3)
    p.add_argument("--eps", type=float, help="channel parameter for the h(x) landscape")
    p.add_argument("--chi-grid", type=int, default=200)
    p.add_argument("--record-time", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"scldpc: error: {exc}\n")
        return 2
    except (ConvergenceError, BracketError, RuntimeError, AssertionError, ArithmeticError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConvergenceError):
            diag["iterations"] = exc.iterations
        sys.stdout.write(json.dumps(diag, indent=2, sort_keys=True) + "\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"scldpc: error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
