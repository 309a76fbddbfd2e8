"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 usage or domain error,
3 numerical convergence failure.  Data goes to stdout (or --output),
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys

import numpy as np

from skewbm import montecarlo as mc
from skewbm import validation
from skewbm.errors import ConvergenceError, DomainError
from skewbm.excursion_law import RankedHeightQuery, ranked_height_tail
from skewbm.first_passage import DEFAULT_QUAD_TOL, cdf_function, evaluate_curve, log_grid
from skewbm.kernels import SeriesControl

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONVERGENCE = 0, 1, 2, 3


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _table(columns, rows, fmt, meta=None) -> str:
    if fmt == "json":
        doc = dict(meta or {})
        doc["columns"] = list(columns)
        doc["rows"] = [[float(v) if not isinstance(v, (int, np.integer)) else int(v) for v in r]
                       for r in rows]
        return json.dumps(doc) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(args):
    if args.log_grid:
        return log_grid(args.t_min, args.t_max, args.points)
    if not (0 < args.t_min < args.t_max) or args.points < 2:
        raise DomainError("need 0 < t-min < t-max and points >= 2")
    return np.linspace(args.t_min, args.t_max, args.points)


def _control(args) -> SeriesControl:
    return SeriesControl(args.tol, args.max_terms)


# ---------------------------------------------------------------------------
# subcommands

def cmd_density(args) -> int:
    ctrl = _control(args)
    t = _grid(args)
    dens = evaluate_curve(args.alpha, args.x, args.y, t, "density", ctrl, args.quad_tol)
    cdf = evaluate_curve(args.alpha, args.x, args.y, t, "cdf", ctrl, args.quad_tol)
    bound = np.maximum(dens.error_bounds, cdf.error_bounds)
    rows = list(zip(t, dens.values, cdf.values, bound))
    meta = {"alpha": args.alpha, "x": args.x, "y": args.y}
    _emit(_table(("t", "density", "cdf", "tail_bound"), rows, args.format, meta), args.output)
    if args.plot:
        from skewbm.plotting import plot_density
        plot_density(t, dens.values, cdf.values, args.plot,
                     f"alpha={args.alpha:g}, x={args.x:g}, y={args.y:g}")
    return EXIT_OK


def cmd_excursions(args) -> int:
    ctrl = _control(args)
    rows = []
    for j, y, t in itertools.product(args.j, args.y, args.t):
        rows.append((j, y, t, ranked_height_tail(args.alpha, RankedHeightQuery(j, y, t), ctrl)))
    _emit(_table(("j", "y", "t", "tail"), rows, args.format, {"alpha": args.alpha}), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = mc.McConfig(args.sampler, args.step, args.horizon, args.paths, args.seed, args.workers)
    emp = mc.first_passage_sample(cfg, args.alpha, args.x, args.y)
    print(f"simulated {cfg.n_paths} paths, {emp.n_censored} censored at horizon {cfg.horizon:g}",
          file=sys.stderr)
    if args.emit == "samples":
        rows = [(v,) for v in emp.samples]
        meta = {"n_paths": cfg.n_paths, "n_censored": emp.n_censored, "horizon": cfg.horizon,
                "seed": cfg.seed}
        _emit(_table(("first_passage_time",), rows, args.format, meta), args.output)
        return EXIT_OK
    ctrl = _control(args)
    ks = mc.ks_distance(emp, cdf_function(args.alpha, args.x, args.y, cfg.horizon, ctrl))
    n = len(emp.samples)
    band = mc.ks_critical(n, level=0.01)
    cols = ("n_paths", "n_uncensored", "n_censored", "ks", "ks_critical_99")
    _emit(_table(cols, [(cfg.n_paths, n, emp.n_censored, ks, band)], args.format,
                 {"sampler": cfg.sampler, "alpha": args.alpha, "x": args.x, "y": args.y,
                  "step": cfg.step, "horizon": cfg.horizon, "seed": cfg.seed}),
          args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validation.run_suite(args.suite, seed=args.seed, workers=args.workers,
                                  alphas=args.alpha)
    text = report.to_json() + "\n" if args.format == "json" else "\n".join(report.lines()) + "\n"
    _emit(text, args.output)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_figure5(args) -> int:
    t = _grid(args)
    data = validation.figure5_data(args.alphas, t)
    rows = []
    for a in args.alphas:
        tt, up, down = data[a]
        rows.extend((a, *r) for r in zip(tt, up, down))
    cols = ("alpha", "t", "density_minus1_to_1", "density_1_to_minus1")
    _emit(_table(cols, rows, args.format), args.output)
    if args.plot:
        from skewbm.plotting import plot_crossings
        plot_crossings(data, args.plot)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _unit_interval(s):
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie strictly between 0 and 1, got {s}")
    return v


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _common_output(p, formats=("csv", "json")):
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--output", metavar="FILE", help="write data here instead of stdout")


def _series_flags(p):
    p.add_argument("--tol", type=float, default=1e-12, help="absolute series tolerance")
    p.add_argument("--max-terms", type=_positive_int, default=100_000)


def _grid_flags(p, t_min, t_max):
    p.add_argument("--t-min", type=float, default=t_min)
    p.add_argument("--t-max", type=float, default=t_max)
    p.add_argument("--points", type=_positive_int, default=200)
    p.add_argument("--log-grid", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewbm", description="First-passage and excursion-height laws of skew Brownian motion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="density and CDF of the first passage time T_y from x")
    p.add_argument("--alpha", type=_unit_interval, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=1.0)
    _grid_flags(p, 0.01, 10.0)
    _series_flags(p)
    p.add_argument("--quad-tol", type=float, default=DEFAULT_QUAD_TOL)
    _common_output(p)
    p.add_argument("--plot", metavar="FILE", help="also render the curves to an image file")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("excursions", help="P(M_j(t) > y) for the ranked excursion heights")
    p.add_argument("--alpha", type=_unit_interval, required=True)
    p.add_argument("--j", type=_positive_int, nargs="+", default=[1])
    p.add_argument("--y", type=float, nargs="+", required=True)
    p.add_argument("--t", type=float, nargs="+", required=True)
    _series_flags(p)
    _common_output(p)
    p.set_defaults(func=cmd_excursions)

    p = sub.add_parser("simulate", help="Monte Carlo first-passage times")
    p.add_argument("--sampler", choices=mc.SAMPLERS, default="skew-walk")
    p.add_argument("--alpha", type=_unit_interval, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--paths", type=_positive_int, default=50_000)
    p.add_argument("--step", type=float, default=0.02,
                   help="lattice spacing (skew-walk) or time step (excursion-flip)")
    p.add_argument("--horizon", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=mc.DEFAULT_SEED)
    p.add_argument("--emit", choices=("samples", "summary"), default="summary")
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="threads (default: SKEWBM_THREADS or 1)")
    _series_flags(p)
    _common_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("--suite", choices=[*validation.SUITES, "all"], default="all")
    p.add_argument("--seed", type=int, default=mc.DEFAULT_SEED)
    p.add_argument("--alpha", type=_unit_interval, nargs="+", default=None,
                   help="alphas for the ordering suite")
    p.add_argument("--workers", type=_positive_int, default=None)
    _common_output(p, ("text", "json"))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figure5", help="densities of -1 -> 1 and 1 -> -1 crossings per alpha")
    p.add_argument("--alphas", type=_unit_interval, nargs="+", default=list(validation.FIGURE_ALPHAS))
    _grid_flags(p, 0.01, 10.0)
    _common_output(p)
    p.add_argument("--plot", metavar="FILE", help="also render the panels to an image file")
    p.set_defaults(func=cmd_figure5)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 0) is None:
        args.workers = mc.default_workers()
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
