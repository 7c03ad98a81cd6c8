"""Command-line interface: ``chebylab {analyze,norm-info,chebyshev-scan,plot-data}``."""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from chebylab import __version__
from chebylab.config import ConfigError, load_scenario
from chebylab.harness import evaluate_conditions, theorem4_scan
from chebylab.normed_space import (
    NormSpec,
    dual_is_strictly_convex,
    is_smooth_at,
    is_strictly_convex,
)
from chebylab.report import all_remarks, build_report, dumps, points_csv, table_csv
from chebylab.sets import is_chebyshev_on_grid

EXIT_OK = 0
EXIT_HYPOTHESIS = 1
EXIT_VIOLATION = 2
EXIT_INPUT = 3

PLOT_COUNTS = 41


class InputError(Exception):
    pass


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _load(args):
    try:
        return load_scenario(args.config, seed=args.seed, tol=args.tol)
    except ConfigError as exc:
        raise InputError(f"{args.config}: {exc}") from None


def cmd_analyze(args) -> int:
    cfg, sc = _load(args)
    start = time.perf_counter()
    ev = evaluate_conditions(sc)
    t4 = theorem4_scan(sc, ev)
    remarks = all_remarks(ev)
    duration = time.perf_counter() - start if args.timing else None
    doc = build_report(cfg.echo(), ev, t4, remarks, duration)
    text = dumps(doc)
    out = args.out or cfg.outputs.report
    if out:
        out = Path(out)
        _write(out, text)
        csv_path = Path(cfg.outputs.csv) if (cfg.outputs.csv and not args.out) else out.with_suffix(".csv")
        _write(csv_path, points_csv(doc["points"]))
    else:
        sys.stdout.write(text)
    status = ev.verdict.status
    print(f"{sc.name}: {status}; theorem4 {t4.status}", file=sys.stderr)
    if status == "VIOLATION" or t4.status == "VIOLATION":
        return EXIT_VIOLATION
    if status == "HYPOTHESIS_FAILED":
        return EXIT_HYPOTHESIS
    return EXIT_OK


def _parse_p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise InputError(f"p must be a number >= 1 or 'inf', got {text!r}") from None
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {text}")
    return p


def _fmt(v) -> str:
    return "[" + ", ".join(f"{float(t):.6g}" for t in np.asarray(v).ravel()) + "]"


def cmd_norm_info(args) -> int:
    p = _parse_p(args.p)
    dim = args.dim
    if dim < 1:
        raise InputError("dim must be positive")
    norm = NormSpec.max_norm(dim) if math.isinf(p) else NormSpec.lp(p, dim)
    lines = [f"norm: {'max' if math.isinf(p) else f'lp(p={p:g})'} on R^{dim}",
             f"dual index q: {'inf' if math.isinf(norm.q) else f'{norm.q:g}'}"]
    sc = is_strictly_convex(norm, seed=args.seed)
    lines.append(f"strictly convex: {'yes' if sc.strictly_convex else 'no'}")
    if sc.witness is not None:
        u, v = sc.witness
        lines.append(f"  equality witness: u={_fmt(u)} v={_fmt(v)}")
    lines.append(f"dual strictly convex: {'yes' if dual_is_strictly_convex(norm) else 'no'}")
    if args.point is not None:
        x = np.array([float(t) for t in args.point.split(",")])
        if x.size != dim:
            raise InputError(f"--point needs {dim} comma-separated coordinates")
        if not np.any(x):
            raise InputError("--point must be nonzero")
        verdict = is_smooth_at(norm, x)
        lines.append(f"smooth at {_fmt(x)}: {'yes' if verdict.smooth else 'no'}")
        label = "support functional" if len(verdict.functionals) == 1 else "extreme support functionals"
        lines.append(f"{label}:")
        lines.extend(f"  f={_fmt(f)}" for f in verdict.functionals)
    print("\n".join(lines))
    return EXIT_OK


def _join_points(P) -> str:
    return ";".join(" ".join(repr(float(t)) for t in row) for row in np.atleast_2d(P))


def cmd_chebyshev_scan(args) -> int:
    _, sc = _load(args)
    verdict = is_chebyshev_on_grid(sc.set, sc.norm, sc.grid)
    text = table_csv(("point", "minimizer_count", "minimizers"),
                     [(w[0], len(w[1]), _join_points(w[1])) for w in verdict.witnesses])
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    print(f"{sc.name}: {verdict.status} ({len(verdict.witnesses)} witness(es))", file=sys.stderr)
    return EXIT_OK if verdict.chebyshev else EXIT_HYPOTHESIS


def cmd_plot_data(args) -> int:
    from chebylab.harness import check_condition_v

    _, sc = _load(args)
    if sc.norm.dim != 2:
        raise InputError(f"plot-data needs a 2-dimensional scenario, got dim {sc.norm.dim}")
    out = Path(args.out or ".")
    axes = [np.linspace(lo, hi, args.counts) for lo, hi in sc.bbox]
    L = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    d = sc.set.values(L, sc.norm)
    _write(out / "dK_grid.csv", table_csv(("x0", "x1", "distance"),
                                          [(p[0], p[1], v) for p, v in zip(L, d)]))
    rows = []
    for i, x in enumerate(sc.grid):
        res = sc.set.nearest(x, sc.norm)
        if res.distance <= sc.tolerances.convexity_tol:
            continue
        est = check_condition_v(sc, x, res, str(i))
        rows.append((i, x[0], x[1], res.distance, est.value, est.converged))
    _write(out / "condv_grid.csv", table_csv(
        ("index", "x0", "x1", "distance", "cond_v", "converged"), rows))
    mins = []
    for p in L:
        res = sc.set.nearest(p, sc.norm)
        for k, m in enumerate(res.minimizers):
            mins.append((p[0], p[1], k, m[0], m[1]))
    _write(out / "minimizers.csv", table_csv(("x0", "x1", "k", "m0", "m1"), mins))
    print(f"wrote dK_grid.csv, condv_grid.csv, minimizers.csv to {out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chebylab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"chebylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, out_help):
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--tol", type=float, help="override tolerances.limit_tol")

    p = sub.add_parser("analyze", help="evaluate hypotheses and conditions, write a report")
    scenario_args(p, "report JSON path (per-point CSV goes next to it); stdout if omitted")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock duration (makes the report non-reproducible)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("norm-info", help="geometry of an lp norm")
    p.add_argument("--p", required=True, help="exponent >= 1 or 'inf'")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--point", help="comma-separated point for the smoothness check")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_norm_info)

    p = sub.add_parser("chebyshev-scan", help="uniqueness of nearest points on the grid")
    scenario_args(p, "witness CSV path; stdout if omitted")
    p.set_defaults(func=cmd_chebyshev_scan)

    p = sub.add_parser("plot-data", help="CSV fields for external plotting (2-D only)")
    scenario_args(p, "output directory (default: current directory)")
    p.add_argument("--counts", type=int, default=PLOT_COUNTS, help="lattice points per axis")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
