"""Command-line front end: ``cuspcmc {solve,foliate,validate,isoperimetric}``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.  Every
CSV starts with ``# cuspcmc <version> config_sha256=<hash>``; numbers are
written with ``repr`` so identical configurations give identical bytes.
"""

import argparse
import csv
import io
import math
import os
import sys

from . import __version__
from .config import config_hash, load_config
from .errors import ConfigError, ConvergenceError, CuspError
from .isoperimetric import compare_profiles, largest_winning_volume
from .solver import build_foliation, jacobi_min_eigenvalue, solve_leaf
from .validation import run_checks

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

LEAF_COLUMNS = ["r", "delta", "n2_u", "residual", "iterations", "jacobi_min", "method", "status"]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    return str(value)


def write_csv(path, cfg, header, rows):
    buf = io.StringIO()
    buf.write(f"# cuspcmc {__version__} config_sha256={config_hash(cfg)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def _leaf_row(leaf, jacobi):
    return [leaf.r0, leaf.delta, leaf.n2, leaf.residual, leaf.iterations, jacobi, leaf.method, "converged"]


def cmd_solve(cfg, out, threads):
    g = cfg.build_metric()
    s = cfg.solver
    try:
        leaf = solve_leaf(g, s.r0, s.method, tol=s.tol, max_iter=s.max_iter, eta=s.eta)
    except ConvergenceError as exc:
        history = exc.residual_history
        row = [s.r0, None, None, history[-1] if history else None, len(history), None, s.method, "diverged"]
        path = write_csv(os.path.join(out, "leaf.csv"), cfg, LEAF_COLUMNS, [row])
        print(f"error: {exc}", file=sys.stderr)
        print(f"wrote {path}")
        return EXIT_NUMERICAL
    jac = jacobi_min_eigenvalue(g, leaf)
    path = write_csv(os.path.join(out, "leaf.csv"), cfg, LEAF_COLUMNS, [_leaf_row(leaf, jac)])
    print(f"leaf r0={leaf.r0:g}: delta={leaf.delta:.6e} N2(u)={leaf.n2:.6e} "
          f"residual={leaf.residual:.3e} iterations={leaf.iterations} jacobi_min={jac:.6e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_foliate(cfg, out, threads):
    g = cfg.build_metric()
    f, s = cfg.study.foliation, cfg.solver
    rep = build_foliation(g, f.r_min, f.r_max, f.steps, s.tol, s.method, s.max_iter, s.eta, threads)
    rows = []
    for r, leaf, lam in zip(rep.r_grid, rep.leaves, rep.stability_eigenvalues):
        if leaf is None:
            rows.append([float(r), None, None, None, None, None, s.method, "failed"])
        else:
            rows.append(_leaf_row(leaf, float(lam)))
    leaf_path = write_csv(os.path.join(out, "foliation.csv"), cfg, LEAF_COLUMNS, rows)
    summary = []
    for name, fit in (("decay_slope_u", rep.decay_fit_u), ("decay_slope_delta", rep.decay_fit_delta)):
        summary.append([name, fit.slope, fit.slope_low, fit.slope_high, fit.points])
        summary.append([name.replace("slope", "prefactor"), fit.prefactor if fit.points else math.nan,
                        None, None, fit.points])
    lam = [float(v) for v in rep.stability_eigenvalues if math.isfinite(v)]
    summary.append(["monotonicity_min", rep.monotonicity, None, None, len(rep.solved)])
    summary.append(["stability_min", min(lam) if lam else math.nan, None, None, len(lam)])
    summary.append(["failed_leaves", float(len(rep.failures)), None, None, len(rep.r_grid)])
    sum_path = write_csv(os.path.join(out, "foliation_summary.csv"), cfg,
                         ["quantity", "value", "ci95_low", "ci95_high", "points"], summary)
    fu, fd = rep.decay_fit_u, rep.decay_fit_delta
    print(f"{len(rep.solved)}/{len(rep.r_grid)} leaves, min d_r(r+u) = {rep.monotonicity:.6f}")
    print(f"slope log N2(u): {fu.slope:.4f} [{fu.slope_low:.4f}, {fu.slope_high:.4f}]")
    print(f"slope log|delta|: {fd.slope:.4f} [{fd.slope_low:.4f}, {fd.slope_high:.4f}]")
    for r, msg in rep.failures.items():
        print(f"leaf r={r:g} failed: {msg}", file=sys.stderr)
    print(f"wrote {leaf_path}\nwrote {sum_path}")
    return EXIT_NUMERICAL if rep.failures else EXIT_OK


def cmd_validate(cfg, out, threads):
    checks = run_checks(cfg, threads)
    rows = [[c.name, c.status, c.value, c.threshold, c.detail] for c in checks]
    path = write_csv(os.path.join(out, "validate.csv"), cfg,
                     ["check", "status", "value", "threshold", "detail"], rows)
    for c in checks:
        print(f"{c.status:4s} {c.name:24s} value={c.value:.6g} threshold={c.threshold:.6g} {c.detail}")
    failed = [c for c in checks if c.status == "FAIL"]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks without failure")
    print(f"wrote {path}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_isoperimetric(cfg, out, threads):
    if cfg.slice.n != 1:
        raise ConfigError("isoperimetric comparison needs slice.n = 1")
    g = cfg.build_metric()
    samples = compare_profiles(cfg.study.v_grid, g, method=cfg.solver.method, tol=cfg.solver.tol)
    families = ["slice_region", "cmc_leaf_region", "geodesic_disk"]
    header = ["v"] + [f"{f}_{q}" for f in families for q in ("length", "H")] + ["winner", "h_bound_ok"]
    rows = []
    for smp in samples:
        row = [smp.v]
        for fam in families:
            c = smp.candidates.get(fam)
            row += [c.length, c.H] if c else [None, None]
        rows.append(row + [smp.best, smp.h_bound_ok])
    path = write_csv(os.path.join(out, "isoperimetric.csv"), cfg, header, rows)
    lead = "slice_region" if g.is_model else "cmc_leaf_region"
    for smp in samples:
        print(f"v={smp.v:g}: winner {smp.best} length={smp.winner.length:.10g} H={smp.winner.H:.10g}")
    print(f"largest sampled v won by {lead}: {largest_winning_volume(samples, lead)}")
    print(f"wrote {path}")
    return EXIT_OK if all(s.h_bound_ok for s in samples) else EXIT_NUMERICAL


COMMANDS = {
    "solve": (cmd_solve, "solve one CMC leaf at solver.r0"),
    "foliate": (cmd_foliate, "solve leaves over study.foliation and fit decay rates"),
    "validate": (cmd_validate, "run the invariant suite"),
    "isoperimetric": (cmd_isoperimetric, "compare small-volume candidate regions (n = 1)"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cuspcmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cuspcmc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (default: output.directory)")
        p.add_argument("--threads", type=int, default=1, metavar="N", help="parallel leaf solves")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.output.directory
        return COMMANDS[args.command][0](cfg, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CuspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
