"""Command-line entry points: mesh generation, experiment sweeps, stability
diagnostics and convergence plots.

Exit codes: 0 success, 2 solver failure, 3 threshold violation with --check.
"""

import argparse
import csv
import os
import sys

from .experiments import (ExperimentConfig, ExperimentError, check_convergence,
                          run_convergence, run_cook,
                          run_stability_diagnostics, stability_csv, write_csv)
from .mesh import build_cook_mesh, build_unit_square_mesh, dump_mesh
from .plotting import PlotSpec, Series, emit_plot, table_series
from .solvers import SingularSystemError, SizeCapError


def _add_run_overrides(parser):
    parser.add_argument("--config", help="key=value config file with a [run] section")
    parser.add_argument("--problem",
                        choices=["compressible", "incompressible",
                                 "nearly_incompressible", "cook"])
    parser.add_argument("--k", type=int, dest="k")
    parser.add_argument("--mesh-sizes", dest="mesh_sizes",
                        help="space or comma separated subdivision counts")
    parser.add_argument("--mu", type=float)
    parser.add_argument("--lambda", type=float, dest="lam")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--young", type=float)
    parser.add_argument("--poisson", type=float)
    parser.add_argument("--bc-mode", dest="bc_mode", choices=["weak", "strong"])
    parser.add_argument("--formulation",
                        choices=["compressible", "nearly_incompressible"])
    parser.add_argument("--deterministic", action="store_true", default=None,
                        help="pin ordering and formatting for byte-stable reruns")
    parser.add_argument("--out", dest="out_dir", help="output directory")


def _config_from_args(args):
    overrides = {}
    for key in ("problem", "k", "mesh_sizes", "mu", "lam", "gamma", "young",
                "poisson", "bc_mode", "formulation", "out_dir",
                "deterministic"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = str(val) if not isinstance(val, str) else val
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    kwargs = {}
    for key, cast in (("problem", str), ("k", int), ("mu", float),
                      ("lam", float), ("gamma", float), ("young", float),
                      ("poisson", float), ("bc_mode", str),
                      ("formulation", str), ("out_dir", str)):
        val = getattr(args, key, None)
        if val is not None:
            kwargs["order" if key == "k" else key] = cast(val)
    if getattr(args, "mesh_sizes", None):
        kwargs["mesh_sizes"] = tuple(
            int(t) for t in args.mesh_sizes.replace(",", " ").split())
    if getattr(args, "deterministic", None):
        kwargs["deterministic"] = True
    return ExperimentConfig(**kwargs)


def cmd_mesh(args):
    builder = build_unit_square_mesh if args.shape == "square" else build_cook_mesh
    dump_mesh(builder(args.n), args.out)
    print(f"wrote {args.shape} mesh (n={args.n}) to {args.out}")
    return 0


def cmd_run(args):
    config = _config_from_args(args)
    os.makedirs(config.out_dir, exist_ok=True)
    if config.problem == "nearly_incompressible":
        config.problem = "cook"
        config.formulation = "nearly_incompressible"
    if config.problem == "cook":
        table = run_cook(config)
        stem = f"cook_k{config.order}_{config.bc_mode}_{config.formulation}"
        columns = ["qoi"]
    else:
        table = run_convergence(config)
        stem = f"{config.problem}_k{config.order}_{config.bc_mode}"
        columns = ["err_l2", "err_h1", "err_triple"]
        if config.problem == "incompressible":
            columns.append("err_p_l2")
    csv_path = os.path.join(config.out_dir, stem + ".csv")
    write_csv(table.to_csv(), csv_path)
    svg_path = os.path.join(config.out_dir, stem + ".svg")
    ref = (1.0, 2.0) if config.order == 1 else (2.0, 3.0)
    emit_plot([table_series(table, c) for c in columns],
              PlotSpec(title=stem, ref_slopes=ref if columns != ["qoi"] else ()),
              svg_path)
    print(f"wrote {csv_path} and {svg_path}")
    for row in table.rows:
        bits = [f"h_max={row.h_max:.6g}", f"dofs={row.dofs}"]
        if row.report is not None:
            bits.append(f"err_l2={row.report.l2_error:.6g}")
            bits.append(f"err_h1={row.report.h1_semi_error:.6g}")
            if row.slope_h1 is not None:
                bits.append(f"slope_h1={row.slope_h1:.3f}")
        if row.qoi is not None:
            bits.append(f"tip={row.qoi:.8g}")
        print("  " + " ".join(bits))
    if args.check:
        violations = check_convergence(table, config)
        for v in violations:
            print(f"CHECK FAILED: {v}", file=sys.stderr)
        if violations:
            return 3
    return 0


def cmd_diagnose(args):
    config = _config_from_args(args)
    os.makedirs(config.out_dir, exist_ok=True)
    reports = run_stability_diagnostics(config)
    path = os.path.join(config.out_dir,
                        f"stability_{config.problem}_k{config.order}.csv")
    write_csv(stability_csv(config, reports), path)
    print(f"wrote {path}")
    for rep in reports:
        print(f"  h_max={rep.h_max:.6g} beta_h={rep.beta_h:.6g} "
              f"korn_h={rep.korn_const_h:.6g}")
    return 0


def cmd_plot(args):
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    series = []
    for column in args.y:
        pts = [(float(r[args.x]), float(r[column]))
               for r in rows if r.get(column)]
        if pts:
            series.append(Series(label=column, x=tuple(p[0] for p in pts),
                                 y=tuple(p[1] for p in pts)))
    emit_plot(series, PlotSpec(title=os.path.basename(args.csv),
                               xlabel=args.x,
                               ref_slopes=tuple(args.ref_slopes or ())),
              args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elastweak",
        description="2D elasticity solver with weakly imposed boundary "
                    "conditions: meshes, convergence studies, diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mesh = sub.add_parser("mesh", help="generate a mesh and dump it as text")
    p_mesh.add_argument("--shape", choices=["square", "cook"], required=True)
    p_mesh.add_argument("--n", type=int, required=True)
    p_mesh.add_argument("--out", required=True)
    p_mesh.set_defaults(func=cmd_mesh)

    p_run = sub.add_parser("run", help="run a convergence or benchmark sweep")
    _add_run_overrides(p_run)
    p_run.add_argument("--check", action="store_true",
                       help="exit 3 when slope thresholds are violated")
    p_run.set_defaults(func=cmd_run)

    p_diag = sub.add_parser("diagnose", help="inf-sup and Korn diagnostics")
    _add_run_overrides(p_diag)
    p_diag.set_defaults(func=cmd_diagnose)

    p_plot = sub.add_parser("plot", help="log-log SVG plot from a sweep CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--x", default="h_max")
    p_plot.add_argument("--y", action="append", required=True,
                        help="column to plot (repeatable)")
    p_plot.add_argument("--ref-slopes", type=float, action="append")
    p_plot.add_argument("--out", required=True)
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ExperimentError, SingularSystemError, SizeCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
