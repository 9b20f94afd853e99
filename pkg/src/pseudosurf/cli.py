"""Command-line interface.

    pseudosurf family build cor33 --spec spec.json
    pseudosurf verify --sextet sextet.json
    pseudosurf catalog list | export NAME | run NAME --params k=v,...
    pseudosurf solve NAME --params ... --z0 EXPR --v0 EXPR
    pseudosurf curvature NAME --closed-form EXPR | --z0 EXPR ...

Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog
from .checks import characterization_check, run_fixture, verify_sextet
from .errors import PseudosurfError
from .families import PdeCoeffs, build, spec_from_dict
from .parser import parse_expr
from .report import Check, RunReport, render_report
from .zcr import sextet_from_document

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_params(text: str | None) -> dict:
    """``"lambda=1,m=0,ell=z^2"`` -> dict of strings."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not of the form name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_range(text: str) -> tuple[float, float]:
    try:
        a, b = (float(parse_expr(s.strip()).evalf()) for s in text.split(","))
    except Exception as exc:
        raise UsageError(f"range {text!r} must be 'a,b'") from exc
    return a, b


def _with_delta(params: dict, args) -> dict:
    if args.delta is not None:
        params = dict(params, delta=str(args.delta))
    return params


# ---------------------------------------------------------------------------
# commands


def cmd_family_build(args) -> RunReport:
    data = json.loads(Path(args.spec).read_text())
    data.setdefault("variant", args.variant)
    if args.variant and str(data["variant"]).lower() != args.variant.lower():
        raise UsageError(f"spec variant {data['variant']!r} does not match {args.variant!r}")
    if args.delta is not None:
        data["delta"] = args.delta
    spec = spec_from_dict(data)
    t0 = time.perf_counter()
    result = build(spec)
    report = RunReport("family build", inputs={"spec": data, "points": args.points, "tol": args.tol}, seed=args.seed)
    report.data = result.to_dict()
    if not args.no_verify:
        report.add(characterization_check(result.coeffs, result.sextet, n=args.points, seed=args.seed, tol=args.tol))
    report.timings["total"] = time.perf_counter() - t0
    return report


def cmd_verify(args) -> RunReport:
    data = json.loads(Path(args.sextet).read_text())
    if args.delta is not None:
        data["delta"] = args.delta
    f, rel = sextet_from_document(data)
    coeffs = None
    if "coefficients" in data:
        c = data["coefficients"]
        coeffs = PdeCoeffs(*(f.close(parse_expr(str(c[k]), f.functions)) for k in "ABC"), f.delta)
    t0 = time.perf_counter()
    report = verify_sextet(f, rel, coeffs, n=args.points, seed=args.seed, tol=args.tol)
    report.timings["total"] = time.perf_counter() - t0
    return report


def cmd_catalog_list(args) -> RunReport:
    report = RunReport("catalog list")
    report.data = {
        "fixtures": [
            {"name": n, "class": catalog.get_fixture(n).cls, "optional": catalog.get_fixture(n).optional,
             "title": catalog.get_fixture(n).title}
            for n in catalog.list_catalog()
        ]
    }
    return report


def cmd_catalog_export(args) -> RunReport:
    report = RunReport("catalog export", inputs={"fixture": args.name})
    report.data = catalog.export_fixture(args.name)
    return report


def cmd_catalog_run(args) -> RunReport:
    names = catalog.list_catalog(include_optional=False) if args.name == "all" else [args.name]
    params = _with_delta(parse_params(args.params), args)
    if len(names) == 1 and (params or not args.acceptance):
        return run_fixture(names[0], params, n=args.points, seed=args.seed, tol=args.tol)
    report = RunReport(
        "catalog run",
        inputs={"fixtures": names, "acceptance": True, "points": args.points, "tol": args.tol},
        seed=args.seed,
    )
    for name in names:
        for p in catalog.get_fixture(name).acceptance or [{}]:
            label = name + "(" + ",".join(f"{k}={v}" for k, v in p.items()) + ")/"
            report.extend(run_fixture(name, p, n=args.points, seed=args.seed, tol=args.tol), prefix=label)
    return report


def _solve(args, inst):
    from .numeric import solve_quasilinear

    if inst.coeffs is None:
        raise UsageError(f"{inst.name} is not of the form z_tt = A z_xx + B z_xt + C")
    return solve_quasilinear(
        inst.coeffs, args.z0, args.v0,
        x_range=parse_range(args.x_range), nx=args.nx, t_end=args.t_end,
        bc=args.bc, order=args.order, cfl=args.cfl,
    )


def _grid_stats(grid) -> dict:
    return {
        "nx": grid.nx, "nt": grid.nt, "hx": grid.hx, "ht": grid.ht, "t_end": float(grid.t[-1]),
        "max_abs_z": float(np.max(np.abs(grid.z))),
    }


def cmd_solve(args) -> RunReport:
    from .numeric import pde_residual, write_csv

    inst = catalog.instance(args.name, _with_delta(parse_params(args.params), args))
    report = RunReport(
        "solve",
        inputs={"fixture": args.name, "params": {k: str(v) for k, v in inst.params.items()}, "z0": args.z0,
                "v0": args.v0, "nx": args.nx, "t_end": args.t_end, "bc": args.bc, "order": args.order},
    )
    t0 = time.perf_counter()
    grid = _solve(args, inst)
    res = pde_residual(inst.coeffs, grid)[2:-2]
    worst = float(np.nanmax(np.abs(res)))
    report.add(Check("finite", bool(np.all(np.isfinite(grid.z))), {}))
    report.add(Check("pde-residual", worst <= args.residual_tol, {"max_abs": worst, "bound": args.residual_tol}))
    report.data = _grid_stats(grid)
    if args.csv:
        write_csv(args.csv, grid, stride=args.stride)
        report.data["csv"] = str(args.csv)
    report.timings["total"] = time.perf_counter() - t0
    return report


def cmd_curvature(args) -> RunReport:
    from .numeric import SolutionGrid, curvature_estimate, grid_residuals, sample_metric, write_csv

    inst = catalog.instance(args.name, _with_delta(parse_params(args.params), args))
    inputs = {"fixture": args.name, "params": {k: str(v) for k, v in inst.params.items()}}
    t0 = time.perf_counter()
    if args.closed_form:
        h = args.h
        grid = SolutionGrid.from_expression(args.closed_form, parse_range(args.x_range), parse_range(args.t_range), h)
        inputs.update(closed_form=args.closed_form, h=h, x_range=args.x_range, t_range=args.t_range)
    else:
        grid = _solve(args, inst)
        inputs.update(z0=args.z0, v0=args.v0, nx=args.nx, t_end=args.t_end, bc=args.bc)
    report = RunReport("curvature", inputs=inputs)
    f = inst.sextet
    ms = sample_metric(f, grid)
    cr = curvature_estimate(ms, grid, delta=f.delta)
    report.add(Check("curvature", cr.median_error <= args.k_tol, {**cr.to_dict(), "bound": args.k_tol}))
    gr = None
    try:
        gr = grid_residuals(f, grid)
        report.data["grid_residuals"] = gr.max_abs()
    except PseudosurfError as exc:
        report.data["grid_residuals"] = str(exc)
    report.data.update(_grid_stats(grid))
    report.data["masked_degenerate"] = int((~ms.mask).sum())
    if args.csv:
        write_csv(args.csv, grid, K=np.where(cr.mask, cr.K, np.nan), w=ms.w, residuals=gr, stride=args.stride)
        report.data["csv"] = str(args.csv)
    report.timings["total"] = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# parser


def _add_solver_args(p):
    p.add_argument("--z0", default="1 + 0.1*sin(x)", help="initial z(x) (expression in x)")
    p.add_argument("--v0", default="0", help="initial z_t(x)")
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--x-range", default="0,2*pi")
    p.add_argument("--bc", choices=("periodic", "dirichlet"), default="periodic")
    p.add_argument("--order", type=int, choices=(2, 4), default=4, help="spatial stencil order")
    p.add_argument("--cfl", type=float, default=0.4)
    p.add_argument("--csv", type=Path, help="write grid values as CSV")
    p.add_argument("--stride", type=int, default=1, help="CSV subsampling stride")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    common.add_argument("--points", type=int, default=200, help="sample points per check (default 200)")
    common.add_argument("--tol", type=float, default=1e-9, help="relative residual tolerance (default 1e-9)")
    common.add_argument("--delta", type=int, choices=(1, -1), help="override delta (+1 pss, -1 ss)")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("structured", "text"), default="structured")

    ap = argparse.ArgumentParser(prog="pseudosurf", description="Pseudospherical and spherical surface equation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    fam = sub.add_parser("family", help="build equations from family data")
    fsub = fam.add_subparsers(dest="action", required=True)
    fb = fsub.add_parser("build", help="build a sextet and A, B, C from a family spec", parents=[common])
    fb.add_argument("variant", help="case_a, case_b1, case_b2, cor33, cor34 or cor35")
    fb.add_argument("--spec", required=True, help="JSON file with the family data")
    fb.add_argument("--no-verify", action="store_true", help="skip the characterization check")
    fb.set_defaults(func=cmd_family_build)

    ver = sub.add_parser("verify", help="verify a sextet file", parents=[common])
    ver.add_argument("--sextet", required=True, help="sextet JSON (optional 'relation' or 'coefficients')")
    ver.set_defaults(func=cmd_verify)

    cat = sub.add_parser("catalog", help="catalog fixtures")
    csub = cat.add_subparsers(dest="action", required=True)
    csub.add_parser("list", parents=[common]).set_defaults(func=cmd_catalog_list)
    ce = csub.add_parser("export", parents=[common])
    ce.add_argument("name")
    ce.set_defaults(func=cmd_catalog_export)
    cr = csub.add_parser("run", parents=[common])
    cr.add_argument("name", help="fixture name or 'all'")
    cr.add_argument("--params", help="comma-separated name=value pairs")
    cr.add_argument("--acceptance", action="store_true", help="run every stored acceptance instance")
    cr.set_defaults(func=cmd_catalog_run)

    so = sub.add_parser("solve", help="solve a fixture equation numerically", parents=[common])
    so.add_argument("name")
    so.add_argument("--params")
    so.add_argument("--residual-tol", type=float, default=1e-3, help="bound on the grid PDE residual")
    _add_solver_args(so)
    so.set_defaults(func=cmd_solve)

    cu = sub.add_parser("curvature", help="Gaussian curvature of the induced metric on a grid", parents=[common])
    cu.add_argument("name")
    cu.add_argument("--params")
    cu.add_argument("--closed-form", help="closed-form solution z(x, t); otherwise solve numerically")
    cu.add_argument("--t-range", default="-8,8")
    cu.add_argument("--h", type=float, default=0.05, help="grid step for --closed-form")
    cu.add_argument("--k-tol", type=float, default=1e-2, help="bound on median |K + delta|")
    _add_solver_args(cu)
    cu.set_defaults(func=cmd_curvature)
    return ap


def _emit(report: RunReport, args) -> None:
    blob = render_report(report, args.format)
    if args.out:
        args.out.write_bytes(blob)
    else:
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "closed_form", None) and args.x_range == "0,2*pi":
        args.x_range = "-8,8"
    try:
        report = args.func(args)
    except (UsageError, KeyError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"pseudosurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PseudosurfError as exc:
        print(f"pseudosurf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
