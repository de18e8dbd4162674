"""Command line entry point.

    rotogen run CONFIG [CONFIG ...] [--out-dir D] [--jobs N]
    rotogen theta TYPE [name=value ...]
    rotogen --self-check

Exit codes: 0 ok, 2 config error, 3 solver error, 4 self-check failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import catalog
from .catalog import Family
from .continuation import solve_global
from .errors import ConfigError, ParameterError, RotogenError
from .io import curve_records, diagnostics, error_dict, load_config, parse_type, write_csv, write_json, write_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_SELF_CHECK = 4

A_TOL = 1e-12
IDENTITY_TOL = 1e-10
CLOSED_FORM_TOL = 1e-12


def expected_identity(spec) -> int:
    """Family-specific value of the quadratic cotangent identity."""
    fam = spec.family
    if fam is Family.II:
        return spec.n - 2
    if fam is Family.III:
        return 6 * spec.params["n0"]
    if fam is Family.IV:
        return 6 * (spec.params["k"] + spec.params["ell"])
    if fam is Family.V:
        return 30 * spec.params["n0"]
    raise ParameterError("Type I has no origin angle")


def verify_suite(specs=None) -> list:
    """Catalog identity battery, one row per (type, sector)."""
    specs = catalog.builtin_types() if specs is None else specs
    rows = []
    for spec in specs:
        if spec.family is Family.I:
            continue
        for i in catalog.sector_ids(spec):
            row = {"type": spec.label, "sector": i}
            try:
                th = catalog.theta_star(spec, i)
                a = abs(catalog.A_theta(spec, th))
                ident = catalog.gamma_identity(spec, i)
                target = spec.gamma * (spec.n - 2)
                cf = catalog.closed_form_theta(spec, i)
                row.update(theta=th, A=a, identity=ident, gamma_n2=target,
                           family_value=expected_identity(spec),
                           closed_form=cf, closed_form_error=None if cf is None else abs(cf - th))
                row["pass"] = (a <= A_TOL and abs(ident - target) <= IDENTITY_TOL
                               and target == row["family_value"]
                               and (cf is None or abs(cf - th) <= CLOSED_FORM_TOL))
            except RotogenError as exc:
                row.update(error=str(exc))
                row["pass"] = False
            rows.append(row)
    return rows


def _print_suite(rows, out) -> None:
    print(f"{'type':44s} {'sec':>3s} {'|A(theta)|':>11s} {'sum cot^2':>12s} {'gamma(n-2)':>10s} "
          f"{'closed form err':>15s}  result", file=out)
    for r in rows:
        if "error" in r:
            print(f"{r['type']:44s} {r['sector']:3d}  error: {r['error']}  FAIL", file=out)
            continue
        cf = "-" if r["closed_form_error"] is None else f"{r['closed_form_error']:.2e}"
        print(f"{r['type']:44s} {r['sector']:3d} {r['A']:11.2e} {r['identity']:12.8f} "
              f"{r['gamma_n2']:10d} {cf:>15s}  {'pass' if r['pass'] else 'FAIL'}", file=out)
    n_fail = sum(not r["pass"] for r in rows)
    print(f"{len(rows) - n_fail}/{len(rows)} rows pass", file=out)


def _output_paths(config, config_path: Path, out_dir):
    base = Path(out_dir) if out_dir else config_path.parent
    stem = config_path.stem

    def place(name, default):
        if name is None and default is None:
            return None
        p = Path(name if name is not None else default)
        return p if p.is_absolute() else base / p

    return (place(config.csv, stem + ".csv"), place(config.json, stem + ".json"), place(config.svg, None))


def run_one(config_path, out_dir=None, err=None) -> int:
    err = sys.stderr if err is None else err
    config_path = Path(config_path)
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(json.dumps({"config": str(config_path), "error": error_dict(exc)}, sort_keys=True), file=err)
        return EXIT_CONFIG
    csv_path, json_path, svg_path = _output_paths(config, config_path, out_dir)
    for p in (csv_path, json_path, svg_path):
        if p is not None:
            p.parent.mkdir(parents=True, exist_ok=True)
    try:
        curve = solve_global(config.spec, config.h, config.init, config.window, config.tolerances,
                             config.max_events)
    except RotogenError as exc:
        payload = diagnostics(config, None, exc)
        write_json(json_path, payload)
        print(json.dumps({"config": str(config_path), "error": payload["error"]}, sort_keys=True), file=err)
        return EXIT_SOLVER if not isinstance(exc, ParameterError) else EXIT_CONFIG
    records = curve_records(curve)
    write_csv(csv_path, records)
    write_json(json_path, diagnostics(config, curve, curve.error))
    if svg_path is not None and records:
        write_svg(svg_path, records, config.spec)
    if curve.error is not None:
        print(json.dumps({"config": str(config_path), "error": error_dict(curve.error)}, sort_keys=True,
                         default=str), file=err)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_run(args) -> int:
    paths = args.configs
    if args.jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda p: run_one(p, args.out_dir), paths))
    else:
        codes = [run_one(p, args.out_dir) for p in paths]
    return max(codes)


def cmd_theta(args) -> int:
    try:
        spec = parse_type(args.type)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(spec.label)
    if spec.family is Family.I:
        print("Type I has a single boundary line and no origin angle")
        return EXIT_OK
    print(f"{'sector':>6s} {'phi_i':>20s} {'phi_i+1':>20s} {'theta_i':>20s} {'degrees':>12s}")
    for i in catalog.sector_ids(spec):
        lo, hi = catalog.sector_bounds(spec, i)
        th = catalog.theta_star(spec, i)
        print(f"{i:6d} {lo:20.16f} {hi:20.16f} {th:20.16f} {math.degrees(th):12.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotogen", description="Generating curves of rotational "
                                     "hypersurfaces with prescribed mean curvature.")
    parser.add_argument("--self-check", action="store_true", help="run the catalog identity battery")
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="solve one or more config files")
    p_run.add_argument("configs", nargs="+")
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_theta = sub.add_parser("theta", help="print the origin angle table of an orbit type")
    p_theta.add_argument("type", nargs="+", help="family followed by name=value parameters, e.g. II ell=1 m=2")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.self_check:
        rows = verify_suite()
        _print_suite(rows, sys.stdout)
        return EXIT_OK if all(r["pass"] for r in rows) else EXIT_SELF_CHECK
    if args.command == "run":
        return cmd_run(args)
    if args.command == "theta":
        return cmd_theta(args)
    parser.print_help()
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
