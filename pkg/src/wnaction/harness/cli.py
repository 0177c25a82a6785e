"""Command-line entry point: ``wnaction <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

from .. import __version__
from ..errors import WnActionError
from ..stats import EXPONENTS, fit_scaling, orlicz_bootstrap_se, orlicz_norm, tail_consistency
from .analysis import band_summary, concentration_summary, load_run, scaling_summary
from .config import OUT_DIR_ENV, RunConfig, default_out_dir, load_config_file, parse_overrides
from .io import read_points_csv, read_run_csv

__all__ = ["main", "build_parser"]


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _out_dir(args) -> Path:
    return Path(args.out_dir) if args.out_dir else default_out_dir()


# config flags ------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    for f in dataclasses.fields(RunConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                       help=f"(default: {f.default!r})")


def _run_config(args) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    flags = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)
             if getattr(args, f.name) is not None}
    values.update(parse_overrides(flags))
    return RunConfig(**values)


# subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .simulate import simulate

    cfg = _run_config(args)
    out = _out_dir(args)

    def progress(L, replica, seconds):
        if not args.quiet:
            print(f"L={L} replica={replica} {seconds:.2f}s", file=sys.stderr)

    echo = simulate(cfg, out, progress=progress)
    print(json.dumps({"out_dir": str(out), "config_hash": echo["config_hash"], "files": echo["files"]}))
    return 0


def cmd_boundary_sweep(args) -> int:
    from ..noise import FieldConfig, generate_field
    from ..solver import boundary_sweep, extremal_actions
    from ..stats import midpoint_deviation

    cap = args.y_cap if args.y_cap is not None else math.ceil(8 * math.sqrt(args.L) / args.dy) * args.dy
    field = generate_field(FieldConfig(L=args.L, m=args.m, dy=args.dy, y_cap=cap,
                                       seed=args.seed, replica=args.replica))
    window = args.window if args.window is not None else args.L / 2
    db = args.db if args.db is not None else max(args.dy, args.L / 32 * args.dy)
    sweep = boundary_sweep(field, window, db)
    a_plus, a_minus = extremal_actions(sweep)
    data = {
        "L": args.L, "m": args.m, "dy": args.dy, "seed": args.seed, "replica": args.replica,
        "window": window, "db": db, "y_cap": sweep.y_cap, "cap_saturated": sweep.cap_saturated,
        "A_plus": a_plus, "A_minus": a_minus, "A_L": sweep.pair(0.0, 0.0),
        "H_L": midpoint_deviation(sweep),
        "m40": float(abs(sweep.linear).max()),
        "per_scale_D_max": {str(k): v for k, v in sweep.per_scale_D_max.items()},
        "boundary_grid": sweep.boundary_grid, "M": sweep.M,
    }
    path = _out_dir(args) / f"sweep_L{args.L}_seed{args.seed}_r{args.replica}.json"
    _write_json(path, data)
    print(json.dumps({k: data[k] for k in ("A_L", "A_plus", "A_minus", "H_L", "m40")}))
    return 0


def _orlicz_block(runs) -> dict:
    conc = concentration_summary(runs)
    return {q: {"s": EXPONENTS[q], "norm": conc["norms"][q]} for q in conc["norms"]}


def _summary(fit: dict, bands: dict | None, orlicz: dict, config_hash) -> dict:
    return {
        "a_star": fit["a_star"],
        "a_star_se": fit["a_star_se"],
        "intercept": fit["intercept"],
        "residuals": fit["residuals"],
        "residual_se": fit["residual_se"],
        "max_residual_ratio": fit["max_residual_ratio"],
        "jackknife_stable": fit["jackknife_stable"],
        "bands": [] if bands is None else bands["bands"],
        "orlicz": orlicz,
        "config_hash": config_hash,
    }


def cmd_fit_scaling(args) -> int:
    from .svg import scaling_svg

    out = _out_dir(args)
    if args.points:
        pts = read_points_csv(args.points)
        fit = scaling_summary_from_points(pts)
        summary = _summary(fit, None, {}, None)
    else:
        runs, echo = load_run(args.run or out)
        fit = scaling_summary(runs)
        top = max(runs)
        bands = band_summary(runs[top], fit["a_star"], fit["a_star_se"])
        summary = _summary(fit, bands, _orlicz_block(runs), echo["config_hash"])
    _write_json(out / "fit_scaling.json", summary)
    if args.svg:
        _write_text(out / "scaling.svg", scaling_svg(fit))
    print(json.dumps({k: summary[k] for k in ("a_star", "a_star_se", "intercept", "max_residual_ratio")}))
    return 0


def scaling_summary_from_points(points) -> dict:
    f = fit_scaling(points)
    return {
        "a_star": f.a_star, "a_star_se": f.a_star_se, "intercept": f.intercept,
        "points": f.points, "residuals": f.residuals, "residual_se": f.residual_se,
        "max_residual_ratio": f.max_residual_ratio, "jackknife_stable": f.jackknife_stable(),
    }


def _rows_for(args):
    if args.csv:
        rows, meta = read_run_csv(args.csv)
        return rows, meta.get("config_hash"), None
    runs, echo = load_run(args.run or _out_dir(args))
    L = args.L or max(runs)
    if L not in runs:
        raise WnActionError(f"run has no L={L}")
    return runs[L], echo["config_hash"], runs


def cmd_equipartition(args) -> int:
    from .svg import bands_svg

    rows, config_hash, runs = _rows_for(args)
    a_star, a_se = args.a_star, args.a_star_se
    if a_star is None and runs is not None and len([L for L in runs if L >= 3]) >= 3:
        fit = scaling_summary(runs)
        a_star, a_se = fit["a_star"], fit["a_star_se"]
    if not rows:
        raise WnActionError("run file has no replicas")
    bands = band_summary(rows, a_star, a_se or 0.0)
    bands["a_star"], bands["a_star_se"], bands["config_hash"] = a_star, a_se, config_hash
    out = _out_dir(args)
    _write_json(out / f"equipartition_L{bands['L']}.json", bands)
    if args.svg:
        _write_text(out / f"bands_L{bands['L']}.svg", bands_svg(bands))
    print(json.dumps({k: bands.get(k) for k in ("L", "slope", "slope_se", "consistent", "worst_z", "agrees_with_a_star")}))
    return 0


def cmd_orlicz(args) -> int:
    out = _out_dir(args)
    if args.samples:
        with open(args.samples) as fh:
            xs = [float(r[0]) for r in csv.reader(fh) if r and not r[0].startswith("#") and _is_number(r[0])]
        est = orlicz_norm(xs, args.s)
        data = {"s": args.s, "norm": est.norm, "n": len(xs),
                "bootstrap_se": orlicz_bootstrap_se(xs, args.s, seed=args.seed),
                "tail": tail_consistency(xs, args.s)}
        _write_json(out / "orlicz.json", data)
        print(json.dumps({"s": args.s, "norm": est.norm}))
        return 0
    runs, echo = load_run(args.run or out)
    conc = concentration_summary(runs)
    conc["exponents"] = {q: EXPONENTS[q] for q in conc["norms"]}
    conc["config_hash"] = echo["config_hash"]
    _write_json(out / "concentration.json", conc)
    print(json.dumps({"spread": conc["spread"], "within_factor_2": conc["within_factor_2"]}))
    return 0


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def cmd_count_net(args) -> int:
    from ..net import NetBallSpec, count_bound_ratio, enumerate_net_ball, rectangle_scan_count
    from .svg import count_svg

    rows = []
    for n in args.ratios:
        for nu in args.nu:
            spec = NetBallSpec(L=n * args.l, l=args.l, nu=nu)
            count, _ = enumerate_net_ball(spec)
            rows.append({"L": spec.L, "l": spec.l, "nu": nu, "count": count,
                         "ratio": math.log(count) / (n * math.log(nu))})
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "count_net.csv", "w", newline="") as fh:
        fh.write("# wnaction-count v1 constraints=literal\n")
        w = csv.DictWriter(fh, fieldnames=["L", "l", "nu", "count", "ratio"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "nu": repr(float(r["nu"])), "ratio": repr(r["ratio"])})
    c0 = max(r["ratio"] for r in rows)
    data = {"C0": c0, "rows": rows, "constraints": "literal"}
    if args.oracle:
        small = min(rows, key=lambda r: r["count"])
        spec = NetBallSpec(small["L"], small["l"], small["nu"])
        data["oracle"] = {"L": spec.L, "l": spec.l, "nu": spec.nu,
                          "count": small["count"], "rectangle_scan": rectangle_scan_count(spec)}
    _write_json(out / "count_net.json", data)
    if args.svg:
        _write_text(out / "count_net.svg", count_svg(rows))
    print(json.dumps({"C0": c0, "cases": len(rows)}))
    return 0


def cmd_validate(args) -> int:
    from ..oracle_suite import validate_all

    report = validate_all(args.profile, seeds=args.seeds)
    _write_json(_out_dir(args) / "validation.json", report.to_dict())
    print(report.to_text())
    return report.exit_code


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wnaction", description="Maximal white-noise action: exact solvers and Monte Carlo harness."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out-dir", help=f"output directory (default: ${OUT_DIR_ENV} or ./wnaction-out)")
        p.set_defaults(func=func)
        return p

    p = add("simulate", cmd_simulate, "run replicas and write per-L CSV files")
    _add_config_flags(p)
    p.add_argument("--quiet", action="store_true")

    p = add("boundary-sweep", cmd_boundary_sweep, "inner maxima over a grid of boundary pairs")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--dy", type=float, default=0.25)
    p.add_argument("--y-cap", type=float)
    p.add_argument("--window", type=float)
    p.add_argument("--db", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replica", type=int, default=0)

    p = add("fit-scaling", cmd_fit_scaling, "fit mean A_L against ln L")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--run", help="simulate output directory (default: --out-dir)")
    src.add_argument("--points", help="CSV with columns L,mean,se")
    p.add_argument("--svg", action="store_true")

    p = add("equipartition", cmd_equipartition, "band increments of the coarse-grained action")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--run")
    src.add_argument("--csv", help="a single run_L*.csv file")
    p.add_argument("--L", type=int, help="system length to analyze (default: largest)")
    p.add_argument("--a-star", type=float)
    p.add_argument("--a-star-se", type=float, default=0.0)
    p.add_argument("--svg", action="store_true")

    p = add("orlicz", cmd_orlicz, "plug-in Orlicz norms")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--run")
    src.add_argument("--samples", help="one-column CSV of samples")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")

    p = add("count-net", cmd_count_net, "exact cardinality of the constrained net ball")
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--ratios", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--nu", type=float, nargs="+", default=[3.0, 9.0, 27.0])
    p.add_argument("--oracle", action="store_true", help="cross-check the smallest case by rectangle scan")
    p.add_argument("--svg", action="store_true")

    p = add("validate", cmd_validate, "run the exact verification battery")
    p.add_argument("--profile", choices=["quick", "full"], default="quick")
    p.add_argument("--seeds", type=int, nargs="+")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WnActionError, ValueError, OSError) as exc:
        print(f"wnaction {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
