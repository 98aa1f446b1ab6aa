"""Command line front end: bridge-kmt <subcommand> [flags].

Subcommands: analyze, density, couple, scaling, tails, counterexample.
Row output (CSV by default, JSON mirror with --format json) goes to stdout
or --out; fit summaries that are not part of the stable row schema go to
stderr.  Exit codes: 0 success, 2 bad request, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import rng
from .coupling import CouplerConfig, backend_name, sample_deltas
from .errors import NumericError, SpecError
from .harness import (COUNTER_FIELDS, DENSITY_FIELDS, SCALING_FIELDS,
                      TAIL_FIELDS, ExperimentSpec, render_rows,
                      run_counterexample, run_density_validation, run_scaling,
                      run_tails, write_rows)
from .jump_dist import FAMILIES, check_assumptions, from_json, from_spec, make_builtin


def parse_dist(text: str):
    """Jump-law argument: inline JSON, a JSON file path, or
    family[,key=value,...] shorthand (e.g. bernoulli,p=0.5)."""
    text = text.strip()
    if text.startswith("{"):
        return from_spec(json.loads(text))
    if os.path.exists(text) and text.endswith(".json"):
        with open(text) as fh:
            return from_json(fh.read())
    parts = text.split(",")
    family = parts[0]
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}; choose from {FAMILIES} "
                        "or pass a JSON spec")
    params = {}
    for p in parts[1:]:
        if "=" not in p:
            raise SpecError(f"malformed parameter {p!r}; expected key=value")
        k, v = p.split("=", 1)
        try:
            params[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            raise SpecError(f"parameter {k!r} has a non-numeric value {v!r}")
    return make_builtin(family, params)


def _parse_n_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise SpecError(f"--n-list must be comma-separated integers, got {text!r}")


def _z_rule(args) -> object:
    if args.z_rule == "fixed":
        if args.z is None:
            raise SpecError("--z-rule fixed needs --z")
        return ("fixed", args.z)
    if args.z_rule == "offset":
        if args.c is None:
            raise SpecError("--z-rule offset needs --c")
        return ("offset", args.c)
    if args.z is not None:
        return ("fixed", args.z)
    return "mean_slope"


def _add_common(p, dist_required=True):
    if dist_required:
        p.add_argument("--dist", required=True, help="jump law: family shorthand, "
                       "inline JSON, or a .json file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None,
                   help="sampling threads (env BRIDGE_KMT_THREADS as fallback)")


def _add_coupler(p):
    p.add_argument("--mode", choices=("pure_quantile", "truncated_paper"),
                   default="pure_quantile")
    p.add_argument("--n-min", type=int, default=16)
    p.add_argument("--eps3", type=float, default=0.05)
    p.add_argument("--engine", choices=("auto", "compiled", "pure"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bridge-kmt",
                                 description="Strong couplings of pinned random "
                                 "walks to Brownian bridges, with density and "
                                 "tail diagnostics.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("analyze", help="assumption report for a jump law")
    _add_common(p)

    p = sub.add_parser("density", help="per-engine log-densities over N")
    _add_common(p)
    p.add_argument("--n-list", required=True)
    p.add_argument("--z-rule", choices=("mean_slope", "fixed", "offset"),
                   default="mean_slope")
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--engine", choices=("all", "saddle", "fft_exact",
                                        "gaussian_asymptotic"), default="all")

    p = sub.add_parser("couple", help="sample coupled walk/bridge pairs")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--dump-paths", action="store_true",
                   help="append s_t,b_t columns for every grid point")
    _add_coupler(p)

    p = sub.add_parser("scaling", help="delta-vs-n sweep with log fit")
    _add_common(p)
    p.add_argument("--n-list", required=True)
    p.add_argument("--z-rule", choices=("mean_slope", "fixed", "offset"),
                   default="mean_slope")
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--a", type=float, default=0.1)
    _add_coupler(p)

    p = sub.add_parser("tails", help="survival of delta beyond m0 log n")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z-rule", choices=("mean_slope", "fixed", "offset"),
                   default="mean_slope")
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--samples", type=int, default=100000)
    _add_coupler(p)

    p = sub.add_parser("counterexample",
                       help="spiky-law conditional spread table")
    _add_common(p, dist_required=False)
    p.add_argument("--m-list", default="1,2")
    p.add_argument("--k-max", type=int, default=50)
    p.add_argument("--no-contrast", action="store_true")
    return ap


def _coupler_from(args) -> CouplerConfig:
    return CouplerConfig(n_min=args.n_min, coupling_mode=args.mode,
                         eps3=args.eps3, engine=args.engine,
                         rng_seed=args.seed)


def _cmd_analyze(args) -> int:
    dist = parse_dist(args.dist)
    report = check_assumptions(dist)
    if args.format == "json":
        text = report.to_json() + "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        return 0
    rows = [{"assumption_id": c.assumption_id, "status": c.status,
             "detail": c.detail,
             "measured": json.dumps(c.measured) if c.measured else ""}
            for c in report.checks]
    write_rows(rows, ["assumption_id", "status", "detail", "measured"],
               args.out, "csv")
    return 0


def _cmd_density(args) -> int:
    spec = ExperimentSpec(kind="density", dist=parse_dist(args.dist),
                          n_list=_parse_n_list(args.n_list), z_rule=_z_rule(args),
                          seed=args.seed, out=args.out, fmt=args.format,
                          engine=args.engine)
    res = run_density_validation(spec)
    if spec.out is None:
        sys.stdout.write(render_rows(res["rows"], DENSITY_FIELDS, spec.fmt))
    if res["rate_fit"] is not None:
        print(f"# gap rate fit: slope={res['rate_fit']['slope']:.4f} "
              f"intercept={res['rate_fit']['intercept']:.4f}", file=sys.stderr)
    return 0


def _cmd_couple(args) -> int:
    dist = parse_dist(args.dist)
    cfg = _coupler_from(args)
    res = sample_deltas(dist, args.n, args.z, args.samples, config=cfg,
                        seed=args.seed, threads=args.threads,
                        collect_paths=args.dump_paths)
    fields = ["seed_path", "z", "delta", "midpoint_W"]
    if args.dump_paths:
        for t in range(args.n + 1):
            fields += [f"s_{t}", f"b_{t}"]
    rows = []
    for i in range(args.samples):
        row = {"seed_path": rng.sample_seed(args.seed, i),
               "z": args.z, "delta": float(res["delta"][i]),
               "midpoint_W": float(res["midpoint_w"][i])}
        if args.dump_paths:
            sp, bp = res["s_paths"][i], res["b_paths"][i]
            for t in range(args.n + 1):
                sv = sp[t]
                row[f"s_{t}"] = int(sv) if dist.kind == "discrete" else float(sv)
                row[f"b_{t}"] = float(bp[t])
        rows.append(row)
    write_rows(rows, fields, args.out, args.format)
    print(f"# backend={backend_name(cfg)}", file=sys.stderr)
    return 0


def _cmd_scaling(args) -> int:
    spec = ExperimentSpec(kind="scaling", dist=parse_dist(args.dist),
                          n_list=_parse_n_list(args.n_list), z_rule=_z_rule(args),
                          samples=args.samples, seed=args.seed, out=args.out,
                          fmt=args.format, a=args.a, coupler=_coupler_from(args),
                          threads=args.threads)
    res = run_scaling(spec)
    if spec.out is None:
        sys.stdout.write(render_rows(res.rows, SCALING_FIELDS, spec.fmt))
    if res.fit is not None:
        print(f"# log fit: a0={res.fit['a0']:.4f} b0={res.fit['b0']:.4f} "
              f"rms={res.residual_rms:.4f} | diffusive c={res.diffusive['c']:.4f} "
              f"rms={res.diffusive['rms']:.4f}", file=sys.stderr)
    return 0


def _cmd_tails(args) -> int:
    spec = ExperimentSpec(kind="tails", dist=parse_dist(args.dist),
                          n_list=(args.n,), z_rule=_z_rule(args),
                          samples=args.samples, seed=args.seed, out=args.out,
                          fmt=args.format, coupler=_coupler_from(args),
                          threads=args.threads)
    res = run_tails(spec)
    if spec.out is None:
        sys.stdout.write(render_rows(res.rows, TAIL_FIELDS, spec.fmt))
    lam = "none" if res.lam is None else f"{res.lam:.5f}"
    r2 = "none" if res.r2 is None else f"{res.r2:.4f}"
    print(f"# m0={res.m0:.5f} lambda={lam} r2={r2}", file=sys.stderr)
    return 0


def _cmd_counterexample(args) -> int:
    m_list = tuple(int(x) for x in args.m_list.split(","))
    res = run_counterexample(m_list, k_max=args.k_max,
                             contrast=not args.no_contrast,
                             out=args.out, fmt=args.format)
    if args.out is None:
        sys.stdout.write(render_rows(res.rows, COUNTER_FIELDS, args.format))
    if res.budget_exceeded:
        print("# candidate budget exceeded; table pruned", file=sys.stderr)
    return 0


_DISPATCH = {
    "analyze": _cmd_analyze,
    "density": _cmd_density,
    "couple": _cmd_couple,
    "scaling": _cmd_scaling,
    "tails": _cmd_tails,
    "counterexample": _cmd_counterexample,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("bridge-kmt: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.cmd](args)
    except SpecError as exc:
        print(f"bridge-kmt: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"bridge-kmt: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
