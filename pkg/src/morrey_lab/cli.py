"""Command-line front end: morrey-lab <subcommand>.

Exit codes are the machine contract: 0 success, 1 invariant failure,
2 usage error.  All numeric results go to stdout or files as JSON/CSV, and
every experiment run echoes its fully-resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .dyadic import DyadicCube, LevelWindow
from .fields import AtomicMeasure, GridFunction, VectorFunction
from .harness import (
    ExperimentConfig,
    emit_report,
    instance_hash,
    oracle_suite,
    ratio_field,
    run_trace_experiment,
    sample_exponents,
    sample_vector,
)
from .hedberg import (
    ExponentError,
    exponents,
    hedberg_pointwise_bound,
    hypothesis_violations,
    normalize_product_morrey,
)
from .norms import (
    CubeSet,
    measure_growth_norm,
    morrey_norm,
    product_morrey_norm,
    radon_morrey_norm,
)
from .operators import integral_continuous, integral_dyadic, maximal_dyadic
from .sparse import (
    build_sparse,
    cert_dict_items,
    check_masks,
    default_threshold,
    family_to_cert_dict,
)

REGIME_CHOICES = ("thm1.1", "thm1.2", "thm2.1", "thm2.2")


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_vector(paths) -> VectorFunction:
    return VectorFunction(tuple(GridFunction.from_dict(_load_json(p))
                                for p in paths))


def _window(root: DyadicCube, level: int, k_min, k_max) -> LevelWindow:
    k_min = root.level - 3 if k_min is None else int(k_min)
    k_max = level if k_max is None else int(k_max)
    return LevelWindow(k_min, k_max, root)


def _print_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def _cmd_eval(args) -> int:
    fvec = _load_vector(args.input)
    window = _window(fvec.root, fvec.level, args.k_min, args.k_max)
    if args.op == "maximal":
        out = maximal_dyadic(fvec, args.alpha, window)
        values = out.values
    elif args.op == "integral":
        out = integral_dyadic(fvec, args.alpha, window)
        values = out.values
    else:
        probe = fvec.components[0]
        centers = probe.cell_centers()
        flat = np.array([
            integral_continuous(fvec, args.alpha, x, args.max_tuples)
            for x in centers
        ])
        values = flat.reshape(probe.values.shape)
    probe = fvec.components[0]
    centers = probe.cell_centers()
    n = fvec.dim
    base = [probe.root.index[ax] << (probe.level - probe.root.level)
            for ax in range(n)]
    rows = []
    for flat_idx, idx in enumerate(np.ndindex(values.shape)):
        cell = [base[ax] + idx[ax] for ax in range(n)]
        rows.append([*cell, *(repr(c) for c in centers[flat_idx]),
                     repr(float(values[idx]))])
    header = [*(f"cell_{ax + 1}" for ax in range(n)),
              *(f"x_{ax + 1}" for ax in range(n)), "value"]
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def _cmd_norm(args) -> int:
    mode = args.mode
    if args.kind == "morrey":
        f = GridFunction.from_dict(_load_json(args.input[0]))
        window = _window(f.root, f.level, args.k_min, args.k_max)
        res = morrey_norm(f, args.p, args.p0, CubeSet(window, mode))
    elif args.kind == "product":
        fvec = _load_vector(args.input)
        if args.pvec is None:
            raise SystemExit("--pvec is required for the product norm")
        window = _window(fvec.root, fvec.level, args.k_min, args.k_max)
        res = product_morrey_norm(fvec, _parse_floats(args.pvec), args.p0,
                                  CubeSet(window, mode))
    elif args.kind == "radon":
        g = GridFunction.from_dict(_load_json(args.field))
        mu = AtomicMeasure.from_dict(_load_json(args.measure))
        window = _window(g.root, min(g.level, mu.resolution), args.k_min,
                         args.k_max)
        res = radon_morrey_norm(g, mu, args.q, args.q0, CubeSet(window, mode))
    else:
        mu = AtomicMeasure.from_dict(_load_json(args.measure))
        root = DyadicCube.from_tuple(args.root) if args.root else DyadicCube(
            0, (0,) * mu.dim)
        window = _window(root, mu.resolution, args.k_min, args.k_max)
        res = measure_growth_norm(mu, args.beta, CubeSet(window, mode))
    _print_json(res.to_json(), args.out)
    return 0


def _cmd_sparse(args) -> int:
    if args.build:
        fvec = _load_vector(args.input)
        threshold = args.threshold
        if threshold is None:
            threshold = default_threshold(fvec.m, fvec.dim)
        window = LevelWindow(fvec.root.level, fvec.level, fvec.root)
        family = build_sparse(fvec, threshold, window)
        cert = family_to_cert_dict(family, instance_hash(fvec))
        _print_json(cert, args.out)
        return 0
    cert = _load_json(args.cert)
    root, level, items = cert_dict_items(cert)
    result = check_masks(root, level, items, args.eta)
    payload = {
        "certified": result.ok,
        "eta_realized": result.eta,
        "eta_required": result.eta_required,
        "disjoint": result.disjoint,
        "notes": list(result.notes),
    }
    if args.input:
        fvec = _load_vector(args.input)
        payload["input_hash_matches"] = instance_hash(fvec) == cert.get(
            "input_hash", "")
    _print_json(payload, args.out)
    return 0 if result.ok and payload.get("input_hash_matches", True) else 1


def _cmd_exponents(args) -> int:
    pvec = _parse_floats(args.p)
    violations = hypothesis_violations(
        args.n, args.m, pvec, args.p0, args.alpha, args.beta, args.regime
    )
    if violations:
        for v in violations:
            print(f"violated: {v}")
        return 1
    exps = exponents(args.n, args.m, pvec, args.p0, args.alpha, args.beta,
                     args.regime)
    print(f"regime  {exps.regime}")
    print(f"n       {exps.n}")
    print(f"m       {exps.m}")
    print(f"P       ({', '.join(f'{pj:.12g}' for pj in exps.pvec)})")
    print(f"p       {exps.p:.12g}")
    print(f"p0      {exps.p0:.12g}")
    print(f"alpha   {exps.alpha:.12g}")
    print(f"beta    {exps.beta:.12g}")
    print(f"theta   {exps.theta:.12g}")
    print(f"q       {exps.q:.12g}")
    print(f"q0      {exps.q0:.12g}")
    print(f"n-beta*p {exps.growth_index:.12g}")
    print("checks  all hypotheses satisfied")
    return 0


def _cmd_hedberg(args) -> int:
    cfg = ExperimentConfig(seed=args.seed, n=args.n, m=args.m,
                           level=args.level)
    cfg.validate_for(args.regime)
    rng = np.random.default_rng([cfg.seed, 0])
    exps = sample_exponents(rng, cfg, args.regime)
    fvec = sample_vector(rng, cfg)
    window = LevelWindow(fvec.root.level - cfg.coarse_levels, cfg.level,
                         fvec.root)
    cubes = CubeSet(window, cfg.cube_mode)
    fvec, norm_value = normalize_product_morrey(fvec, exps.pvec, exps.p0, cubes)
    lhs = integral_dyadic(fvec, exps.alpha, window)
    dom = hedberg_pointwise_bound(fvec, exps, window)
    try:
        ratios = ratio_field(lhs, dom)
    except RuntimeError as err:
        print(f"invariant failure: {err}", file=sys.stderr)
        return 1
    payload = {
        "regime": exps.regime,
        "alpha": exps.alpha,
        "beta": exps.beta,
        "theta": exps.theta,
        "original_norm": norm_value,
        "ratio_sup": float(ratios.max()),
        "ratio_median": float(np.median(ratios)),
        "cells": int(ratios.size),
    }
    _print_json(payload, args.out)
    return 0


def _cmd_experiment(args) -> int:
    resolved = {}
    flag_fields = ("seed", "n", "m", "level", "trials", "coarse_levels",
                   "input_family", "measure_family", "cube_mode")
    for name in flag_fields:
        value = getattr(args, name)
        if value is not None:
            resolved[name] = value
    if args.config:
        resolved.update(_load_json(args.config))
    cfg = ExperimentConfig.from_dict({**ExperimentConfig().to_dict(),
                                      **resolved})
    report = run_trace_experiment(cfg, args.regime, jobs=args.jobs)
    text = emit_report(report, path=args.out)
    if not args.out:
        sys.stdout.write(text)
    summary = report.summary
    ok = summary["stable"] and summary["max_dilation_residual"] <= 1e-9
    if not ok:
        print(
            f"invariant failure: stable={summary['stable']} "
            f"max_dilation_residual={summary['max_dilation_residual']:.3e}",
            file=sys.stderr,
        )
    return 0 if ok else 1


def _cmd_oracle(args) -> int:
    result = oracle_suite(seed=args.seed, instances=args.instances)
    print(
        f"oracle agreement: {result['checks'] - len(result['failures'])}"
        f"/{result['checks']} checks within 1e-12 "
        f"(max rel err {result['max_rel_err']:.3e})"
    )
    return 0 if result["ok"] else 1


# ---------------------------------------------------------------------------
# Parser.
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morrey-lab",
        description="Dyadic fractional operators, Morrey-type norms, sparse "
                    "domination, and trace-inequality experiments.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate an operator on grid inputs")
    p_eval.add_argument("--op", required=True,
                        choices=("maximal", "integral", "continuous"))
    p_eval.add_argument("--alpha", type=float, required=True)
    p_eval.add_argument("--input", action="append", required=True,
                        help="grid-function JSON; repeat for each component")
    p_eval.add_argument("--measure", help="accepted for interface "
                        "compatibility; unused by these operators")
    p_eval.add_argument("--k-min", dest="k_min", type=int, default=None)
    p_eval.add_argument("--k-max", dest="k_max", type=int, default=None)
    p_eval.add_argument("--max-tuples", dest="max_tuples", type=float,
                        default=1e8)
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=_cmd_eval)

    p_norm = sub.add_parser("norm", help="compute one of the norm families")
    p_norm.add_argument("--kind", required=True,
                        choices=("morrey", "product", "radon", "growth"))
    p_norm.add_argument("--input", action="append", default=[])
    p_norm.add_argument("--field", help="operator-field JSON (radon norm)")
    p_norm.add_argument("--measure", help="atomic-measure JSON")
    p_norm.add_argument("--p", type=float)
    p_norm.add_argument("--p0", type=float)
    p_norm.add_argument("--pvec", help="comma-separated component exponents")
    p_norm.add_argument("--q", type=float)
    p_norm.add_argument("--q0", type=float)
    p_norm.add_argument("--beta", type=float)
    p_norm.add_argument("--root", type=int, nargs="+",
                        help="(n, level, m...) tuple for the growth norm")
    p_norm.add_argument("--mode", default="dyadic-only",
                        choices=("dyadic-only", "dyadic-plus-shifts"))
    p_norm.add_argument("--k-min", dest="k_min", type=int, default=None)
    p_norm.add_argument("--k-max", dest="k_max", type=int, default=None)
    p_norm.add_argument("--out")
    p_norm.set_defaults(func=_cmd_norm)

    p_sparse = sub.add_parser("sparse", help="build or verify sparse families")
    group = p_sparse.add_mutually_exclusive_group(required=True)
    group.add_argument("--build", action="store_true")
    group.add_argument("--verify", action="store_true")
    p_sparse.add_argument("--input", action="append", default=[])
    p_sparse.add_argument("--threshold", "-A", type=float, default=None)
    p_sparse.add_argument("--cert", help="certificate JSON (verify)")
    p_sparse.add_argument("--eta", type=float, default=0.5)
    p_sparse.add_argument("--out")
    p_sparse.set_defaults(func=_cmd_sparse)

    p_exp = sub.add_parser("exponents", help="validate and print exponent sets")
    p_exp.add_argument("--n", type=int, required=True)
    p_exp.add_argument("--m", type=int, required=True)
    p_exp.add_argument("--p", required=True,
                       help="comma-separated component exponents")
    p_exp.add_argument("--p0", type=float, required=True)
    p_exp.add_argument("--alpha", type=float, required=True)
    p_exp.add_argument("--beta", type=float, default=None)
    p_exp.add_argument("--regime", default="thm1.1", choices=REGIME_CHOICES)
    p_exp.set_defaults(func=_cmd_exponents)

    p_hed = sub.add_parser("hedberg", help="pointwise-domination ratio summary")
    p_hed.add_argument("--check", action="store_true", required=True)
    p_hed.add_argument("--seed", type=int, default=0)
    p_hed.add_argument("--regime", default="thm1.1",
                       choices=("thm1.1", "thm1.2"))
    p_hed.add_argument("--n", type=int, default=1)
    p_hed.add_argument("--m", type=int, default=2)
    p_hed.add_argument("--level", type=int, default=5)
    p_hed.add_argument("--out")
    p_hed.set_defaults(func=_cmd_hedberg)

    p_run = sub.add_parser("experiment", help="run a trace-inequality suite")
    p_run.add_argument("--regime", required=True, choices=REGIME_CHOICES)
    p_run.add_argument("--config", help="JSON config; overrides flags")
    p_run.add_argument("--out")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--n", type=int, default=None)
    p_run.add_argument("--m", type=int, default=None)
    p_run.add_argument("--level", type=int, default=None)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--coarse-levels", dest="coarse_levels", type=int,
                       default=None)
    p_run.add_argument("--input-family", dest="input_family", default=None)
    p_run.add_argument("--measure-family", dest="measure_family", default=None)
    p_run.add_argument("--cube-mode", dest="cube_mode", default=None,
                       choices=("dyadic-only", "dyadic-plus-shifts"))
    p_run.set_defaults(func=_cmd_experiment)

    p_orc = sub.add_parser("oracle", help="brute-force agreement suite")
    p_orc.add_argument("--check", action="store_true", required=True)
    p_orc.add_argument("--seed", type=int, default=0)
    p_orc.add_argument("--instances", type=int, default=100)
    p_orc.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExponentError as err:
        for v in err.violations:
            print(f"violated: {v}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
