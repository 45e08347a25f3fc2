"""Command-line entry point: ``dualavg <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..certificates import certify
from ..envelope import dom_FLstar_membership, eval_FL, subgrad_FL_on_C
from ..errors import SchemaError, UsageError
from .affine import affine_invariance_harness
from .experiment import EXIT_ILL_DEFINED, EXIT_OK, EXIT_SCHEMA, EXIT_VIOLATION, run_experiment
from .generators import envelope_from_spec, gen_example61, gen_ptoy
from .spec_io import dumps, load_spec, save_spec, write_atomic


def _emit(obj, out):
    text = dumps(obj)
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _solve(args, algo):
    expect = True if args.expect_ill_defined else None
    rep = run_experiment(args.spec, algo, args.iters, args.out, args.format, expect)
    if not args.out:
        sys.stdout.write(dumps(rep.summary()))
    return rep.exit_code


def _certify(args):
    spec = load_spec(args.spec)
    p = spec.build()
    sbar0 = spec.vector("sbar0")
    _emit(certify(p, sbar0).to_json_dict(), args.out)
    return EXIT_OK


def _affine(args):
    spec = load_spec(args.spec)
    p = spec.build()
    res = []
    for t in range(args.trials):
        r = affine_invariance_harness(p, args.seed + t, args.iters,
                                      spec.vector("x_minus1", np.ones(p.n)))
        res.append(r.max_deviation)
    worst = max(res)
    _emit({"spec": spec.name, "trials": args.trials, "iters": args.iters,
           "max_deviation": worst, "deviations": res}, args.out)
    return EXIT_OK if worst <= args.threshold else EXIT_VIOLATION


def _ph_eval(args):
    spec = load_spec(args.spec)
    ext = envelope_from_spec(spec)
    try:
        with open(args.points, encoding="utf-8") as fh:
            q = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"{args.points}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.points}: line {exc.lineno}: {exc.msg}") from None
    out = {"spec": spec.name, "L": ext.L, "z": [], "y": []}
    for z in q.get("z", []):
        r = eval_FL(ext, z, args.tol)
        item = {"z": z, "value": r.value, "gap": r.gap, "coarse": r.coarse,
                "in_C": ext.C.contains(np.asarray(z, dtype=float))}
        if item["in_C"]:
            g = subgrad_FL_on_C(ext, z)
            item["subgradient"] = g.tolist() if isinstance(g, np.ndarray) else None
        out["z"].append(item)
    for y in q.get("y", []):
        out["y"].append({"y": y, "verdict": dom_FLstar_membership(ext, y)})
    _emit(out, args.out)
    return EXIT_OK


def _gen(args):
    if args.kind == "ptoy_positive":
        spec = gen_ptoy(args.seed, args.m, args.n, True)
    elif args.kind == "ptoy_nonneg":
        spec = gen_ptoy(args.seed, args.m, args.n, False)
    else:
        spec = gen_example61(args.seed, args.m, args.n)
    if args.out:
        save_spec(spec, args.out)
    else:
        sys.stdout.write(dumps(spec.to_dict()))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="dualavg", description="Dual averaging toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("solve-da", "solve-mda"):
        s = sub.add_parser(name)
        s.add_argument("--spec", required=True)
        s.add_argument("--iters", type=int, default=1000)
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--expect-ill-defined", action="store_true")
    s = sub.add_parser("certify")
    s.add_argument("--spec", required=True)
    s.add_argument("--out")
    s = sub.add_parser("affine-test")
    s.add_argument("--spec", required=True)
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=5)
    s.add_argument("--threshold", type=float, default=1e-8)
    s.add_argument("--out")
    s = sub.add_parser("ph-eval")
    s.add_argument("--spec", required=True)
    s.add_argument("--points", required=True, help='JSON file {"z": [...], "y": [...]}')
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--out")
    s = sub.add_parser("gen")
    s.add_argument("--kind", choices=("ptoy_positive", "ptoy_nonneg", "example61"), required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--out")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"solve-da": lambda a: _solve(a, "da"), "solve-mda": lambda a: _solve(a, "mda"),
                "certify": _certify, "affine-test": _affine, "ph-eval": _ph_eval, "gen": _gen}
    try:
        return handlers[args.cmd](args)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
