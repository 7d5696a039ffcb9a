"""Command-line interface.

    gradmercier solve <config.toml> [--out DIR]
    gradmercier verify [--json PATH] [--seed N] [--criteria 1,2,...]
    gradmercier norms <field.csv|field.json> [--p P] [--alpha A]
    gradmercier oracle radial <config.toml> [--out DIR] [--n-r N]

Exit codes: 0 success, 1 solver/criterion failure, 2 configuration error.
The output root defaults to the GRADMERCIER_OUT environment variable (else
the current directory).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import acceptance
from .config import parse_config
from .diagnostics import c01_norm, holder_gradient, lp_norm, pbmo_of_field, \
    pbmo_of_hessian, w2p_norm
from .errors import ConfigurationError, GradMercierError
from .expressions import compile_radial
from .driver import radial_oracle
from .grid import load_field_csv, load_field_json
from .runner import run_experiment

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _cmd_solve(args) -> int:
    cfg = parse_config(args.config)
    summary = run_experiment(cfg, out_root=args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_verify(args) -> int:
    numbers = None
    if args.criteria:
        numbers = tuple(int(v) for v in args.criteria.split(","))
    results, ok = acceptance.run_all(seed=args.seed, numbers=numbers)
    print()
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"passed": ok,
                       "criteria": [r.to_dict() for r in results]}, fh,
                      indent=2)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_norms(args) -> int:
    path = args.field
    if path.endswith(".json"):
        u = load_field_json(path)
    else:
        u = load_field_csv(path)
    report = {
        "lp": lp_norm(u, args.p),
        "w2p": w2p_norm(u, args.p),
        "c01": c01_norm(u),
        "holder_grad": holder_gradient(u, args.alpha),
        "pbmo": pbmo_of_field(u, args.p),
        "pbmo_d2": pbmo_of_hessian(u, args.p),
        "p": args.p,
        "alpha": args.alpha,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    if args.what != "radial":
        raise ConfigurationError(f"unknown oracle {args.what!r}")
    cfg = parse_config(args.config)
    if cfg.source is None:
        raise ConfigurationError("radial oracle needs a [source] family")
    if not cfg.f_spec.startswith("expr:"):
        raise ConfigurationError("radial oracle needs f as an expression")
    prof = radial_oracle(cfg.source, compile_radial(cfg.f_spec[5:]),
                         n_r=args.n_r)
    out_root = args.out or os.environ.get("GRADMERCIER_OUT", ".")
    out_dir = os.path.join(out_root, cfg.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "radial_oracle.csv")
    with open(path, "w") as fh:
        fh.write("r,u,du\n")
        for r, u, du in zip(prof.r, prof.u, prof.du):
            fh.write(f"{r:.17g},{u:.17g},{du:.17g}\n")
    print(json.dumps({"profile": path, "u_center": float(prof.u[0]),
                      "max_abs": prof.max_abs()}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradmercier",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output root directory")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--json", default=None, help="write a JSON summary here")
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--criteria", default=None,
                   help="comma-separated criterion numbers (default: all)")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("norms", help="norm report for a stored field")
    p.add_argument("field")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(fn=_cmd_norms)

    p = sub.add_parser("oracle", help="independent verification oracles")
    p.add_argument("what", choices=["radial"])
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.add_argument("--n-r", type=int, default=20_000)
    p.set_defaults(fn=_cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GradMercierError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
