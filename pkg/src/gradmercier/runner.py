"""Config-driven experiment execution: solve, diagnose, write artifacts."""

from __future__ import annotations

import json
import os
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig, KIND_FROZEN
from .diagnostics import compute_norm_report
from .driver import delta_continuation, radial_oracle, sup_diff
from .errors import ConfigurationError
from .expressions import compile_expression, compile_radial
from .frozen import sandwich_check, solve_frozen
from .grid import (DomainShape, build_grid, constant_field, save_field_csv,
                   save_field_json)
from .source import grad_mercier_source


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _residual_csv(path, history):
    with open(path, "w") as fh:
        fh.write("iter,residual\n")
        for i, r in enumerate(history):
            fh.write(f"{i},{r:.17g}\n")


def run_experiment(cfg: ExperimentConfig, out_root: str | None = None) -> dict:
    """Execute the experiment over cfg.n_list; returns the summary dict.

    Artifacts land in ``<out_root>/<out_dir>/n_<n>/``; the summary (including
    comparison errors and refinement ratios) is also written at the top level.
    """
    out_root = out_root or os.environ.get("GRADMERCIER_OUT", ".")
    out_base = os.path.join(out_root, cfg.out_dir)
    os.makedirs(out_base, exist_ok=True)

    summary = {"kind": cfg.kind, "compare": cfg.compare, "runs": []}
    errors = []
    for n in cfg.n_list:
        run_dir = os.path.join(out_base, f"n_{n}")
        os.makedirs(run_dir, exist_ok=True)
        grid = build_grid(cfg.shape, n)
        f = cfg.field_from_spec(cfg.f_spec, grid)
        psi = cfg.field_from_spec(cfg.psi_spec, grid)

        trace = None
        if cfg.kind == KIND_FROZEN:
            u, rep = solve_frozen(cfg.operator, f, psi, cfg.frozen)
            G_u = constant_field(grid, 0.0)
            extra = {}
        else:
            ocfg = replace(cfg.outer, delta0=cfg.delta0, delta_min=cfg.delta_min)
            u, trace, info = delta_continuation(cfg.operator, cfg.source, f,
                                                psi, ocfg, cfg.frozen)
            rep = info["report"]
            G_u = grad_mercier_source(u, replace(cfg.source, delta=0.0))
            extra = {"self_residual": info["self_residual"],
                     "level_deltas": trace.level_deltas,
                     "level_diffs": trace.level_diffs,
                     "cauchy_ok": trace.cauchy_ok,
                     "warnings": trace.warnings}

        norms = compute_norm_report(u, psi, f, G_u, cfg.p, cfg.alpha,
                                    seed=cfg.seed)
        rhs_eff = f if cfg.kind == KIND_FROZEN else None
        sandwich = None
        if rhs_eff is not None:
            sandwich = sandwich_check(u, cfg.operator, rhs_eff,
                                      tol=rep.tol_residual)

        if "csv" in cfg.formats:
            save_field_csv(u, os.path.join(run_dir, "field.csv"))
            if rep.residual_history is not None:
                _residual_csv(os.path.join(run_dir, "residuals.csv"),
                              rep.residual_history)
            if trace is not None:
                trace.to_csv(os.path.join(run_dir, "trace.csv"))
        if "json" in cfg.formats:
            save_field_json(u, os.path.join(run_dir, "field.json"))

        run_info = {"n": n, "h": grid.h, "report": rep.to_dict(),
                    "norms": norms.to_dict(), **extra}
        if sandwich is not None:
            run_info["sandwich"] = {
                "passed": sandwich.passed,
                "upper_margin": sandwich.upper_margin,
                "lower_margin": sandwich.lower_margin,
            }

        err = _compare_error(cfg, grid, u)
        if err is not None:
            run_info["error_vs_reference"] = err
            errors.append((n, err))
        _write_json(os.path.join(run_dir, "report.json"), run_info)
        summary["runs"].append(run_info)

    if len(errors) >= 2:
        ratios = [errors[i][1] / errors[i + 1][1]
                  for i in range(len(errors) - 1) if errors[i + 1][1] > 0]
        summary["error_ratios"] = ratios
    _write_json(os.path.join(out_base, "summary.json"), summary)
    return summary


def _compare_error(cfg: ExperimentConfig, grid, u):
    if cfg.compare == "none":
        return None
    if cfg.compare.startswith("exact:"):
        fn = compile_expression(cfg.compare[6:])
        exact = fn(grid.interior_x, grid.interior_y)
        return float(np.abs(u.interior - exact).max())
    if cfg.compare == "radial_oracle":
        if grid.shape is not DomainShape.UNIT_DISK:
            raise ConfigurationError("radial_oracle comparison needs the disk")
        if not cfg.f_spec.startswith("expr:"):
            raise ConfigurationError("radial_oracle needs an expression for f")
        prof = radial_oracle(cfg.source, compile_radial(cfg.f_spec[5:]))
        return sup_diff(u, prof.field_on(grid))
    raise ConfigurationError(f"unknown compare {cfg.compare!r}")
