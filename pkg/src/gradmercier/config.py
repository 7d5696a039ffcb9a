"""Experiment configuration: a single TOML file describing one problem.

Sections: [experiment] (kind, comparison), [domain], [operator] (with an
optional [operator.recession] sub-table for the asymptotically convex kind),
[source], [data] (f / psi as ``expr:...`` or ``csv:...`` / ``json:...``),
[solver], [diagnostics], [output], plus a top-level ``seed``.

``parse_config`` -> ``serialize_config`` -> ``parse_config`` is the identity
on the canonical form (the round-trip property the tests pin).
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:                      # py310
    import tomli as _toml

from .calculus import EIGEN, WideStencil
from .driver import OuterConfig
from .errors import ConfigurationError
from .frozen import FrozenConfig
from .grid import DomainShape, ScalarField, field_from_function, load_field_csv, \
    load_field_json
from .expressions import compile_expression
from .operators import (OperatorSpec, asym_convex_operator, bellman_operator,
                        linear_operator, pucci_operator, trace_operator)
from .source import SourceSpec

KIND_FROZEN = "frozen"
KIND_GRAD_MERCIER = "grad_mercier"


@dataclass
class ExperimentConfig:
    seed: int = 0
    kind: str = KIND_GRAD_MERCIER
    compare: str = "none"              # none | exact:<expr> | radial_oracle
    shape: DomainShape = DomainShape.UNIT_SQUARE
    n_list: tuple = (33,)
    operator: OperatorSpec = field(default_factory=trace_operator)
    source: SourceSpec | None = None
    delta0: float | None = None
    delta_min: float = 1e-4
    f_spec: str = "expr:0"
    psi_spec: str = "expr:0"
    frozen: FrozenConfig = field(default_factory=FrozenConfig)
    outer: OuterConfig = field(default_factory=OuterConfig)
    p: float = 4.0
    alpha: float = 0.5
    out_dir: str = "out"
    formats: tuple = ("csv", "json")
    base_dir: str = "."
    source_table: str | None = None        # original path of a tabulated g

    def field_from_spec(self, spec: str, grid) -> ScalarField:
        if spec.startswith("expr:"):
            return field_from_function(grid, compile_expression(spec[5:]))
        if spec.startswith("csv:"):
            return load_field_csv(os.path.join(self.base_dir, spec[4:]), grid)
        if spec.startswith("json:"):
            return load_field_json(os.path.join(self.base_dir, spec[5:]), grid)
        raise ConfigurationError(
            f"data spec must start with 'expr:', 'csv:' or 'json:', got {spec!r}")


def _get(table: dict, key: str, typ, default=None, ctx: str = ""):
    if key not in table:
        if default is not None or key in ("",):
            return default
        return default
    v = table[key]
    if typ is float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if typ is int and isinstance(v, int) and not isinstance(v, bool):
        return int(v)
    if not isinstance(v, typ):
        raise ConfigurationError(f"[{ctx}] {key} has wrong type "
                                 f"({type(v).__name__}, expected {typ.__name__})")
    return v


def _parse_operator(tab: dict, ctx: str = "operator") -> OperatorSpec:
    kind = _get(tab, "kind", str, "trace", ctx)
    if kind == "trace":
        return trace_operator()
    if kind in ("pucci_minus", "pucci_plus"):
        lam = _get(tab, "lambda", float, 1.0, ctx)
        Lam = _get(tab, "Lambda", float, lam, ctx)
        return pucci_operator(lam, Lam, plus=(kind == "pucci_plus"))
    if kind == "linear":
        return linear_operator(
            eps=_get(tab, "eps", float, 0.0, ctx),
            kx=_get(tab, "kx", float, 1.0, ctx),
            ky=_get(tab, "ky", float, 0.0, ctx),
            mat=tuple(_get(tab, "mat", list, [1.0, 0.0, 1.0], ctx)),
        )
    if kind == "bellman":
        mats = _get(tab, "mats", list, None, ctx)
        if not mats:
            raise ConfigurationError(f"[{ctx}] bellman kind needs 'mats'")
        return bellman_operator(mats)
    if kind == "asym_convex":
        rec = _parse_operator(tab.get("recession", {"kind": "trace"}),
                              ctx + ".recession")
        return asym_convex_operator(
            rec,
            kappa=_get(tab, "kappa", float, 0.0, ctx),
            rho0=_get(tab, "rho0", float, 1.0, ctx),
            c0=_get(tab, "c0", float, 0.0, ctx),
            b0=_get(tab, "b0", float, 0.0, ctx),
        )
    raise ConfigurationError(f"[{ctx}] unknown operator kind {kind!r}")


def _parse_source(tab: dict, base_dir: str):
    """Returns (SourceSpec | None, table_path | None)."""
    fam = _get(tab, "family", str, "none", "source")
    if fam == "none":
        return None, None
    kw = dict(rescale_measure=_get(tab, "rescale_measure", bool, False, "source"))
    if fam == "affine":
        return SourceSpec.affine(_get(tab, "a", float, 0.0, "source"),
                                 _get(tab, "b", float, 0.0, "source"), **kw), None
    if fam == "exp_decay":
        return SourceSpec.exp_decay(_get(tab, "a", float, 0.0, "source"),
                                    _get(tab, "b", float, 0.0, "source"), **kw), None
    if fam == "tabulated":
        path = _get(tab, "table", str, None, "source")
        if not path:
            raise ConfigurationError("[source] tabulated family needs 'table'")
        return SourceSpec.from_csv(os.path.join(base_dir, path), **kw), path
    raise ConfigurationError(f"[source] unknown family {fam!r}")


def _parse_mode(text: str):
    if text == "eigen":
        return EIGEN
    if text.startswith("wide:"):
        parts = text.split(":")
        K = int(parts[1])
        arm = int(parts[2]) if len(parts) > 2 else None
        return WideStencil(K, arm)
    raise ConfigurationError(f"[solver] unknown mode {text!r}")


def parse_config(path_or_text, base_dir: str | None = None) -> ExperimentConfig:
    """Parse a TOML experiment description (path or literal text)."""
    if isinstance(path_or_text, (str, os.PathLike)) and os.path.exists(path_or_text):
        base_dir = base_dir or os.path.dirname(os.path.abspath(path_or_text))
        with open(path_or_text, "rb") as fh:
            try:
                raw = _toml.load(fh)
            except _toml.TOMLDecodeError as e:
                raise ConfigurationError(f"config parse error: {e}") from e
    else:
        base_dir = base_dir or "."
        try:
            raw = _toml.loads(path_or_text if isinstance(path_or_text, str)
                              else path_or_text.decode())
        except _toml.TOMLDecodeError as e:
            raise ConfigurationError(f"config parse error: {e}") from e

    exp = raw.get("experiment", {})
    dom = raw.get("domain", {})
    sol = raw.get("solver", {})
    diag = raw.get("diagnostics", {})
    out = raw.get("output", {})
    src_tab = raw.get("source", {})
    data = raw.get("data", {})

    kind = _get(exp, "kind", str, KIND_GRAD_MERCIER, "experiment")
    if kind not in (KIND_FROZEN, KIND_GRAD_MERCIER):
        raise ConfigurationError(f"[experiment] unknown kind {kind!r}")
    compare = _get(exp, "compare", str, "none", "experiment")
    if compare not in ("none", "radial_oracle") and not compare.startswith("exact:"):
        raise ConfigurationError(f"[experiment] unknown compare {compare!r}")

    shape = DomainShape(_get(dom, "shape", str, "unit_square", "domain"))
    if "n_list" in dom:
        n_list = tuple(int(v) for v in _get(dom, "n_list", list, None, "domain"))
    else:
        n_list = (int(_get(dom, "n", int, 33, "domain")),)
    for n in n_list:
        if n < 8:
            raise ConfigurationError(
                f"[domain] n = {n} violates the n >= 8 precondition")

    frozen = FrozenConfig(
        tau=_get(sol, "tau", float, None, "solver"),
        tol_residual=_get(sol, "tol_residual", float, None, "solver"),
        tol_residual_rel=_get(sol, "tol_residual_rel", float, 1e-8, "solver"),
        max_iters=_get(sol, "max_iters", int, 200_000, "solver"),
        mode=_parse_mode(_get(sol, "mode", str, "eigen", "solver")),
    )
    outer = OuterConfig(
        theta_relax=_get(sol, "theta_relax", float, 0.5, "solver"),
        tol_outer=_get(sol, "tol_outer", float, None, "solver"),
        tol_outer_rel=_get(sol, "tol_outer_rel", float, 1e-6, "solver"),
        max_outer=_get(sol, "max_outer", int, 200, "solver"),
        delta0=_get(src_tab, "delta0", float, None, "source"),
        delta_min=_get(src_tab, "delta_min", float, 1e-4, "source"),
    )
    src, table_path = _parse_source(src_tab, base_dir)
    if kind == KIND_GRAD_MERCIER and src is None:
        raise ConfigurationError(
            "[source] grad_mercier experiments need a source family")

    return ExperimentConfig(
        seed=int(raw.get("seed", 0)),
        kind=kind, compare=compare, shape=shape, n_list=n_list,
        operator=_parse_operator(raw.get("operator", {})),
        source=src,
        delta0=outer.delta0, delta_min=outer.delta_min,
        f_spec=_get(data, "f", str, "expr:0", "data"),
        psi_spec=_get(data, "psi", str, "expr:0", "data"),
        frozen=frozen, outer=outer,
        p=_get(diag, "p", float, 4.0, "diagnostics"),
        alpha=_get(diag, "alpha", float, 0.5, "diagnostics"),
        out_dir=_get(out, "directory", str, "out", "output"),
        formats=tuple(_get(out, "formats", list, ["csv", "json"], "output")),
        base_dir=base_dir,
        source_table=table_path,
    )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise ConfigurationError(f"cannot serialize {v!r}")


def _operator_lines(spec: OperatorSpec, prefix: str = "operator"):
    lines = [f"[{prefix}]", f'kind = "{spec.kind}"']
    if spec.kind in ("pucci_minus", "pucci_plus"):
        lines.append(f"lambda = {_fmt(spec.ellipticity.lam)}")
        lines.append(f"Lambda = {_fmt(spec.ellipticity.Lam)}")
    elif spec.kind == "linear":
        lines.append(f"eps = {_fmt(spec.coef_eps)}")
        lines.append(f"kx = {_fmt(spec.coef_kx)}")
        lines.append(f"ky = {_fmt(spec.coef_ky)}")
        lines.append(f"mat = {_fmt(list(spec.coef_mat))}")
    elif spec.kind == "bellman":
        lines.append(f"mats = {_fmt([list(m) for m in spec.bellman_mats])}")
    elif spec.kind == "asym_convex":
        lines.append(f"kappa = {_fmt(spec.kappa)}")
        lines.append(f"rho0 = {_fmt(spec.rho0)}")
        lines.append(f"c0 = {_fmt(spec.c0)}")
        lines.append(f"b0 = {_fmt(spec.b0)}")
        lines.append("")
        lines.extend(_operator_lines(spec.recession_part, prefix + ".recession"))
    return lines


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML form; parse(serialize(parse(t))) == parse(t)."""
    buf = io.StringIO()
    w = buf.write
    w(f"seed = {cfg.seed}\n\n")
    w("[experiment]\n")
    w(f'kind = "{cfg.kind}"\n')
    w(f'compare = {_fmt(cfg.compare)}\n\n')
    w("[domain]\n")
    w(f'shape = "{cfg.shape.value}"\n')
    if len(cfg.n_list) == 1:
        w(f"n = {cfg.n_list[0]}\n\n")
    else:
        w(f"n_list = {_fmt(list(cfg.n_list))}\n\n")
    w("\n".join(_operator_lines(cfg.operator)) + "\n\n")
    w("[source]\n")
    if cfg.source is None:
        w('family = "none"\n')
    else:
        w(f'family = "{cfg.source.family}"\n')
        if cfg.source.family in ("affine", "exp_decay"):
            w(f"a = {_fmt(cfg.source.a)}\n")
            w(f"b = {_fmt(cfg.source.b)}\n")
        elif cfg.source.family == "tabulated":
            w(f"table = {_fmt(cfg.source_table)}\n")
        if cfg.source.rescale_measure:
            w("rescale_measure = true\n")
    if cfg.delta0 is not None:
        w(f"delta0 = {_fmt(cfg.delta0)}\n")
    w(f"delta_min = {_fmt(cfg.delta_min)}\n\n")
    w("[data]\n")
    w(f"f = {_fmt(cfg.f_spec)}\n")
    w(f"psi = {_fmt(cfg.psi_spec)}\n\n")
    w("[solver]\n")
    if cfg.frozen.tau is not None:
        w(f"tau = {_fmt(cfg.frozen.tau)}\n")
    if cfg.frozen.tol_residual is not None:
        w(f"tol_residual = {_fmt(cfg.frozen.tol_residual)}\n")
    w(f"tol_residual_rel = {_fmt(cfg.frozen.tol_residual_rel)}\n")
    w(f"max_iters = {cfg.frozen.max_iters}\n")
    if isinstance(cfg.frozen.mode, WideStencil):
        w(f'mode = "wide:{cfg.frozen.mode.K}:{cfg.frozen.mode.arm_nodes}"\n')
    else:
        w('mode = "eigen"\n')
    w(f"theta_relax = {_fmt(cfg.outer.theta_relax)}\n")
    if cfg.outer.tol_outer is not None:
        w(f"tol_outer = {_fmt(cfg.outer.tol_outer)}\n")
    w(f"tol_outer_rel = {_fmt(cfg.outer.tol_outer_rel)}\n")
    w(f"max_outer = {cfg.outer.max_outer}\n\n")
    w("[diagnostics]\n")
    w(f"p = {_fmt(cfg.p)}\n")
    w(f"alpha = {_fmt(cfg.alpha)}\n\n")
    w("[output]\n")
    w(f"directory = {_fmt(cfg.out_dir)}\n")
    w(f"formats = {_fmt(list(cfg.formats))}\n")
    return buf.getvalue()
