"""Command-line front end: ``orlisov {young-audit,modular,verify,solve}``.

Every command reads one TOML file (``--config``), validates all keys before
doing any work and writes CSV files into ``--out``.  Files are written to a
temporary name and renamed, so a failed run leaves no partial output.

Exit codes: 0 success, 1 checks failed / partial result, 2 configuration
error, 3 refused by the hypothesis gate.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import checks
from .errors import OrlisovError
from .grid import Domain, QuadratureScheme, fixture, from_csv, to_csv
from .modular import full_norm, modular_gagliardo, norm_LM, seminorm_gagliardo
from .operator import WeakFormContext
from .problem import Nonlinearity, validate_hypotheses
from .solver import SolverConfig, provisional_geometry, ring_positivity, solve_two
from .young import (
    AuditReport, YoungFunction, audit_convexity, audit_delta2, audit_integral_representation, audit_Q_condition,
    audit_S_condition, audit_scaling_inequalities, audit_young_inequality, growth_indices,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REFUSED = 0, 1, 2, 3


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


# ---------------------------------------------------------------------------
# configuration

_SCHEMA = {
    "": {"seed", "s", "lambda", "young", "domain", "scheme", "nonlinearity", "solver", "modular", "verify"},
    "young": {"kind", "p", "q", "gamma", "M", "m", "indices"},
    "domain": {"dim", "bounds", "n_cells", "tail_radius"},
    "scheme": {"gauss_order", "diagonal_levels", "tail_rings"},
    "nonlinearity": {"kind", "q", "C0", "C1", "C2"},
    "solver": {"max_iters", "grad_tol", "rel_tol", "armijo_c", "backtrack", "path_points",
               "deform_steps", "refine_iters", "probe_lambda", "c1_samples", "ring_samples"},
    "modular": {"fixture", "input", "scope"},
    "verify": {"samples", "poincare_samples", "lemma2_samples"},
}

# names usable inside custom Young function expressions (argument ``t >= 0``)
_EXPR_NAMES = {name: getattr(np, name) for name in (
    "abs", "exp", "expm1", "log", "log1p", "sqrt", "sin", "cos", "tan", "sinh", "cosh", "tanh",
    "arctan", "power", "minimum", "maximum", "where", "pi", "e")}


def _expr(key: str, text: str):
    if not isinstance(text, str):
        raise ConfigError(f"{key}: expected an expression string")
    try:
        code = compile(text, key, "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{key}: {exc.msg}") from None
    bad = [n for n in code.co_names if n not in _EXPR_NAMES and n != "t"]
    if bad:
        raise ConfigError(f"{key}: unknown name(s) {', '.join(bad)}")

    def rule(t):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "t": t})  # noqa: S307
    return rule


def _get(section: dict, name: str, key: str, kind, default=None, required=False):
    if name not in section:
        if required:
            raise ConfigError(f"missing key '{key}'")
        return default
    val = section[name]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


@dataclass
class RunConfig:
    young: YoungFunction
    domain: Domain
    s: float
    scheme: QuadratureScheme
    nonlinearity: Nonlinearity | None
    lam: float | str
    solver: SolverConfig
    seed: int
    modular: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)


def _check_keys(raw: dict, section: str):
    for k in raw:
        if k not in _SCHEMA[section]:
            raise ConfigError(f"unknown key '{section + '.' if section else ''}{k}'")


def _table(raw: dict, name: str, required: bool) -> dict:
    if name not in raw:
        if required:
            raise ConfigError(f"missing key '{name}'")
        return {}
    if not isinstance(raw[name], dict):
        raise ConfigError(f"{name}: expected a table")
    _check_keys(raw[name], name)
    return raw[name]


def _young(sec: dict) -> YoungFunction:
    kind = _get(sec, "kind", "young.kind", str, required=True)
    if kind == "power":
        return YoungFunction.power(_get(sec, "p", "young.p", float, required=True))
    if kind == "power_sum":
        return YoungFunction.power_sum(_get(sec, "p", "young.p", float, required=True),
                                       _get(sec, "q", "young.q", float, required=True))
    if kind == "bump_power":
        return YoungFunction.bump_power(_get(sec, "gamma", "young.gamma", float, required=True))
    if kind == "custom":
        M = _expr("young.M", _get(sec, "M", "young.M", str, required=True))
        m = _expr("young.m", _get(sec, "m", "young.m", str, required=True))
        idx = _get(sec, "indices", "young.indices", list)
        if idx is not None and len(idx) != 2:
            raise ConfigError("young.indices: expected [m0, m_sup]")
        return YoungFunction.custom(M, m, indices=idx, name="custom", check=False)
    raise ConfigError(f"young.kind: unknown kind {kind!r}")


def _domain(sec: dict) -> Domain:
    dim = _get(sec, "dim", "domain.dim", int, required=True)
    bounds = _get(sec, "bounds", "domain.bounds", list, required=True)
    cells = _get(sec, "n_cells", "domain.n_cells", list, required=True)
    try:
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        cells = tuple(int(n) for n in cells)
    except (TypeError, ValueError):
        raise ConfigError("domain.bounds / domain.n_cells: malformed") from None
    diam = math.hypot(*(b - a for a, b in bounds)) if bounds else 0.0
    tail = _get(sec, "tail_radius", "domain.tail_radius", float, 4.0 * diam)
    return Domain(dim, bounds, cells, tail)


def load_config(raw: dict, seed: int | None = None) -> RunConfig:
    """Validate a parsed TOML document; raises :class:`ConfigError` naming the key."""
    _check_keys(raw, "")
    try:
        young = _young(_table(raw, "young", True))
        domain = _domain(_table(raw, "domain", True))
        s = _get(raw, "s", "s", float, 0.5)
        sch = _table(raw, "scheme", False)
        base = QuadratureScheme.default(domain.dim)
        scheme = QuadratureScheme(
            _get(sch, "gauss_order", "scheme.gauss_order", int, base.gauss_order),
            _get(sch, "diagonal_levels", "scheme.diagonal_levels", int, base.diagonal_levels),
            _get(sch, "tail_rings", "scheme.tail_rings", int, base.tail_rings))
        nls = _table(raw, "nonlinearity", False)
        nl = None
        if nls:
            kind = _get(nls, "kind", "nonlinearity.kind", str, required=True)
            q = _get(nls, "q", "nonlinearity.q", float, required=True)
            if kind == "pure_power":
                nl = Nonlinearity.pure_power(q)
            elif kind == "log_power":
                nl = Nonlinearity.log_power(q)
            else:
                raise ConfigError(f"nonlinearity.kind: unknown kind {kind!r}")
            consts = {c: _get(nls, c, f"nonlinearity.{c}", float) for c in ("C0", "C1", "C2")}
            if any(v is not None for v in consts.values()):
                nl = replace(nl, **{k: v for k, v in consts.items() if v is not None},
                             constants_source="given")
        lam = raw.get("lambda", "auto")
        if isinstance(lam, str) and lam != "auto" or isinstance(lam, bool):
            raise ConfigError("lambda: expected a number or \"auto\"")
        if not isinstance(lam, str):
            lam = float(lam)
        seed_val = _get(raw, "seed", "seed", int, 0) if seed is None else seed
        sol = _table(raw, "solver", False)
        defaults = SolverConfig()
        kwargs = {}
        for key in _SCHEMA["solver"]:
            default = getattr(defaults, key)
            kind = int if isinstance(default, int) else float
            val = _get(sol, key, f"solver.{key}", kind, default)
            kwargs[key] = val
        solver = SolverConfig(seed=seed_val, **kwargs)
        mod = _table(raw, "modular", False)
        ver = _table(raw, "verify", False)
        for k, v in ver.items():
            _get(ver, k, f"verify.{k}", int)
        for k in ("fixture", "input", "scope"):
            _get(mod, k, f"modular.{k}", str)
    except OrlisovError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(young, domain, s, scheme, nl, lam, solver, seed_val, mod, ver)


def read_config(path: str | None, seed: int | None = None) -> RunConfig:
    if path is None:
        raise ConfigError("missing --config")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    return load_config(raw, seed)


# ---------------------------------------------------------------------------
# output

def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(c) for c in r])
    return buf.getvalue()


def write_atomic(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    target = out / name
    os.replace(tmp, target)
    return target


# ---------------------------------------------------------------------------
# commands

def _audit_rows(reports):
    return [(r.name, r.samples, r.worst_margin, r.passed) for r in reports]


def cmd_young_audit(cfg: RunConfig, args) -> int:
    M = cfg.young
    idx = growth_indices(M, method="sample")
    reports = []
    closed = M.closed_form_indices()
    if closed is not None:
        err = max(abs(idx.m0 - closed[0]), abs(idx.m_sup - closed[1]))
        reports.append(AuditReport("growth_indices", err <= 1e-4, 1e-4 - err, 4096))
    print(f"m0={fmt(idx.m0)} m_sup={fmt(idx.m_sup)}")
    reports += [audit_delta2(M), audit_S_condition(M), audit_scaling_inequalities(M, seed=cfg.seed)]
    if cfg.nonlinearity is not None:
        reports.append(audit_Q_condition(M, cfg.nonlinearity.q))
    for r in reports:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} (margin {r.worst_margin:.3g})")
    write_atomic(args.out, "young_audit.csv",
                 _csv_text(["name", "samples", "worst_margin", "pass"], _audit_rows(reports)))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _input_function(cfg: RunConfig, args):
    path = args.input or cfg.modular.get("input")
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"input: {exc}") from None
        try:
            return from_csv(text, cfg.domain)
        except OrlisovError as exc:
            raise ConfigError(f"input: {exc}") from None
    name = args.fixture or cfg.modular.get("fixture", "bubble")
    try:
        return fixture(name, cfg.domain)
    except OrlisovError as exc:
        raise ConfigError(f"fixture: {exc}") from None


def _modular_rows(cfg: RunConfig, u, scheme, suffix=""):
    M, s = cfg.young, cfg.s
    dom = modular_gagliardo(M, u, s, "domain", scheme)
    ext = modular_gagliardo(M, u, s, "extended", scheme)
    return [
        ("modular_domain" + suffix, dom.value),
        ("modular_extended" + suffix, ext.value),
        ("tail_contribution" + suffix, ext.tail_contribution),
        ("norm_LM" + suffix, norm_LM(M, u, scheme).norm),
        ("seminorm" + suffix, seminorm_gagliardo(M, u, s, "extended", scheme).norm),
        ("full_norm" + suffix, full_norm(M, u, s, "extended", scheme)),
    ]


def cmd_modular(cfg: RunConfig, args) -> int:
    u = _input_function(cfg, args)
    sch = cfg.scheme
    print(f"scheme gauss_order={sch.gauss_order} diagonal_levels={sch.diagonal_levels} "
          f"tail_rings={sch.tail_rings} s={fmt(cfg.s)} tail_radius={fmt(cfg.domain.tail_radius)}")
    rows = _modular_rows(cfg, u, sch)
    for k in range(1, args.refine + 1):
        rows += _modular_rows(cfg, u, sch.refined(k), f"@refine{k}")
    for name, val in rows:
        print(f"{name},{fmt(val)}")
    write_atomic(args.out, "modular.csv", _csv_text(["quantity", "value"], rows))
    return EXIT_OK


def verify_reports(cfg: RunConfig, wanted=None):
    """Run the property suite; ``wanted`` filters by row-name prefix."""
    n = cfg.verify.get("samples", 20)
    n_l2 = cfg.verify.get("lemma2_samples", 100)
    n_p = cfg.verify.get("poincare_samples", 200)
    M, seed = cfg.young, cfg.seed
    ctx = WeakFormContext(M, cfg.s, cfg.domain, cfg.scheme)

    def want(*names):
        return wanted is None or any(nm.startswith(w) for nm in names for w in wanted)

    out = []
    young_checks = [
        ("young_convexity", lambda: audit_convexity(M, seed=seed)),
        ("young_integral", lambda: audit_integral_representation(M)),
        ("young_delta2", lambda: audit_delta2(M)),
        ("young_S", lambda: audit_S_condition(M)),
        ("young_scaling", lambda: audit_scaling_inequalities(M, seed=seed)),
        ("young_inequality", lambda: audit_young_inequality(M, seed=seed)),
    ]
    for name, run in young_checks:
        if want(name):
            r = run()
            out.append(AuditReport(name, r.passed, r.worst_margin, r.samples))
    if want("luxemburg"):
        out.append(checks.check_luxemburg(ctx, n, seed))
    if want("lemma2", "lemma2_i", "lemma2_ii", "lemma2_iii"):
        out += [r for r in checks.check_lemma2(ctx, n_l2, seed, indices=M.closed_form_indices())
                if want(r.name)]
    if want("norm_axioms"):
        out.append(checks.check_norm_axioms(ctx, n, seed))
    if want("gradient_fd"):
        out.append(checks.check_directional_derivative(ctx, n, seed))
    if want("monotonicity"):
        out.append(checks.check_monotonicity(ctx, 5 * n, seed))
    if want("convexity_inequality"):
        out.append(checks.check_convexity_inequality(ctx, 5 * n, seed))
    if want("poincare"):
        out.append(checks.check_poincare(M, cfg.domain, cfg.s, n_p, seed, cfg.scheme))
    nl = cfg.nonlinearity
    if nl is not None:
        if want("hypotheses"):
            r = validate_hypotheses(nl, M, dim=cfg.domain.dim)
            out.append(AuditReport("hypotheses", r.passed, r.worst_margin, r.samples))
        if want("energy_gradient_fd"):
            out.append(checks.check_energy_gradient(ctx, nl, 0.1, n, seed))
        if want("ring_positivity", "ring_positivity_lower"):
            geo = provisional_geometry(ctx, nl, cfg.solver).geometry
            if geo is None:
                rows = [AuditReport(nm, False, math.nan, 0, {"reason": "provisional minimizer is zero"})
                        for nm in ("ring_positivity", "ring_positivity_lower")]
            else:
                probe = ring_positivity(ctx, nl, 0.5 * geo.lambda_star, geo.rho, cfg.solver.ring_samples, seed)
                m, k = probe.min_energy, len(probe.energies)
                rows = [AuditReport("ring_positivity", m >= 0.5 * geo.alpha, m - 0.5 * geo.alpha, k),
                        AuditReport("ring_positivity_lower", m >= geo.alpha_lower, m - geo.alpha_lower, k)]
            out += [r for r in rows if want(r.name)]
    return out


def cmd_verify(cfg: RunConfig, args) -> int:
    reports = verify_reports(cfg, args.property or None)
    if not reports:
        raise ConfigError(f"--property: no property matches {args.property}")
    for r in reports:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} ({r.samples} samples, margin {r.worst_margin:.3g})")
    write_atomic(args.out, "verify.csv",
                 _csv_text(["name", "samples", "worst_margin", "pass"], _audit_rows(reports)))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_solve(cfg: RunConfig, args) -> int:
    if cfg.nonlinearity is None:
        raise ConfigError("missing key 'nonlinearity'")
    ctx = WeakFormContext(cfg.young, cfg.s, cfg.domain, cfg.scheme)
    rep = solve_two(ctx, cfg.nonlinearity, cfg.solver, cfg.lam, force=args.force)
    for key, val in rep.rows():
        print(f"{key}: {fmt(val)}")
    if rep.u1 is not None:
        write_atomic(args.out, "solution_u1.csv", to_csv(rep.u1))
    if rep.u2 is not None:
        write_atomic(args.out, "solution_u2.csv", to_csv(rep.u2))
    write_atomic(args.out, "report.csv", _csv_text(["key", "value"], rep.rows()))
    if rep.status == "refused":
        return EXIT_REFUSED
    return EXIT_OK if rep.success else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--force", action="store_true", help="run solve even when the gate refuses")

    p = argparse.ArgumentParser(prog="orlisov", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("young-audit", parents=[common], help="structural checks of the Young function")
    pm = sub.add_parser("modular", parents=[common], help="modulars and norms of one function")
    pm.add_argument("--fixture", help="built-in fixture name (bubble, hat, sine1, ..., zero)")
    pm.add_argument("--input", help="function CSV (x[,y],u) on the configured grid")
    pm.add_argument("--refine", type=int, default=0, help="extra rows at k refined schemes")
    pv = sub.add_parser("verify", parents=[common], help="property suite")
    pv.add_argument("--property", action="append", help="only rows whose name starts with this (repeatable)")
    sub.add_parser("solve", parents=[common], help="two critical points of the energy")
    return p


_COMMANDS = {"young-audit": cmd_young_audit, "modular": cmd_modular, "verify": cmd_verify, "solve": cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config, args.seed)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"orlisov: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrlisovError as exc:
        print(f"orlisov: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
