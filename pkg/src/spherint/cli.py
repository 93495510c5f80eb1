"""Batch command-line frontend.

Every command builds its whole table before printing anything, so a failure
never leaves a partial table on stdout. Errors are one line on stderr.
"""

from __future__ import annotations

import argparse
import io
import csv
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .asymptote import (
    INTERIOR,
    DiracDegenerate,
    clt_prefactor,
    finite_n_leading_term,
    rank_one_limit,
    small_theta_integral,
)
from .measure import AtomicMeasure, MeasureError, bernoulli, dirac, parse_measure_source, quantile_discretize
from .montecarlo import (
    METHODS,
    McConfig,
    additivity_experiment,
    mc_log_integral,
    mc_prefactor_ratio,
)
from .numerics import DEFAULT_TOL, NumericsError, ToleranceConfig
from .ratefn import g_pieces, legendre_sup, shift_identity_check, t_rate
from .transform import DomainError, domain, hilbert, k_transform, q_transform, r_transform

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

DOMAIN = "DOMAIN"
DIRAC = "DIRAC"
NA = "NA"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def fmt(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, bool, np.bool_)) or value is None:
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    x = float(value)
    if not math.isfinite(x):
        return fmt(x)
    # repr of a float is the shortest round-tripping string; json reuses it
    return x


def render(tables: dict[str, tuple[list[str], list[list[Any]]]], fmt_name: str) -> str:
    if fmt_name == "json":
        payload = {name: [dict(zip(cols, row)) for row in rows] for name, (cols, rows) in tables.items()}
        if len(payload) == 1:
            payload = next(iter(payload.values()))
        return json.dumps(_jsonable(payload), indent=2) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for i, (cols, rows) in enumerate(tables.values()):
        if i:
            out.write("\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return out.getvalue()


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid {text!r} must be start:stop:count")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid {text!r} must be start:stop:count") from None
    if n < 1:
        raise UsageError("grid count must be >= 1")
    return [float(x) for x in np.linspace(a, b, n)]


def parse_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None
    if not values:
        raise UsageError("empty value list")
    return values


def _values(args, grid_attr: str, list_attr: str, default: list[float]) -> list[float]:
    grid, explicit = getattr(args, grid_attr, None), getattr(args, list_attr, None)
    if grid and explicit:
        raise UsageError(f"give either --{grid_attr.replace('_', '-')} or --{list_attr.replace('_', '-')}")
    if grid:
        return parse_grid(grid)
    if explicit:
        return parse_list(explicit)
    return default


def _tolerances(args) -> ToleranceConfig:
    pairs: list[str] = []
    if args.tol_file:
        try:
            with open(args.tol_file, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read tolerance file: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("tolerance file must hold a JSON object")
        pairs += [f"{k}={v}" for k, v in data.items()]
    pairs += args.tol or []
    try:
        return ToleranceConfig.from_pairs(pairs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPHERINT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SPHERINT_SEED={env!r} is not an integer") from None


def _measures(args, count: int | None = None) -> list[AtomicMeasure]:
    sources = args.measure or []
    if not sources:
        raise UsageError("at least one --measure is required")
    if count is not None and len(sources) != count:
        raise UsageError(f"this command needs exactly {count} --measure argument(s)")
    return [parse_measure_source(s) for s in sources]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_transform(args, tol: ToleranceConfig):
    mu = _measures(args, 1)[0]
    dom = domain(mu)
    gammas = _values(args, "gamma_grid", "gamma", [float(x) for x in np.linspace(-1.0, 1.0, 9)])
    rows = []
    for g in gammas:
        branch = "upper" if g > 0 else ("lower" if g < 0 else "none")
        if not (dom.h_min <= g <= dom.h_max):
            rows.append([g, branch, DOMAIN, DOMAIN, DOMAIN])
            continue
        r = r_transform(mu, g, tol)
        if g == 0:
            k = DOMAIN
        elif dom.contains_gamma(g):
            k = k_transform(mu, g, tol)
        else:
            k = dom.lambda_max if g > 0 else dom.lambda_min
        if mu.is_dirac or not dom.contains_alpha(r):
            resid = 0.0 if mu.is_dirac or g == 0 else NA
        else:
            resid = abs(q_transform(mu, r, tol) - g)
        rows.append([g, branch, k, r, resid])
    return {"transform": (["gamma", "branch", "k", "r", "q_roundtrip_residual"], rows)}


def cmd_limit(args, tol: ToleranceConfig):
    mu = _measures(args, 1)[0]
    thetas = _values(args, "theta_grid", "theta", [float(x) for x in np.linspace(-1.0, 1.0, 9)])
    rows = []
    for t in thetas:
        res = rank_one_limit(mu, t, args.beta, tol)
        z: Any = NA
        pref: Any = NA
        if mu.is_dirac:
            z = pref = DIRAC
        elif res.regime == INTERIOR and args.beta == 1:
            p = clt_prefactor(mu, t, tol)
            z, pref = p.z_value, p.prefactor
        rows.append([t, res.value, res.v_theta, res.regime, z, pref])
    return {"limit": (["theta", "value", "v", "regime", "z", "prefactor"], rows)}


def cmd_rate(args, tol: ToleranceConfig):
    mu = _measures(args, 1)[0]
    lo, hi = mu.lower, mu.upper
    default = [float(x) for x in np.linspace(lo, hi, 23)[1:-1]] if hi > lo else [lo]
    alphas = _values(args, "alpha_grid", "alpha", default)
    rate_rows = []
    for a in alphas:
        p = t_rate(mu, a, tol)
        rate_rows.append([a, p.t_value, p.piece])
    tables = {"rate": (["alpha", "t", "piece"], rate_rows)}
    if args.theta_grid or args.theta:
        rows = []
        for t in _values(args, "theta_grid", "theta", []):
            value, argmax = legendre_sup(mu, t, tol)
            g, g1, g2 = g_pieces(mu, t, tol)
            rows.append([t, value, argmax, g, g1, g2])
        tables["legendre"] = (["theta", "legendre", "argmax", "g", "g1", "g2"], rows)
    return tables


def _log_integral_oracle(spectrum, theta: float, beta: int, tol: ToleranceConfig) -> float:
    lead = finite_n_leading_term(spectrum, theta, beta, tol)
    emp = spectrum.empirical()
    if emp.is_dirac:
        return theta * float(emp.positions[0])
    if beta == 1:
        return lead + math.log(clt_prefactor(emp, theta, tol).prefactor) / spectrum.n
    return lead


def cmd_mc(args, tol: ToleranceConfig):
    mu = _measures(args, 1)[0]
    thetas = _values(args, "theta_grid", "theta", [0.05, 0.1, 0.2])
    n = args.n or 200
    if n < 2:
        raise UsageError("--n must be >= 2 for Monte Carlo")
    samples = args.samples or 20000
    seed = _seed(args)
    spectrum = quantile_discretize(mu, n)
    cfg = McConfig(samples=samples, seed=seed, beta=args.beta, method=args.method or "tilted", chunks=args.chunks)
    rows = []
    for t in thetas:
        if args.prefactor:
            est = mc_prefactor_ratio(spectrum, t, cfg, tol)
            emp = spectrum.empirical()
            oracle = 1.0 if emp.is_dirac else clt_prefactor(emp, t, tol).prefactor
        else:
            est = mc_log_integral(spectrum, t, cfg, tol)
            oracle = 0.0 if t == 0 else _log_integral_oracle(spectrum, t, args.beta, tol)
        diff = est.value - oracle
        if est.std_error > 0:
            zscore = diff / est.std_error
        else:
            zscore = 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(oracle)) else math.copysign(math.inf, diff)
        rows.append([t, est.value, est.std_error, oracle, zscore])
    return {"mc": (["theta", "estimate", "std_error", "oracle", "z_score"], rows)}


def cmd_freeconv(args, tol: ToleranceConfig):
    mu_a, mu_b = _measures(args, 2)
    thetas = _values(args, "theta_grid", "theta", [0.05, 0.1, 0.15, 0.2])
    n = args.n or 200
    rep = additivity_experiment(mu_a, mu_b, n, thetas, args.reps, _seed(args),
                                eigensolver=args.eigensolver, tol=tol)
    rows = []
    for i, t in enumerate(rep.thetas):
        var = rep.std_limit[i] ** 2
        rows.append([t, rep.mean_limit[i], rep.target[i], rep.gap[i], rep.std_limit[i], var, var * n,
                     rep.excluded[i]])
    r_rows = [[g, e, tg, gap] for g, e, tg, gap in zip(rep.gammas, rep.r_empirical, rep.r_target, rep.r_gap)]
    return {
        "additivity": (["theta", "mean_limit", "target", "gap", "std", "variance", "variance_times_n",
                        "excluded"], rows),
        "r_additivity": (["gamma", "r_empirical", "r_target", "gap"], r_rows),
    }


def _selftest_checks(tol: ToleranceConfig):
    b = bernoulli()
    checks = []

    def k_roundtrip():
        worst = 0.0
        for g in np.linspace(-2.0, 2.0, 17):
            if g != 0:
                worst = max(worst, abs(hilbert(b, k_transform(b, g, tol)) - g))
        return worst <= 1e-10, worst

    def r_monotone():
        vals = [r_transform(b, g, tol) for g in np.linspace(-2.0, 2.0, 41)]
        return bool(np.all(np.diff(vals) > 0)), float(np.min(np.diff(vals)))

    def q_roundtrip():
        worst = max(abs(r_transform(b, q_transform(b, a, tol), tol) - a) for a in np.linspace(-0.9, 0.9, 19))
        return worst <= 1e-8, worst

    def interior_identity():
        worst = max(abs(small_theta_integral(b, t, 1, tol) - rank_one_limit(b, t, 1, tol).value)
                    for t in (0.1, 0.3, 0.6))
        return worst <= 1e-8, worst

    def shift_identity():
        ok = all(shift_identity_check(b, a, tol) for a in (-0.6, -0.2, 0.3, 0.7))
        return ok, 0.0 if ok else 1.0

    def legendre():
        worst = max(abs(legendre_sup(b, t, tol)[0] - rank_one_limit(b, t, 1, tol).value) for t in (-0.4, 0.2))
        return worst <= 1e-6, worst

    def dirac_exact():
        spec = quantile_discretize(dirac(1.25), 20)
        est = mc_log_integral(spec, 0.3, McConfig(64, seed=1), tol)
        err = abs(est.value - 0.375)
        return err <= 1e-14 and est.std_error == 0, err

    checks = [("k_roundtrip", k_roundtrip), ("r_monotone", r_monotone), ("q_roundtrip", q_roundtrip),
              ("interior_identity", interior_identity), ("shift_identity", shift_identity),
              ("legendre_duality", legendre), ("dirac_exact", dirac_exact)]
    return checks


def cmd_selftest(args, tol: ToleranceConfig):
    rows = []
    for name, check in _selftest_checks(tol):
        try:
            ok, metric = check()
        except (DomainError, NumericsError, ArithmeticError, ValueError) as exc:
            ok, metric = False, f"error: {exc}".replace("\n", " ")
        rows.append([name, "pass" if ok else "fail", metric])
    return {"selftest": (["check", "status", "metric"], rows)}


COMMANDS = {
    "transform": cmd_transform,
    "limit": cmd_limit,
    "rate": cmd_rate,
    "mc": cmd_mc,
    "freeconv": cmd_freeconv,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--measure", action="append", help="measure JSON file or builtin:NAME[:k=v,...]")
    common.add_argument("--theta-grid", help="start:stop:count")
    common.add_argument("--theta", help="comma-separated theta values")
    common.add_argument("--beta", type=int, choices=(1, 2), default=1)
    common.add_argument("--n", type=int, help="matrix dimension for Monte-Carlo commands")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int, help="defaults to $SPHERINT_SEED, then 0")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol", action="append", metavar="KEY=VAL", help="tolerance override (repeatable)")
    common.add_argument("--tol-file", help="JSON object of tolerance overrides")

    parser = _Parser(prog="spherint", description="Asymptotics of rank-one spherical integrals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("transform", parents=[common], help="K, R and Q transforms on a gamma grid")
    p.add_argument("--gamma-grid")
    p.add_argument("--gamma")
    sub.add_parser("limit", parents=[common], help="limit of (1/N) log I_N over a theta grid")
    p = sub.add_parser("rate", parents=[common], help="rate function and Legendre pieces")
    p.add_argument("--alpha-grid")
    p.add_argument("--alpha")
    p = sub.add_parser("mc", parents=[common], help="Monte-Carlo estimates against the asymptotic oracle")
    p.add_argument("--chunks", type=int, default=4)
    p.add_argument("--prefactor", action="store_true", help="estimate the second-order prefactor instead")
    p = sub.add_parser("freeconv", parents=[common], help="additivity and concentration under free convolution")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--eigensolver", choices=("jacobi", "lapack"), default="jacobi")
    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    return parser


_VALUE_FLAGS = {"--theta-grid", "--theta", "--gamma-grid", "--gamma", "--alpha-grid", "--alpha"}


def _attach_negative_values(argv: Sequence[str]) -> list[str]:
    """Rewrite ``--theta -1:1:5`` as ``--theta=-1:1:5`` so argparse does not
    mistake a negative value for an option."""
    out, items, i = [], list(argv), 0
    while i < len(items):
        tok = items[i]
        if tok in _VALUE_FLAGS and i + 1 < len(items) and items[i + 1].startswith("-"):
            out.append(f"{tok}={items[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        tol = _tolerances(args)
        tables = COMMANDS[args.command](args, tol)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeasureError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"input error: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, DiracDegenerate, ArithmeticError, NumericsError, ValueError) as exc:
        print(f"domain error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_DOMAIN
    sys.stdout.write(render(tables, args.format))
    if args.command == "selftest":
        failed = [row[0] for row in tables["selftest"][1] if row[1] != "pass"]
        return EXIT_FAIL if failed else EXIT_OK
    return EXIT_OK
