"""Command line front end: ``bchaos {gamma,space,integral,spectral,verify,report}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .chaos import GeneralizedFunctional
from .errors import BChaosError
from .gamma import enumerate_gamma_n, gamma_size, weight, weight_series_envelope, weight_series_sum
from .integral import spectral_integral
from .operators import write_scaled_csv
from .report import SCHEMA, Report, bundle, dumps, results_table
from .space import SYMMETRIC, ThetaSequence, atom_probabilities, sample_codes, z_table
from .spectral import PI0_DENSITY
from .suites import SUITES, RunConfig, run_suite

DEFAULT_MAX_LEVEL = 20
INTEGRAL_SUITES = ("linearity", "positivity", "factorization", "regularity", "convergence")
SPECTRAL_SUITES = ("axioms", "density")


class UsageError(Exception):
    pass


def max_level() -> int:
    raw = os.environ.get("BC_MAX_LEVEL", str(DEFAULT_MAX_LEVEL))
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"BC_MAX_LEVEL must be an integer, got {raw!r}") from None


def load_theta(spec: str) -> ThetaSequence:
    """``symmetric`` or a JSON file holding ``"symmetric"`` or a list of probabilities."""
    if spec == "symmetric":
        return SYMMETRIC
    try:
        obj = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read theta file {spec!r}: {exc}") from None
    if isinstance(obj, dict):
        obj = obj.get("theta")
    if obj != "symmetric" and not isinstance(obj, list):
        raise UsageError("theta file must hold \"symmetric\" or a list of probabilities")
    return ThetaSequence.from_json(obj)


def make_config(args) -> RunConfig:
    cap = max_level()
    for name in ("level", "cylinder_level"):
        value = getattr(args, name, None)
        if value is not None and not 0 <= value <= cap:
            raise UsageError(f"--{name.replace('_', '-')} {value} is outside 0..{cap} (BC_MAX_LEVEL)")
    p, q = getattr(args, "p", None), getattr(args, "q", None)
    if p is not None and p < 0:
        raise UsageError("--p must be nonnegative")
    if p is not None and q is not None and not q > p + 0.5:
        raise UsageError(f"need q > p + 1/2 for the operator bounds (got p = {p}, q = {q})")
    r = getattr(args, "r", None)
    return RunConfig(
        seed=args.seed,
        level=args.level,
        cylinder_level=getattr(args, "cylinder_level", None),
        theta=load_theta(getattr(args, "theta", "symmetric")),
        p=p,
        q=q,
        r=None if r is None else tuple(r),
        trials=getattr(args, "trials", 100),
    )


def emit(reports: list[Report], cfg: RunConfig, args, command: str) -> int:
    config = {"command": command, **cfg.echo()}
    doc = bundle(reports, config, timing=args.timing)
    for r in sorted(reports, key=Report.sort_key):
        print(r.line())
    status = "all checks passed" if doc["passed"] else "some checks FAILED"
    print(f"{len(reports)} reports, {status}")
    if args.out:
        Path(args.out).write_text(dumps(doc))
    return 0 if doc["passed"] else 1


# -- verbs -------------------------------------------------------------------

def cmd_gamma(args) -> int:
    level = args.level if args.level is not None else 20
    if level > max_level():
        raise UsageError(f"--level {level} exceeds BC_MAX_LEVEL = {max_level()}")
    if args.action == "sum":
        for r in args.r or [2.0]:
            total = weight_series_sum(r, level)
            print(f"r={r:g} level={level} sum={total:.17g} envelope={weight_series_envelope(r):.17g}")
        return 0
    if level > 10:
        raise UsageError("listing is limited to level 10")
    for sigma in enumerate_gamma_n(level):
        print(f"{sigma.bits}\t{sigma}\t{weight(sigma)}")
    return 0


def cmd_space(args) -> int:
    cfg = make_config(args)
    level = cfg.level if cfg.level is not None else 4
    if args.action == "gram":
        atom_level = cfg.cylinder_level if cfg.cylinder_level is not None else level
        if atom_level < level:
            raise UsageError("--cylinder-level must be at least --level")
        z = z_table(atom_level, cfg.theta, n_indices=gamma_size(level))
        gram = z.T @ (atom_probabilities(atom_level, cfg.theta)[:, None] * z)
        dev = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
        print(f"max |<Z_sigma, Z_tau> - delta| over Gamma_{level}: {dev:.3e}")
        return 0 if dev <= 1e-12 else 1
    codes = sample_codes(level, args.count, cfg.seed, cfg.theta)
    for c in codes:
        print(" ".join("+" if int(c) >> k & 1 else "-" for k in range(level + 1)))
    return 0


def cmd_integral(args) -> int:
    if args.action == "verify":
        suites = INTEGRAL_SUITES if args.suite == "all" else [args.suite]
        cfg = make_config(args)
        reports = [r for s in suites for r in run_suite(s, cfg)]
        return emit(reports, cfg, args, "integral verify")

    if args.phi is None:
        raise UsageError("integral build needs --phi")
    if args.measure != "pi0":
        raise UsageError(f"unknown measure {args.measure!r}; only pi0 is available")
    try:
        phi = GeneralizedFunctional.from_json(json.loads(Path(args.phi).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read functional {args.phi!r}: {exc}") from None
    level = phi.level if args.level is None else args.level
    if level > min(max_level(), 12):
        raise UsageError(f"dense kernels are limited to level {min(max_level(), 12)}")
    op = spectral_integral(phi, PI0_DENSITY, level)
    doc = {
        "schema": SCHEMA,
        "provenance": {"phi": op.phi_id, "measure": op.measure_name, "level": op.level},
        "kernel": op.kernel.to_json(),
    }
    text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        if args.q is None:
            raise UsageError("--csv needs --q for the scaling lambda^-q")
        write_scaled_csv(op.kernel, args.q, args.csv)
    return 0


def cmd_spectral(args) -> int:
    if args.measure != "pi0":
        raise UsageError(f"unknown measure {args.measure!r}; only pi0 is available")
    cfg = make_config(args)
    reports = [r for s in SPECTRAL_SUITES for r in run_suite(s, cfg)]
    return emit(reports, cfg, args, "spectral verify")


def cmd_verify(args) -> int:
    cfg = make_config(args)
    return emit(run_suite(args.suite, cfg), cfg, args, "verify")


def cmd_report(args) -> int:
    if args.action == "table":
        print(results_table())
        return 0
    try:
        doc = json.loads(Path(args.file).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.file!r}: {exc}") from None
    if doc.get("schema") != SCHEMA:
        raise UsageError(f"unsupported report schema {doc.get('schema')!r}")
    for r in doc["reports"]:
        flag = "PASS" if r["passed"] else "FAIL"
        print(f"[{flag}] {r['suite']:<16} {r['result']:<28} max_residual={r['max_residual']:.3e}")
    return 0 if doc["passed"] else 1


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, suites=None) -> None:
    p.add_argument("--level", type=int, help="index level n (Gamma_n)")
    p.add_argument("--cylinder-level", type=int, help="level of the cylinder algebra")
    p.add_argument("--theta", default="symmetric", help="'symmetric' or a JSON file of probabilities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float, nargs="+")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--timing", action="store_true", help="include wall times (breaks byte-identity)")
    if suites is not None:
        p.add_argument("--suite", default="all", choices=["all", *suites])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bchaos", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gamma", help="index sets and weight series")
    g.add_argument("action", choices=["sum", "list"])
    g.add_argument("--level", type=int)
    g.add_argument("--r", type=float, nargs="+")
    g.set_defaults(func=cmd_gamma)

    s = sub.add_parser("space", help="Bernoulli space: Gram check and sampling")
    s.add_argument("action", choices=["gram", "sample"])
    s.add_argument("--count", type=int, default=10)
    _common(s)
    s.set_defaults(func=cmd_space)

    i = sub.add_parser("integral", help="build spectral-integral kernels or verify integral results")
    i.add_argument("action", choices=["build", "verify"])
    i.add_argument("--phi", help="functional JSON: {level, entries: [[bits, re, im]], certificate}")
    i.add_argument("--measure", default="pi0")
    i.add_argument("--csv", help="also write the lambda^-q scaled kernel as CSV")
    _common(i, INTEGRAL_SUITES)
    i.set_defaults(func=cmd_integral)

    sp = sub.add_parser("spectral", help="verify spectral-measure axioms and densities")
    sp.add_argument("action", choices=["verify"])
    sp.add_argument("--measure", default="pi0")
    _common(sp)
    sp.set_defaults(func=cmd_spectral)

    v = sub.add_parser("verify", help="run verification suites")
    _common(v, list(SUITES))
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="print the result registry or summarize a report file")
    r.add_argument("action", choices=["table", "show"])
    r.add_argument("file", nargs="?")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "action", None) == "show" and not args.file:
        parser.error("report show needs a file")
    try:
        return args.func(args)
    except (UsageError, BChaosError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bchaos: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
