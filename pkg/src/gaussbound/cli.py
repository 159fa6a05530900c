"""Command-line interface: ``gaussbound <command> [options]``.

Exit codes: 0 success or pass, 1 violation or failed check, 2 usage or input
error. Global options (``--cutoff --format --out --seed`` and the tolerance
overrides) are accepted before or after the subcommand.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import extremal, homodyne, oracle, variational
from .errors import GaussboundError
from .fock import (
    CUTOFF_ENV_VAR,
    DEFAULT_TOLERANCES,
    Tolerances,
    default_cutoff,
    from_spec,
    load_state,
    validate,
)
from .gaussian import moments
from .gaussianity import gaussianity

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
MIN_CUTOFF = 8
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    cutoff: int | None = None  # None: each command's own default
    fmt: str | None = None
    out: str | None = None
    seed: int = DEFAULT_SEED
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)
    bound_tolerance: float = 1e-7

    def state_cutoff(self) -> int:
        cutoff = self.cutoff if self.cutoff is not None else default_cutoff()
        if cutoff < MIN_CUTOFF:
            raise UsageError(f"cutoff must be >= {MIN_CUTOFF}, got {cutoff}")
        return cutoff


# -- output -----------------------------------------------------------------


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    return v


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def render(payload, fmt: str) -> str:
    """Records (a dict) or tables (a list of dicts) as sorted-key JSON or CSV."""
    payload = _num(payload)
    if fmt == "json":
        return json.dumps(payload, sort_keys=True) + "\n"
    rows = payload if isinstance(payload, list) else [payload]
    rows = [_flatten(r) for r in rows]
    columns = list(rows[0]) if rows else []
    for r in rows[1:]:
        columns += [c for c in r if c not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(cfg: CliConfig, payload, default_fmt: str = "json", text: str | None = None) -> None:
    out = text if text is not None else render(payload, cfg.fmt or default_fmt)
    if cfg.out:
        Path(cfg.out).write_text(out)
    else:
        sys.stdout.write(out)


# -- commands ---------------------------------------------------------------


def _read_state(cfg: CliConfig, ref: str):
    if os.path.exists(ref):
        rho = load_state(ref)
    elif ":" in ref:
        rho = from_spec(ref, cfg.state_cutoff())
    else:
        raise UsageError(f"{ref!r} is neither a state file nor a state spec like fock:1")
    report = validate(rho, cfg.tolerances)
    if not report.passed:
        raise UsageError("invalid state: " + "; ".join(report.failures()))
    return rho


def cmd_analyze(cfg: CliConfig, args) -> int:
    rho = _read_state(cfg, args.state)
    m = moments(rho)
    rep = gaussianity(rho)
    bounded = extremal.LOWER_G < rep.g <= extremal.UPPER_G
    a_min = extremal.alpha_min(min(rep.g, extremal.UPPER_G)).alpha_min if bounded else math.nan
    margin = m.alpha - a_min
    lo, hi = rep.positivity_window
    out = {
        "d": m.d, "gamma": m.gamma, "alpha": m.alpha, "g": rep.g, "overlap": rep.overlap,
        "alpha_min": a_min, "margin": margin,
        "positivity_window": {"g_min": lo, "g_max": hi},
        "wigner_negativity_certified": rep.wigner_negativity_certified,
        "truncation": {"state": rho.truncation, "reference": rep.truncation},
        "dim": rho.dim,
    }
    emit(cfg, out)
    ok = bounded and margin >= -cfg.bound_tolerance
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_bound(cfg: CliConfig, args) -> int:
    res = extremal.alpha_min(args.g)
    emit(cfg, {"g": res.g, "alpha_min": res.alpha_min, "method": res.method, "n": res.n, "r": res.r,
               "iterations": res.iterations})
    return EXIT_OK


def cmd_curve(cfg: CliConfig, args) -> int:
    rows = extremal.curve_rows(extremal.extremal_curve(args.alpha_from, args.alpha_to, args.samples))
    if (cfg.fmt or "csv") == "csv":
        emit(cfg, None, text=extremal.curve_csv(rows))
    else:
        meta = {"from": args.alpha_from, "to": args.alpha_to, "samples": args.samples}
        emit(cfg, None, text=extremal.curve_json(rows, meta) + "\n")
    return EXIT_OK


def cmd_oracle(cfg: CliConfig, args) -> int:
    if args.mode == "lp":
        cert = oracle.lp_extremal_g(args.alpha, cfg.cutoff if cfg.cutoff is not None else 40)
        emit(cfg, cert.to_dict())
        return EXIT_OK if cert.passed else EXIT_VIOLATION
    report = oracle.random_state_audit(
        cutoff=cfg.cutoff if cfg.cutoff is not None else 20, samples=args.samples, seed=cfg.seed,
        alpha=args.alpha, tolerance=cfg.bound_tolerance)
    emit(cfg, report.to_dict())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_verify(cfg: CliConfig, args) -> int:
    if args.mode == "sr":
        dim = cfg.cutoff if cfg.cutoff is not None else 60
        checks = [variational.reduced_sr_check(dim, ex) for ex in (False, True)]
        emit(cfg, checks)
        return EXIT_OK if all(c["passed"] for c in checks) else EXIT_VIOLATION
    certs = []
    for n in range(args.n_max + 1):
        for r in args.r_values:
            dim = None if cfg.cutoff is None else max(cfg.cutoff, n + 2)
            certs.append(variational.certify_min_state(n, r, dim, tolerance=args.residual).to_dict())
    emit(cfg, certs)
    return EXIT_OK if all(c["passed"] for c in certs) else EXIT_VIOLATION


def cmd_homodyne(cfg: CliConfig, args) -> int:
    rho = _read_state(cfg, args.state)
    run = homodyne.simulate_overlap(rho, shots=args.shots, seed=cfg.seed, bandwidth=args.bandwidth,
                                    bias_correction=not args.no_bias_correction)
    alpha = moments(rho).alpha
    g, g_err = homodyne.g_from_simulation(run, alpha)
    out = run.to_dict()
    out.update(g_estimate=g, g_stderr=g_err, alpha=alpha)
    emit(cfg, out)
    return EXIT_OK if abs(run.deviation_sigma) <= args.sigma else EXIT_VIOLATION


# -- parser -----------------------------------------------------------------


def _global_options(defaults: bool) -> argparse.ArgumentParser:
    # Subparsers use SUPPRESS so a flag given before the subcommand is not reset.
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--cutoff", type=int, default=d(None),
                   help=f"Fock cutoff (state default: ${CUTOFF_ENV_VAR} or 60)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=d(None))
    p.add_argument("--out", default=d(None), help="write output to this path instead of stdout")
    p.add_argument("--seed", type=int, default=d(DEFAULT_SEED))
    p.add_argument("--randomize-seed", action="store_true", default=d(False),
                   help="draw a fresh seed (reported in the output)")
    p.add_argument("--tol-hermiticity", type=float, default=d(DEFAULT_TOLERANCES.hermiticity))
    p.add_argument("--tol-trace", type=float, default=d(DEFAULT_TOLERANCES.trace))
    p.add_argument("--tol-psd", type=float, default=d(DEFAULT_TOLERANCES.psd))
    p.add_argument("--tol-bound", type=float, default=d(1e-7),
                   help="allowed shortfall below alpha_min(g)")
    return p


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    sub_opts = _global_options(defaults=False)
    parser = argparse.ArgumentParser(prog="gaussbound", parents=[_global_options(defaults=True)], allow_abbrev=False,
                                     description="Gaussianity-bounded uncertainty relation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[sub_opts], allow_abbrev=False, help="moments, alpha, g and the bound for a state")
    p.add_argument("state", help="state file (JSON) or spec such as fock:1, thermal:1, coherent:1+0.5j")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bound", parents=[sub_opts], allow_abbrev=False, help="alpha_min(g)")
    p.add_argument("--g", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("curve", parents=[sub_opts], allow_abbrev=False, help="extremal curve samples (CSV by default)")
    p.add_argument("--from", dest="alpha_from", type=float, default=1.0)
    p.add_argument("--to", dest="alpha_to", type=float, default=13.0)
    p.add_argument("--samples", type=int, default=121)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("oracle", parents=[sub_opts], allow_abbrev=False, help="brute-force extremality checks")
    osub = p.add_subparsers(dest="mode", required=True)
    q = osub.add_parser("lp", parents=[sub_opts], allow_abbrev=False, help="vertex enumeration at one alpha (cutoff default 40)")
    q.add_argument("--alpha", type=float, required=True)
    q = osub.add_parser("random", parents=[sub_opts], allow_abbrev=False, help="random-state audit (cutoff default 20)")
    q.add_argument("--samples", type=int, default=10_000)
    q.add_argument("--alpha", type=float, default=None, help="restrict to diagonal states at this alpha")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", parents=[sub_opts], allow_abbrev=False, help="stationarity and uncertainty-relation checks")
    vsub = p.add_subparsers(dest="mode", required=True)
    q = vsub.add_parser("variational", parents=[sub_opts], allow_abbrev=False, help="certify min-branch states")
    q.add_argument("--n-max", type=int, default=8)
    q.add_argument("--r-values", type=_floats, default=[0.0, 0.25, 0.5, 0.75])
    q.add_argument("--residual", type=float, default=1e-10)
    vsub.add_parser("sr", parents=[sub_opts], allow_abbrev=False, help="minimum of Tr(rho(1+2n)) with and without the vacuum")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("homodyne", parents=[sub_opts], allow_abbrev=False, help="simulated eight-port overlap estimate")
    p.add_argument("state")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--no-bias-correction", action="store_true")
    p.add_argument("--sigma", type=float, default=3.0, help="pass threshold in standard errors")
    p.set_defaults(func=cmd_homodyne)
    return parser


def _config(args) -> CliConfig:
    if args.cutoff is not None and args.cutoff < MIN_CUTOFF:
        raise UsageError(f"--cutoff must be >= {MIN_CUTOFF}")
    seed = secrets.randbits(32) if args.randomize_seed else args.seed
    tol = Tolerances(hermiticity=args.tol_hermiticity, trace=args.tol_trace, psd=args.tol_psd)
    return CliConfig(args.cutoff, args.fmt, args.out, seed, tol, args.tol_bound)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        return args.func(cfg, args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GaussboundError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
