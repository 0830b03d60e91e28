"""Command-line entry point: ``smallgaps <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import arith, correlations, divisor_sums, gaps, poisson, tuples, verify
from ._numerics import accurate_sum
from .reports import RunConfig, bounds_table, dumps_csv, dumps_json, load_config


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="flat TOML file of RunConfig keys")
    parser.add_argument("--cache-dir", default=default, help="directory for sieve caches")
    parser.add_argument("--threads", type=int, default=default)
    parser.add_argument("--format", choices=("csv", "json"), default=default)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smallgaps", description="Small prime gap experiments.")
    _global_flags(p, suppress=False)
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    s = add("tables", "sieve a window and print arithmetic functions")
    s.add_argument("--start", type=int, default=1)
    s.add_argument("--len", dest="length", type=int, default=30)
    s.add_argument("--summary", action="store_true", help="totals only")

    s = add("singular-series", "singular series of a shift tuple")
    s.add_argument("--H", required=True, help="comma separated shifts, e.g. 0,2,6")
    s.add_argument("--p-max", type=int, default=None)

    s = add("lambda-r", "truncated divisor sum over a window")
    s.add_argument("--start", type=int, default=1)
    s.add_argument("--len", dest="length", type=int, default=20)
    s.add_argument("--R", type=float, required=True)

    s = add("correlate", "correlation sums against predicted main terms")
    s.add_argument("--h1", default="0")
    s.add_argument("--h2", default="0")
    s.add_argument("--h0", type=int, default=None)
    s.add_argument("--N", type=float, default=None)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, default=None)
    g.add_argument("--R", type=float, default=None)
    s.add_argument("--grid", default=None, help="CSV with columns h1,h2,h0,N,theta,R")

    s = add("qform", "exact optimised moment form")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--lambda", dest="lam", default=None, help="rational, e.g. 1/2")
    s.add_argument("--rho", default=None, help="rational, e.g. 3")

    s = add("threshold", "finite-k lambda thresholds")
    s.add_argument("--k-max", type=int, default=40)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--rho", type=float, default=None, help="fixed rho (default r + 1/k)")

    s = add("gaps", "S_k statistic, cluster counts, gap census, sanity checks")
    s.add_argument("--N", type=float, default=None)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--rho", type=float, default=None)
    s.add_argument("--k", type=int, default=None)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, default=None)
    g.add_argument("--R", type=float, default=None)
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--mode", choices=("sk", "census", "qrplus", "checks"), default="sk")

    add("bounds", "historical bounds on the gap constant")

    s = add("verify-all", "run every acceptance check and write a JSON bundle")
    s.add_argument("--N", type=float, default=None)
    s.add_argument("--skip-empirical", action="store_true")
    s.add_argument("--out", default=None, help="bundle path (default: stdout)")
    return p


def _config(args: argparse.Namespace, **extra) -> RunConfig:
    overrides = {
        "cache_dir": args.cache_dir,
        "threads": args.threads,
        "output_format": args.format,
    }
    overrides.update(extra)
    return load_config(args.config, overrides)


def _emit(rows: list[dict], payload, cfg: RunConfig) -> str:
    return dumps_json(payload) if cfg.output_format == "json" else dumps_csv(rows)


def cmd_tables(args, cfg: RunConfig) -> str:
    t = arith.cached_tables(args.start, args.length, cfg.cache_dir)
    if args.summary:
        row = {
            "start": t.window_start,
            "len": t.window_len,
            "primes": int(t.is_prime.sum()),
            "sum_lambda": accurate_sum(t.lam),
        }
        return _emit([row], row, cfg)
    rows = [
        {
            "n": int(n),
            "spf": int(t.spf[i]),
            "mu": int(t.mu[i]),
            "lambda": float(t.lam[i]),
            "is_prime": bool(t.is_prime[i]),
        }
        for i, n in enumerate(t.numbers)
    ]
    return _emit(rows, rows, cfg)


def cmd_singular_series(args, cfg: RunConfig) -> str:
    H = tuples.TupleSet.parse(args.H)
    p_max = args.p_max or max(cfg.p_max, H.max_diff, 2 * H.k)
    res = tuples.singular_series(H, p_max)
    payload = {
        "H": str(H),
        "admissible": tuples.is_admissible(H),
        "value": res.value,
        "exact_prefix": res.exact_prefix,
        "tail_log_bound": res.tail_log_bound,
        "p_max": res.p_max,
    }
    return dumps_json(payload)


def cmd_lambda_r(args, cfg: RunConfig) -> str:
    w = divisor_sums.cached_lambda_r_window(args.start, args.length, args.R, cfg.cache_dir)
    rows = [{"n": args.start + i, "R": w.R, "lambda_R": float(v)} for i, v in enumerate(w.values)]
    return _emit(rows, rows, cfg)


def cmd_correlate(args, cfg: RunConfig) -> str:
    if args.grid:
        with open(args.grid, newline="") as fh:
            reports = correlations.run_grid(csv.DictReader(fh), cfg.cache_dir, cfg.threads)
    else:
        N = int(cfg.N)
        theta, R = cfg.resolved()
        lab = correlations.Lab(N, cache_dir=cfg.cache_dir, threads=cfg.threads)
        H1, H2 = tuples.TupleSet.parse(args.h1), tuples.TupleSet.parse(args.h2)
        if args.h0 is None:
            reports = [correlations.correlation_pair(H1, H2, N, R, lab)]
        else:
            reports = [correlations.correlation_with_prime(H1, H2, args.h0, N, R, lab)]
    if cfg.output_format == "json":
        return dumps_json([r.to_json() for r in reports])
    return correlations.reports_to_csv(reports)


def cmd_qform(args, cfg: RunConfig) -> str:
    k = args.k if args.k is not None else cfg.k
    lam = poisson.as_fraction(args.lam if args.lam is not None else cfg.lam)
    rho = poisson.as_fraction(args.rho if args.rho is not None else cfg.rho)
    form = poisson.build_moment_form(k, lam, rho)
    payload = form.to_json()
    try:
        payload["Q_closed_form"] = str(poisson.q_max_closed_form(k, lam, rho))
    except (ValueError, ZeroDivisionError):
        payload["Q_closed_form"] = None
    return dumps_json(payload)


def cmd_threshold(args, cfg: RunConfig) -> str:
    rows = []
    for k in range(1, args.k_max + 1):
        theta = 1 / (4 * k + 1)
        rho = args.rho if args.rho is not None else args.r + 1 / k
        rows.append(
            {
                "k": k,
                "r": args.r,
                "theta": theta,
                "rho": rho,
                "lambda_k": poisson.finite_k_threshold(k, args.r, theta, rho),
            }
        )
    return _emit(rows, rows, cfg)


def cmd_gaps(args, cfg: RunConfig) -> str:
    N = int(cfg.N)
    theta, _ = cfg.resolved()
    lab = correlations.Lab(N, cache_dir=cfg.cache_dir, threads=cfg.threads)
    rep = gaps.gap_report(N, cfg.lam, cfg.rho, cfg.k, theta, args.mode, args.r, lab)
    payload = rep.to_json()
    if cfg.output_format == "json":
        return dumps_json(payload)
    row = {k: v for k, v in payload.items() if k not in ("census", "checks", "a")}
    row["a"] = " ".join(f"{float(x):.12g}" for x in rep.a)
    for lam, count in payload["census"].items():
        row[f"census_{lam}"] = count
    for name, chk in payload["checks"].items():
        row[f"{name}_value"] = chk["value"]
        row[f"{name}_bound"] = chk["bound"]
        row[f"{name}_passed"] = chk["passed"]
    return dumps_csv([row])


def cmd_bounds(args, cfg: RunConfig) -> str:
    rows = [vars(r) for r in bounds_table()]
    return _emit(rows, rows, cfg)


def cmd_verify_all(args, cfg: RunConfig) -> tuple[str, int]:
    results = verify.run_all(
        int(cfg.N),
        skip_empirical=args.skip_empirical,
        cache_dir=cfg.cache_dir,
        threads=cfg.threads,
        log=lambda line: print(line, file=sys.stderr),
    )
    bundle = {
        "config": cfg.to_json(),
        "skip_empirical": args.skip_empirical,
        "passed": all(r.passed for r in results if r.hard),
        "results": [r.to_json() for r in results],
    }
    text = dumps_json(bundle)
    if args.out:
        Path(args.out).write_text(text)
        text = ""
    return text, 0 if bundle["passed"] else 1


COMMANDS = {
    "tables": cmd_tables,
    "singular-series": cmd_singular_series,
    "lambda-r": cmd_lambda_r,
    "correlate": cmd_correlate,
    "qform": cmd_qform,
    "threshold": cmd_threshold,
    "gaps": cmd_gaps,
    "bounds": cmd_bounds,
    "verify-all": cmd_verify_all,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    extra = {}
    for name in ("N", "theta", "R", "lam", "rho", "k"):
        val = getattr(args, name, None)
        if val is not None and not (args.command == "qform" and name in ("lam", "rho", "k")):
            extra[name] = val
    try:
        cfg = _config(args, **extra)
        result = COMMANDS[args.command](args, cfg)
    except (ValueError, ArithmeticError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code = 0
    if isinstance(result, tuple):
        result, code = result
    sys.stdout.write(result)
    return code


if __name__ == "__main__":
    sys.exit(main())
