"""Empirical/predicted ratios for small tuple pairs across several N.

    python3 scripts/correlation_grid.py --N 1e5 1e6 1e7 --theta 0.2
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from smallgaps.correlations import Lab, correlation_pair, reports_to_csv
from smallgaps.tuples import TupleSet

DEFAULT_PAIRS = (("0", "0"), ("0", "2"), ("0,2", "0,2"), ("0,2", "0,6"), ("0,2,6", "0"))


@dataclass
class GridConfig:
    Ns: list[int] = field(default_factory=lambda: [10**5, 10**6, 10**7])
    theta: float = 0.2
    pairs: tuple = DEFAULT_PAIRS
    cache_dir: str | None = None
    threads: int = 1


def run(cfg: GridConfig) -> list:
    reports = []
    for N in cfg.Ns:
        lab = Lab(N, cache_dir=cfg.cache_dir, threads=cfg.threads)
        R = lab.R_from_theta(cfg.theta)
        for h1, h2 in cfg.pairs:
            reports.append(correlation_pair(TupleSet.parse(h1), TupleSet.parse(h2), N, R, lab))
    return reports


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=float, nargs="+", default=None)
    ap.add_argument("--theta", type=float, default=GridConfig.theta)
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    cfg = GridConfig(theta=a.theta, cache_dir=a.cache_dir, threads=a.threads)
    if a.N:
        cfg.Ns = [int(x) for x in a.N]
    print(reports_to_csv(run(cfg)), end="")


if __name__ == "__main__":
    main()
