"""Finite-k lambda thresholds next to the smallest Laguerre zero limit.

    python3 scripts/threshold_table.py --k-max 40 --r 1
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from smallgaps import poisson
from smallgaps.reports import dumps_csv


@dataclass
class ThresholdConfig:
    k_max: int = 40
    r: int = 1


def run(cfg: ThresholdConfig) -> list[dict]:
    rows = []
    for k in range(1, cfg.k_max + 1):
        t0 = time.perf_counter()
        theta = 1 / (4 * k + 1)
        rho = cfg.r + 1 / k
        lam = poisson.finite_k_threshold(k, cfg.r, theta, rho)
        rows.append({"k": k, "theta": theta, "rho": rho, "lambda_k": lam, "seconds": time.perf_counter() - t0})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=ThresholdConfig.k_max)
    ap.add_argument("--r", type=int, default=ThresholdConfig.r)
    a = ap.parse_args()
    print(dumps_csv(run(ThresholdConfig(a.k_max, a.r))), end="")


if __name__ == "__main__":
    main()
