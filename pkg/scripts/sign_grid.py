"""Sign of S_k against the exact Q over a (lambda, rho) grid.

    python3 scripts/sign_grid.py --N 1e7 --k 0 1 2
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from smallgaps.reports import dumps_csv
from smallgaps.verify import LabPool, sign_grid


@dataclass
class SignConfig:
    N: int = 10**7
    ks: list[int] = field(default_factory=lambda: [0, 1])
    cache_dir: str | None = None
    threads: int = 1


def run(cfg: SignConfig) -> list[dict]:
    pool = LabPool(cfg.cache_dir, cfg.threads)
    return [row for k in cfg.ks for row in sign_grid(pool, k, cfg.N)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=float, default=SignConfig.N)
    ap.add_argument("--k", type=int, nargs="+", default=[0, 1])
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    print(dumps_csv(run(SignConfig(int(a.N), a.k, a.cache_dir, a.threads))), end="")


if __name__ == "__main__":
    main()
