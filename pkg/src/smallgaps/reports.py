"""Run configuration, the historical bounds table, and output formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SIG_DIGITS = 12
EULER_GAMMA = 0.57721566490153286


@dataclass(frozen=True)
class BoundRow:
    name: str
    value: float
    kind: str  # "computed" or "quoted"
    expression: str


def bounds_table() -> list[BoundRow]:
    """Successive upper bounds for liminf (p_{n+1} - p_n) / log p_n."""
    return [
        BoundRow("bombieri-davenport", 0.5, "computed", "1/2"),
        BoundRow("erdos-B4", 1 - 1 / (2 * 4), "computed", "1 - 1/(2B), B = 4"),
        BoundRow("erdos-B3.5", 1 - 1 / (2 * 3.5), "computed", "1 - 1/(2B), B = 3.5"),
        BoundRow("maier", math.exp(-EULER_GAMMA), "computed", "exp(-gamma)"),
        BoundRow("huxley-B4", 0.44254, "quoted", "0.44254"),
        BoundRow("huxley-B3.5", 0.43494, "quoted", "0.43494"),
        BoundRow("maier-huxley", 0.24846, "quoted", "0.24846"),
        BoundRow("tuple-sieve-quarter", 0.25, "computed", "1/4"),
        BoundRow("EH", 1.5 - math.sqrt(2), "computed", "3/2 - sqrt(2)"),
    ]


@dataclass
class RunConfig:
    N: int = 10**7
    theta: Optional[float] = None
    R: Optional[float] = None
    lam: float = 1.0
    rho: float = 1.0
    k: int = 1
    p_max: int = 10**6
    cache_dir: Optional[str] = None
    threads: int = 1
    output_format: str = "csv"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theta is not None and self.R is not None:
            raise ValueError("give theta or R, not both")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    def resolved(self) -> tuple[float, float]:
        """(theta, R), one given and the other derived; theta defaults to 1/(4k+1)."""
        logN = math.log(self.N)
        if self.R is not None:
            return math.log(self.R) / logN, float(self.R)
        theta = self.theta if self.theta is not None else 1 / (4 * self.k + 1)
        return theta, float(self.N) ** theta

    def to_json(self) -> dict:
        out = asdict(self)
        out["theta"], out["R"] = self.resolved()
        return out

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        aliases = {"lambda": "lam", "format": "output_format", "cache-dir": "cache_dir"}
        kwargs = {}
        for key, val in data.items():
            key = aliases.get(key, key.replace("-", "_"))
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = val
        if "N" in kwargs:
            kwargs["N"] = int(float(kwargs["N"]))
        return cls(**kwargs)


def load_config(path: Optional[str | Path], overrides: Mapping[str, Any] = ()) -> RunConfig:
    """Read a flat TOML file (if any) and apply non-None overrides on top."""
    data: dict[str, Any] = {}
    if path is not None:
        with open(path, "rb") as fh:
            data.update(tomllib.load(fh))
    given = {k: v for k, v in dict(overrides).items() if v is not None}
    # theta and R are one setting: a flag for either replaces the file's choice
    if "theta" in given or "R" in given:
        data.pop("theta", None)
        data.pop("R", None)
    data.update(given)
    return RunConfig.from_mapping(data)


# --- formatting -------------------------------------------------------------


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")


def normalize(obj: Any) -> Any:
    """JSON-ready copy: floats cut to 12 significant digits, fractions and paths as strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, (Fraction, Path)):
        return str(obj)
    if isinstance(obj, Mapping):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if hasattr(obj, "to_json"):
        return normalize(obj.to_json())
    if hasattr(obj, "shifts"):
        return str(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return normalize(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    """Deterministic JSON; parsing and re-dumping the text gives the same bytes."""
    return json.dumps(normalize(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def fmt_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def dumps_csv(rows: Iterable[Mapping[str, Any]]) -> str:
    rows = list(rows)
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: fmt_cell(v) for k, v in r.items()})
    return buf.getvalue()
