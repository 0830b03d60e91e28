import math

import pytest

from smallgaps.verify import LabPool


def factorize(n: int) -> dict[int, int]:
    """Plain trial division; the oracle the sieve is checked against."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return (-1) ** len(f)


def mangoldt(n: int) -> float:
    f = factorize(n)
    return math.log(next(iter(f))) if len(f) == 1 else 0.0


@pytest.fixture(scope="session")
def pool():
    """Sieved labs shared across the desk-scale tests (keeps the last N only)."""
    return LabPool(keep=1)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
