"""Exact Poisson moments, the rho-shifted moment form, and Laguerre polynomials.

Everything here is exact rational arithmetic on ``fractions.Fraction`` except
``smallest_zero`` and the closed-form thresholds built on it, which bisect in
``mpmath`` at 50 digits.

Polynomials in one variable are plain lists of coefficients, lowest degree
first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import mpmath

Rational = Union[int, Fraction]
Poly = list  # coefficients, constant term first


class SingularSystemError(ArithmeticError):
    """The moment system has D_{k-1} = 0 at the requested lambda."""


def as_fraction(x) -> Fraction:
    """Exact conversion; floats and decimal strings are taken at face value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# --- polynomial helpers -----------------------------------------------------


def poly_trim(p: Poly) -> Poly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly_trim(
        [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]
    )


def poly_scale(p: Poly, c) -> Poly:
    return poly_trim([c * a for a in p])


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return []
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly_trim(out)


def poly_deriv(p: Poly) -> Poly:
    return poly_trim([i * p[i] for i in range(1, len(p))])


def poly_eval(p: Poly, x):
    acc = 0
    for a in reversed(p):
        acc = acc * x + a
    return acc


# --- Stirling numbers and Poisson moments ----------------------------------


@lru_cache(maxsize=None)
def stirling2(k: int, v: int) -> int:
    """Partitions of a k-set into v non-empty blocks."""
    if not 0 <= v <= k:
        return 0
    if k == 0:
        return 1
    if v == 0:
        return 0
    return v * stirling2(k - 1, v) + stirling2(k - 1, v - 1)


@lru_cache(maxsize=None)
def stirling1_unsigned(h: int, j: int) -> int:
    """[h, j]: |coefficient of q^j| in q(q-1)...(q-h+1)."""
    if not 0 <= j <= h:
        return 0
    if h == 0:
        return 1
    return (h - 1) * stirling1_unsigned(h - 1, j) + stirling1_unsigned(h - 1, j - 1)


@lru_cache(maxsize=None)
def _poisson_moment(k: int) -> tuple[int, ...]:
    return tuple([stirling2(k, v) for v in range(k + 1)])


def poisson_moment(k: int) -> Poly:
    """mu_k(lambda) as an integer coefficient list: sum_v S2(k, v) lambda^v."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return poly_trim(list(_poisson_moment(k)))


def poisson_moment_value(k: int, lam) -> Fraction:
    return Fraction(poly_eval(poisson_moment(k), as_fraction(lam)))


def poisson_moment_by_operator(k: int) -> Poly:
    """mu_k by repeated application of lambda d/dlambda + lambda to 1."""
    mu = [1]
    for _ in range(k):
        mu = poly_add(poly_mul([0, 1], poly_deriv(mu)), poly_mul([0, 1], mu))
    return mu


def surjection_identity_check(j: int, k: int) -> bool:
    """sum_v v! S2(k, v) C(j, v) == j^k."""
    lhs = sum(math.factorial(v) * stirling2(k, v) * math.comb(j, v) for v in range(j + 1))
    return lhs == j**k


def lambda_power_identity_check(h: int) -> bool:
    """lambda^h == sum_j (-1)^(h-j) [h, j] mu_j(lambda), compared coefficientwise."""
    rhs: Poly = []
    for j in range(h + 1):
        rhs = poly_add(rhs, poly_scale(poisson_moment(j), (-1) ** (h - j) * stirling1_unsigned(h, j)))
    return rhs == [0] * h + [1]


def falling_factorial_check(h: int) -> bool:
    """q(q-1)...(q-h+1) == sum_j (-1)^(h-j) [h, j] q^j for q = 0..h."""
    for q in range(h + 1):
        prod = math.prod(q - i for i in range(h))
        if prod != sum((-1) ** (h - j) * stirling1_unsigned(h, j) * q**j for j in range(h + 1)):
            return False
    return True


# --- exact determinants -----------------------------------------------------


def bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination on an integer matrix."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for i in range(n - 1):
        if m[i][i] == 0:
            swap = next((r for r in range(i + 1, n) if m[r][i] != 0), None)
            if swap is None:
                return 0
            m[i], m[swap] = m[swap], m[i]
            sign = -sign
        piv = m[i][i]
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                m[r][c] = (m[r][c] * piv - m[r][i] * m[i][c]) // prev
            m[r][i] = 0
        prev = piv
    return sign * m[n - 1][n - 1]


def rational_det(rows: Sequence[Sequence[Rational]]) -> Fraction:
    """Determinant of a rational matrix: clear denominators, then Bareiss."""
    rows = [[as_fraction(x) for x in r] for r in rows]
    n = len(rows)
    if n == 0:
        return Fraction(1)
    scale = 1
    for r in rows:
        for x in r:
            scale = math.lcm(scale, x.denominator)
    ints = [[int(x * scale) for x in r] for r in rows]
    return Fraction(bareiss_det(ints), scale**n)


def hankel(c: Sequence[Rational], size: int) -> list[list[Rational]]:
    return [[c[i + j] for j in range(size)] for i in range(size)]


def solve_exact(a: Sequence[Sequence[Rational]], b: Sequence[Rational]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals; raises on a singular system."""
    n = len(a)
    m = [[as_fraction(x) for x in row] + [as_fraction(y)] for row, y in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularSystemError("singular system")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


# --- the moment form ---------------------------------------------------------


def moment_form_c(m: int, lam, rho) -> Fraction:
    """c_m = mu_{m+1}(lambda) - rho mu_m(lambda)."""
    lam, rho = as_fraction(lam), as_fraction(rho)
    return poisson_moment_value(m + 1, lam) - rho * poisson_moment_value(m, lam)


def quadratic_form(a: Sequence[Rational], lam, rho) -> Fraction:
    """Q_a(lambda, rho) = sum_{i,j} a_i a_j c_{i+j}."""
    k = len(a) - 1
    c = [moment_form_c(m, lam, rho) for m in range(2 * k + 1)]
    return sum(
        (as_fraction(a[i]) * as_fraction(a[j]) * c[i + j] for i in range(k + 1) for j in range(k + 1)),
        Fraction(0),
    )


@dataclass(frozen=True)
class MomentForm:
    k: int
    lam: Fraction
    rho: Fraction
    c: tuple[Fraction, ...]
    D: tuple[Fraction, ...]
    a: tuple[Fraction, ...]
    Q: Fraction

    def to_json(self) -> dict:
        s = lambda x: str(x)  # noqa: E731
        return {
            "k": self.k,
            "lambda": s(self.lam),
            "rho": s(self.rho),
            "c": [s(x) for x in self.c],
            "D": [s(x) for x in self.D],
            "a": [s(x) for x in self.a],
            "Q": s(self.Q),
            "Q_float": float(self.Q),
        }


def build_moment_form(k: int, lam, rho, require_rho_gt_k: bool = True) -> MomentForm:
    """Solve for the degree-k polynomial (a_k = 1) orthogonal to lower degrees.

    The coefficients come from an exact solve of the k x k Hankel system; Q is
    then the quadratic form at that vector and is checked against D_k/D_{k-1}.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lam, rho = as_fraction(lam), as_fraction(rho)
    if require_rho_gt_k and not rho > k:
        raise ValueError(f"need rho > k (rho={rho}, k={k})")
    c = [moment_form_c(m, lam, rho) for m in range(2 * k + 1)]
    D = [rational_det(hankel(c, s + 1)) for s in range(k + 1)]
    if D[k - 1] == 0:
        raise SingularSystemError(f"D_{k - 1} = 0 at lambda={lam}, rho={rho}")
    sol = solve_exact(
        [[c[i + j] for j in range(k)] for i in range(k)],
        [-c[i + k] for i in range(k)],
    )
    a = sol + [Fraction(1)]
    Q = sum((a[i] * a[j] * c[i + j] for i in range(k + 1) for j in range(k + 1)), Fraction(0))
    if Q * D[k - 1] != D[k]:
        raise ArithmeticError("Q * D_{k-1} != D_k; exact arithmetic is broken")
    return MomentForm(k, lam, rho, tuple(c), tuple(D), tuple(a), Q)


# --- Laguerre polynomials ---------------------------------------------------


def gen_binomial(top: Fraction, bottom: int) -> Fraction:
    """C(top, bottom) for rational ``top`` via the falling-factorial product."""
    if bottom < 0:
        return Fraction(0)
    num = Fraction(1)
    for i in range(bottom):
        num *= top - i
    return num / math.factorial(bottom)


def laguerre_coefficients(n: int, alpha) -> Poly:
    """Coefficients of L_n^(alpha)(x), constant term first."""
    if n < 0:
        raise ValueError("n must be >= 0")
    alpha = as_fraction(alpha)
    return [
        (-1) ** v * gen_binomial(n + alpha, n - v) / math.factorial(v) for v in range(n + 1)
    ]


def laguerre_eval(n: int, alpha, x) -> Fraction:
    alpha = as_fraction(alpha)
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    return poly_eval(laguerre_coefficients(n, alpha), as_fraction(x))


def laguerre_derivative_check(n: int, alpha) -> bool:
    """d/dx L_n^(alpha) == -L_{n-1}^(alpha+1), as exact polynomials."""
    alpha = as_fraction(alpha)
    lhs = poly_deriv(laguerre_coefficients(n, alpha))
    rhs = poly_scale(laguerre_coefficients(n - 1, alpha + 1), -1) if n >= 1 else []
    return poly_trim(lhs) == poly_trim(rhs)


def hankel_closed_form(k: int, lam, rho) -> Fraction:
    """(-1)^k 1! 2! ... k! lambda^{k(k-1)/2} L_k^(rho-k)(lambda)."""
    lam, rho = as_fraction(lam), as_fraction(rho)
    sf = math.prod(math.factorial(i) for i in range(1, k + 1))
    lag = poly_eval(laguerre_coefficients(k, rho - k), lam)
    return (-1) ** k * sf * lam ** (k * (k - 1) // 2) * lag


def det_closed_form_check(k: int, lam, rho) -> bool:
    """Hankel determinant D_{k-1} against its Laguerre closed form."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lam, rho = as_fraction(lam), as_fraction(rho)
    c = [moment_form_c(m, lam, rho) for m in range(2 * k - 1)]
    return rational_det(hankel(c, k)) == hankel_closed_form(k, lam, rho)


def _poly_det(mat: list[list[Poly]]) -> Poly:
    """Leibniz expansion over a polynomial matrix (only used for small sizes)."""
    n = len(mat)
    total: Poly = []
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term: Poly = [(-1) ** inv]
        for i, j in enumerate(perm):
            term = poly_mul(term, mat[i][j])
            if not term:
                break
        total = poly_add(total, term)
    return total


def f_h_determinant(k: int, h: int) -> Poly:
    """det[D^i lambda^j], i < k, j <= k with column h removed, as a polynomial."""
    cols = [j for j in range(k + 1) if j != h]
    mat = []
    for i in range(k):
        row = []
        for j in cols:
            if i > j:
                row.append([])
            else:
                row.append([0] * (j - i) + [math.factorial(j) // math.factorial(j - i)])
        mat.append(row)
    return _poly_det(mat)


def f_h_det_check(k: int, h: int, lam) -> bool:
    """F_h == 1! 2! ... (k-1)! C(k, h) lambda^{k-h}, symbolically and at ``lam``."""
    if not 0 <= h <= k:
        raise ValueError("need 0 <= h <= k")
    lam = as_fraction(lam)
    det = f_h_determinant(k, h)
    coef = math.prod(math.factorial(i) for i in range(1, k)) * math.comb(k, h)
    closed = [0] * (k - h) + [coef]
    return poly_trim(det) == poly_trim(closed) and poly_eval(det, lam) == coef * lam ** (k - h)


def q_max_closed_form(k: int, lam, rho) -> Fraction:
    """-(k+1)! lambda^k L_{k+1}^(rho-k-1)(lambda) / L_k^(rho-k)(lambda).

    The domain check against the smallest zero is the caller's business when
    only the identity with the Cramer solution is wanted; ``rho > k`` and a
    non-zero denominator are enforced here.
    """
    lam, rho = as_fraction(lam), as_fraction(rho)
    if k < 1 or not rho > k:
        raise ValueError("need k >= 1 and rho > k")
    if not lam > 0:
        raise ValueError("need lambda > 0")
    den = laguerre_eval(k, rho - k, lam)
    if den == 0:
        raise ZeroDivisionError(f"L_{k}^({rho - k}) vanishes at {lam}")
    num = laguerre_eval(k + 1, rho - k - 1, lam)
    return -math.factorial(k + 1) * lam**k * num / den


# --- zeros and thresholds ---------------------------------------------------

_DPS = 50


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _laguerre_seq(n: int, alpha, x) -> list:
    """L_0..L_n at x by the three-term recurrence (mpmath)."""
    vals = [mpmath.mpf(1)]
    if n == 0:
        return vals
    vals.append(1 + alpha - x)
    for m in range(1, n):
        vals.append(((2 * m + 1 + alpha - x) * vals[m] - (m + alpha) * vals[m - 1]) / (m + 1))
    return vals


def zeros_below(n: int, alpha, x) -> int:
    """Number of zeros of L_n^(alpha) strictly below ``x``.

    (-1)^m L_m^(alpha) has positive leading coefficient, so the sequence of
    those values is a Sturm sequence and sign changes count the zeros above x.
    """
    with mpmath.workdps(_DPS):
        seq = _laguerre_seq(n, _mpf(alpha), _mpf(x))
        signs = [(-1) ** m * (1 if v > 0 else -1 if v < 0 else 0) for m, v in enumerate(seq)]
        signs = [s for s in signs if s != 0]
        changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    return n - changes


def laguerre_float(n: int, alpha, x) -> float:
    with mpmath.workdps(_DPS):
        return float(_laguerre_seq(n, _mpf(alpha), _mpf(x))[n])


def smallest_zero(n: int, alpha, tol: float = 1e-12, max_iter: int = 400) -> float:
    """x_1(n, alpha), the smallest zero of L_n^(alpha), to absolute ``tol``.

    Scans outward from 0 until a step crosses a zero, then bisects. The
    bisection predicate is the Sturm zero count rather than the sign, so a
    coarse scan step that jumps over two zeros still converges on the first.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha_f = float(alpha)
    if not alpha_f > -1:
        raise ValueError("alpha must exceed -1")
    if n == 1:
        return alpha_f + 1.0
    step = max(1.0, (alpha_f + 2.0) / 8.0)
    with mpmath.workdps(_DPS):
        a = _mpf(alpha)
        lo, hi = mpmath.mpf(0), mpmath.mpf(step)
        for _ in range(max_iter):
            if zeros_below(n, a, hi) >= 1:
                break
            lo, hi = hi, hi + step
        else:
            raise RuntimeError("scan found no zero")
        for _ in range(max_iter):
            if hi - lo <= tol:
                break
            mid = (lo + hi) / 2
            if zeros_below(n, a, mid) >= 1:
                hi = mid
            else:
                lo = mid
        else:
            raise RuntimeError("bisection did not converge")
        root = (lo + hi) / 2
    return float(root)


def sturm_lower_root(n: int, alpha: float) -> float:
    """Smaller root of x^2 - (4n + 2(alpha+1)) x + (alpha^2 - 1)."""
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    disc = 4 * n * n + 2 * alpha + 2 + 4 * n * alpha + 4 * n
    assert disc >= 0
    return 2 * n + alpha + 1 - math.sqrt(disc)


def theorem1_threshold(r: int) -> float:
    """(sqrt(r) - 1/2)^2: lambda beyond which r+1 primes cluster in a positive proportion."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return (math.sqrt(r) - 0.5) ** 2


def eh_threshold(r: int, theta: float) -> float:
    """(sqrt(r) - sqrt(theta/2))^2 for level of distribution ``theta``."""
    if r < 1 or not 0 < theta <= 1:
        raise ValueError("need r >= 1 and 0 < theta <= 1")
    return (math.sqrt(r) - math.sqrt(theta / 2)) ** 2


def finite_k_threshold(k: int, r: int, theta: float, rho: float) -> float:
    """theta * x_1(k+1, rho/theta - k - 1): where S_k turns positive at level k."""
    if not rho > r:
        raise ValueError("need rho > r")
    alpha = rho / theta - k - 1
    if not alpha > -1:
        raise ValueError(f"alpha = {alpha} <= -1")
    return theta * smallest_zero(k + 1, alpha)
