"""Numerical experiments on small gaps between primes.

Sieved arithmetic tables, singular series, truncated divisor sums, their
correlation sums, the exact Poisson/Laguerre moment machinery, and the
detection statistics built from them.
"""

from .arith import ArithTable, build_tables, psi, psi_interval
from .correlations import Lab, correlation_pair, correlation_with_prime, moment_M, moment_M_tilde
from .divisor_sums import build_lambda_r_window, lambda_r, psi_r_k
from .gaps import GapReport, fourth_moment_check, gap_census, q_r_plus, s_k_statistic, sieve_bound_check
from .poisson import build_moment_form, finite_k_threshold, q_max_closed_form, smallest_zero
from .reports import RunConfig, bounds_table
from .tuples import TupleSet, is_admissible, singular_series

__version__ = "0.1.0"
