"""Randomized rank-1 lattice rules with a random number of points."""

from .cbc import CbcResult, cbc_construct
from .korobov import (
    AlgorithmParams,
    BudgetExceeded,
    SpaceParams,
    Weights,
    count_small_r,
    r_value,
    r_vector,
    sum_inverse_r_oracle,
    v_d,
    zeta,
)
from .lattice import LatticeRule, Shift, apply, apply_shifted, is_prime, points, write_points
from .merit import (
    DualVector,
    MeritResult,
    divisor_count,
    enumerate_dual,
    omega_weight,
    p_merit,
    p_merit_closed,
    p_merit_oracle,
    p_merit_spectral,
    rho_index,
    worst_case_error,
)
from .sampler import (
    DrawFailure,
    DrawRecord,
    PrimeRange,
    acceptance_test,
    draw,
    integrate_once,
    make_stream,
    sieve_primes,
)
from .testfns import (
    TestFunction,
    lower_bound_fn,
    product_kernel_fn,
    trig_poly_fn,
    worst_case_fn,
)

__version__ = "0.1.0"
