"""Independent brute-force references used to freeze expected values.

Nothing here imports the package's merit or counting code.
"""

import itertools
import math

import numpy as np


def r_ref(alpha, gammas, h):
    out = 1.0
    for a, g in zip(h, gammas):
        if a != 0:
            out *= max(1.0, abs(a) ** alpha / g)
    return out


def dual_box(p, z, H):
    """Every nonzero h in [-H, H]^d with h.z = 0 mod p."""
    d = len(z)
    for h in itertools.product(range(-H, H + 1), repeat=d):
        if any(h) and sum(a * b for a, b in zip(h, z)) % p == 0:
            yield h


def merit_box(p, z, beta, gammas, H):
    return math.fsum(1.0 / r_ref(beta, gammas, h) for h in dual_box(p, z, H))


def divisor_brute(p, h):
    d = len(h)
    return sum(1 for z in itertools.product(range(1, p), repeat=d)
               if sum(a * b for a, b in zip(h, z)) % p == 0)


def primes_between(lo, hi):
    return [q for q in range(max(lo, 2), hi + 1) if all(q % k for k in range(2, int(q**0.5) + 1))]


def lattice_points(p, z):
    return np.array([[(k * zj % p) / p for zj in z] for k in range(p)])
