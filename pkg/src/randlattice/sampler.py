"""The randomized lattice algorithm with a random number of points.

A draw picks a prime ``p`` uniformly from ``(n/2, n]`` (precisely
``n/2 + 1 <= p <= n``), then a generating vector uniformly from the good
set by rejection, then (optionally) a uniform shift.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .korobov import AlgorithmParams, SpaceParams, v_d
from .lattice import LatticeRule, Shift, apply, apply_shifted
from .merit import p_merit


class DrawFailure(RuntimeError):
    def __init__(self, n, p, tries):
        super().__init__(f"no good vector for n={n}, p={p} after {tries} tries")
        self.n, self.p, self.tries = n, p, tries


@dataclass(frozen=True)
class PrimeRange:
    n: int
    primes: tuple[int, ...]

    def __len__(self):
        return len(self.primes)


@dataclass(frozen=True)
class DrawRecord:
    n: int
    p: int
    z: tuple[int, ...]
    shift: tuple[float, ...] | None
    tries: int
    seed: int | None = None

    @property
    def rule(self) -> LatticeRule:
        return LatticeRule(self.p, self.z)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = list(self.z)
        d["shift"] = None if self.shift is None else list(self.shift)
        return d


def make_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *key)``.

    Streams with different keys are statistically independent; the same
    key always reproduces the same stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@functools.lru_cache(maxsize=256)
def sieve_primes(n: int) -> PrimeRange:
    if n < 2:
        raise ValueError("n must be >= 2")
    lo = n // 2 + 1 if n % 2 == 0 else (n + 1) // 2 + 1
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for q in range(2, math.isqrt(n) + 1):
        if is_p[q]:
            is_p[q * q :: q] = False
    return PrimeRange(n, tuple(int(q) for q in np.flatnonzero(is_p[lo:]) + lo))


def acceptance_threshold(p: int, space: SpaceParams, lam: float, tau: float = 0.5) -> float:
    """Bound ``V_d(alpha/lam, gamma^(1/lam)) / ((1 - tau) p)`` on the scaled merit."""
    sc = space.scaled(lam)
    return v_d(sc.alpha, sc.weights, sc.d) / ((1.0 - tau) * p)


def acceptance_test(p: int, z, space: SpaceParams, lam: float | None, tau: float = 0.5) -> bool:
    """Membership in the relaxed good set for one fixed ``lam``.

    Tests ``P_{alpha/lam, gamma^(1/lam)}(p, z) <= 2 V_d(alpha/lam, gamma^(1/lam)) / p``
    (for tau = 1/2), which forces the weighted Zaremba index above
    ``(p / (2 V_d))**lam``. For alpha = 0 there is no admissible ``lam`` and
    the condition is vacuous.
    """
    if space.alpha == 0:
        if lam is not None:
            raise ValueError("alpha = 0 admits no lambda")
        return True
    if lam is None or not (0 < lam < space.alpha):
        raise ValueError(f"lambda must lie in (0, {space.alpha})")
    rule = LatticeRule(p, z)
    sc = space.scaled(lam)
    merit = p_merit(rule, sc.alpha, sc.gammas).value
    return merit <= acceptance_threshold(p, space, lam, tau)


def _key(space, alg):
    return (space, alg.lam, alg.tau)


@functools.lru_cache(maxsize=64)
def _accepted(p, key):
    space, lam, tau = key
    Z = np.array(list(itertools.product(range(1, p), repeat=space.d)), dtype=np.int64)
    if space.alpha == 0:
        return Z
    ok = np.array([acceptance_test(p, z, space, lam, tau) for z in Z])
    return Z[ok]


def accepted_set(p: int, space: SpaceParams, alg: AlgorithmParams, budget: int = 10**6) -> np.ndarray:
    """Every accepted vector for ``p``, by exhaustive enumeration."""
    if (p - 1) ** space.d > budget:
        raise ValueError(f"(p-1)^d = {(p - 1) ** space.d} exceeds budget {budget}")
    return _accepted(int(p), _key(space, alg))


def draw(
    n: int,
    space: SpaceParams,
    alg: AlgorithmParams,
    rng: np.random.Generator,
    *,
    shifted: bool = False,
    seed: int | None = None,
) -> DrawRecord:
    """One realisation of (p, z[, shift]). ``seed`` is only recorded."""
    if n < 4:
        raise ValueError("n must be >= 4")
    primes = sieve_primes(n).primes
    p = primes[int(rng.integers(len(primes)))]
    for tries in range(1, alg.try_cap + 1):
        z = tuple(int(x) for x in rng.integers(1, p, size=space.d))
        if acceptance_test(p, z, space, alg.lam, alg.tau):
            break
    else:
        raise DrawFailure(n, p, alg.try_cap)
    u = tuple(float(x) for x in rng.random(space.d)) if shifted else None
    return DrawRecord(n=n, p=p, z=z, shift=u, tries=tries, seed=seed)


def integrate_once(f, n, space, alg, rng, shifted: bool = False, seed: int | None = None):
    """One estimate of the integral of ``f``; uses at most ``n`` evaluations."""
    rec = draw(n, space, alg, rng, shifted=shifted, seed=seed)
    if shifted:
        est = apply_shifted(rec.rule, Shift(rec.shift), f)
    else:
        est = apply(rec.rule, f)
    return est, rec
