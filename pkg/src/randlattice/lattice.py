"""Rank-1 lattice rules ``Q(f) = (1/p) sum_k f({k z / p})`` with optional shift.

Evaluators are vectorised: they take an ``(N, d)`` array of points and
return ``N`` values (real or complex) and must be pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np

Evaluator = Callable[[np.ndarray], np.ndarray]

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_CHUNK = 1 << 16


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    n = int(n)
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class LatticeRule:
    p: int
    z: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "z", tuple(int(x) for x in np.atleast_1d(self.z)))
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        if not self.z:
            raise ValueError("generating vector is empty")
        for zj in self.z:
            if not (1 <= zj <= self.p - 1):
                raise ValueError(f"component {zj} outside 1..{self.p - 1}")

    @property
    def d(self) -> int:
        return len(self.z)

    def indices(self, k: np.ndarray | None = None) -> np.ndarray:
        """Integer residues ``k z_j mod p``, shape ``(len(k), d)``."""
        if k is None:
            k = np.arange(self.p, dtype=np.int64)
        return (k[:, None] * np.asarray(self.z, dtype=np.int64)[None, :]) % self.p


@dataclass(frozen=True)
class Shift:
    u: tuple[float, ...]

    def __post_init__(self):
        u = tuple(float(x) for x in np.atleast_1d(self.u))
        object.__setattr__(self, "u", u)
        for x in u:
            if not (0.0 <= x < 1.0):
                raise ValueError(f"shift coordinate {x} outside [0, 1)")

    @property
    def d(self) -> int:
        return len(self.u)


def points(rule: LatticeRule, k: np.ndarray | None = None) -> np.ndarray:
    # exact integer residues first, one division at the end
    return rule.indices(k) / rule.p


def _shifted_points(rule, shift, k):
    x = points(rule, k)
    if shift is None:
        return x
    if shift.d != rule.d:
        raise ValueError("shift dimension does not match the rule")
    x = x + np.asarray(shift.u)
    x -= np.floor(x)
    # x + u can round up to exactly 1.0
    x[x >= 1.0] = 0.0
    return x


def _mean(rule, f, shift):
    partial = []
    for start in range(0, rule.p, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, rule.p), dtype=np.int64)
        vals = np.asarray(f(_shifted_points(rule, shift, k)))
        partial.append(np.sum(vals))  # numpy sums pairwise
    if np.iscomplexobj(partial):
        re = math.fsum(float(np.real(v)) for v in partial)
        im = math.fsum(float(np.imag(v)) for v in partial)
        return complex(re, im) / rule.p
    return math.fsum(float(v) for v in partial) / rule.p


def apply(rule: LatticeRule, f: Evaluator):
    """``Q_{d,p,z}(f)``: equal-weight average of ``f`` over the lattice."""
    return _mean(rule, f, None)


def apply_shifted(rule: LatticeRule, shift: Shift | Sequence[float], f: Evaluator):
    """Lattice rule applied to ``x -> f({x + u})``."""
    if not isinstance(shift, Shift):
        shift = Shift(shift)
    return _mean(rule, f, shift)


def write_points(rule: LatticeRule, out: TextIO, shift: Shift | None = None) -> None:
    """One point per line, space separated, 17 significant digits."""
    for start in range(0, rule.p, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, rule.p), dtype=np.int64)
        for row in _shifted_points(rule, shift, k):
            out.write(" ".join(f"{v:.17g}" for v in row))
            out.write("\n")


def read_points(src: TextIO) -> np.ndarray:
    return np.loadtxt(src, ndmin=2)
