"""Weighted Korobov space parameters and the quantities built on them.

The decay function ``r(h) = prod_j max(1, |h_j|^alpha / gamma_j)`` controls
the norm of the space; its reciprocal sums give ``V_d`` and the counting
bounds used by the randomized lattice algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

_EPS = np.finfo(float).eps


class BudgetExceeded(RuntimeError):
    """An enumeration needed more work than the configured budget allows."""


@dataclass(frozen=True)
class Weights:
    """Finite, non-increasing product weights in (0, 1]."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        object.__setattr__(self, "gammas", g)
        if not g:
            raise ValueError("weights must be non-empty")
        for x in g:
            if not (0.0 < x <= 1.0):
                raise ValueError(f"weight {x} outside (0, 1]")
        for a, b in zip(g, g[1:]):
            if b > a:
                raise ValueError("weights must be non-increasing")

    def __len__(self):
        return len(self.gammas)

    def __getitem__(self, j):
        return self.gammas[j]

    def first(self, d: int) -> np.ndarray:
        if d > len(self.gammas):
            raise IndexError(f"need {d} weights, only {len(self.gammas)} given")
        return np.asarray(self.gammas[:d], dtype=float)

    def power(self, e: float) -> "Weights":
        """Weights ``gamma_j ** e``; stays admissible for ``e > 0``."""
        return Weights(tuple(g**e for g in self.gammas))

    @classmethod
    def parse(cls, spec, d: int | None = None) -> "Weights":
        """Build weights from a list, a comma string, or a rule string.

        Rule strings: ``const:c`` (all equal to c) and ``pow:a``
        (``gamma_j = j**-a``). Rules need ``d`` to know how many to emit.
        """
        if isinstance(spec, Weights):
            return spec
        if isinstance(spec, str):
            s = spec.strip()
            if ":" in s:
                rule, arg = s.split(":", 1)
                if d is None:
                    raise ValueError("rule-based weights need a dimension")
                a = float(arg)
                if rule == "const":
                    return cls((a,) * d)
                if rule == "pow":
                    return cls(tuple((j + 1) ** -a for j in range(d)))
                raise ValueError(f"unknown weight rule {rule!r}")
            spec = [float(x) for x in s.split(",") if x.strip()]
        return cls(tuple(spec))


@dataclass(frozen=True)
class SpaceParams:
    """Identifies the space H_{d, alpha, gamma}."""

    d: int
    alpha: float
    weights: Weights

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not isinstance(self.weights, Weights):
            object.__setattr__(self, "weights", Weights.parse(self.weights, self.d))
        if len(self.weights) < self.d:
            raise ValueError(f"need {self.d} weights, got {len(self.weights)}")

    @property
    def gammas(self) -> np.ndarray:
        return self.weights.first(self.d)

    def scaled(self, lam: float) -> "SpaceParams":
        """The space with parameters (alpha/lam, gamma**(1/lam))."""
        return SpaceParams(self.d, self.alpha / lam, self.weights.power(1.0 / lam))

    def squared(self) -> "SpaceParams":
        """(2 alpha, gamma**2): ``r_{alpha,gamma}(h)**2 == r_{2alpha,gamma^2}(h)``."""
        return SpaceParams(self.d, 2.0 * self.alpha, self.weights.power(2.0))


@dataclass(frozen=True)
class AlgorithmParams:
    """Parameters of the randomized lattice algorithm.

    ``lam`` selects the relaxed good-vector set; ``delta`` only enters the
    error bounds (sufficient-n calculator), never the algorithm itself.
    ``lam`` is ``None`` for alpha = 0, where every vector counts as good.
    """

    lam: float | None
    delta: float = 0.1
    tau: float = 0.5
    try_cap: int = 64

    def __post_init__(self):
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau must lie in (0, 1)")
        if self.try_cap < 1:
            raise ValueError("try_cap must be >= 1")

    @classmethod
    def default(cls, space: SpaceParams, shifted: bool = False, **kw) -> "AlgorithmParams":
        a = space.alpha
        if a == 0:
            return cls(lam=None, **kw)
        lam = a - 0.05
        if shifted:
            if lam <= 0:
                lam = a / 2
        else:
            if a <= 0.5:
                raise ValueError("the unshifted algorithm needs alpha > 1/2")
            if lam <= 0.5:
                lam = (a + 0.5) / 2
        if "delta" not in kw and not shifted:
            kw["delta"] = min(0.1, (lam - 0.5) / 2)
        return cls(lam=lam, **kw)

    def validate(self, space: SpaceParams, shifted: bool = False) -> None:
        a = space.alpha
        if a == 0:
            if self.lam is not None:
                raise ValueError("alpha = 0 admits no lambda in (0, alpha)")
            return
        if self.lam is None or not (0 < self.lam < a):
            raise ValueError(f"lambda must lie in (0, {a})")
        if not shifted:
            if self.lam <= 0.5:
                raise ValueError("the unshifted algorithm needs lambda > 1/2")
            if not (self.delta < self.lam - 0.5):
                raise ValueError("the unshifted algorithm needs delta < lambda - 1/2")


def r_value(alpha: float, gamma: float, h: int) -> float:
    """``max(1, |h|**alpha / gamma)``, with ``r(0) = 1``."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma {gamma} outside (0, 1]")
    if h == 0:
        return 1.0
    return max(1.0, abs(h) ** alpha / gamma)


def r_vector(space: SpaceParams, h: Sequence[int]) -> float:
    h = tuple(int(x) for x in h)
    if len(h) != space.d:
        raise ValueError(f"h has length {len(h)}, expected {space.d}")
    out = 1.0
    for a, g in zip(h, space.gammas):
        out *= r_value(space.alpha, float(g), a)
    return out


def r_array(alpha: float, gammas, h) -> np.ndarray:
    """Vectorised r over the last axis of an integer array ``h``."""
    h = np.abs(np.asarray(h, dtype=float))
    g = np.asarray(gammas, dtype=float)
    with np.errstate(divide="ignore"):
        per = np.where(h == 0, 1.0, np.maximum(1.0, h**alpha / g))
    return np.prod(per, axis=-1)


_ZETA_EVEN = {2: math.pi**2 / 6, 4: math.pi**4 / 90, 6: math.pi**6 / 945}


def zeta(beta: float) -> float:
    """Riemann zeta for real ``beta > 1``."""
    if beta <= 1:
        raise ValueError("zeta diverges for beta <= 1")
    if float(beta).is_integer() and int(beta) in _ZETA_EVEN:
        return _ZETA_EVEN[int(beta)]
    return float(special.zeta(beta))


def v_d(beta: float, weights: Weights, d: int) -> float:
    """``3 * prod_{j<=d} (1 + 2 gamma_j zeta(beta))``."""
    z = zeta(beta)
    g = Weights.parse(weights, d).first(d)
    return 3.0 * float(np.prod(1.0 + 2.0 * g * z))


def _one_dim_sum(beta: float, H: int) -> float:
    h = np.arange(H, 0, -1, dtype=float)
    return math.fsum(h**-beta)


def sum_inverse_r_oracle(beta: float, weights: Weights, d: int, H: int) -> tuple[float, float]:
    """Certified interval for ``sum_{h in Z^d} 1/r_{beta,gamma}(h)``.

    The box sum over ``[-H, H]^d`` factorises into one-dimensional direct
    sums; each coordinate's missing tail is at most
    ``2 gamma H**(1-beta) / (beta-1)``. Both ends are padded for rounding.
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if H < 1:
        raise ValueError("H must be >= 1")
    g = Weights.parse(weights, d).first(d)
    s = _one_dim_sum(beta, H)
    tail = H ** (1.0 - beta) / (beta - 1.0)
    lo = float(np.prod(1.0 + 2.0 * g * s))
    hi = float(np.prod(1.0 + 2.0 * g * (s + tail)))
    pad = 8 * d * _EPS
    return float(lo * (1 - pad)), float(hi * (1 + pad))


def brute_box_sum(beta: float, weights: Weights, d: int, H: int) -> float:
    """Direct summation over the full box; only for small ``H**d``."""
    g = Weights.parse(weights, d).first(d)
    axis = np.arange(-H, H + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return math.fsum(1.0 / r_array(beta, g, grid))


def count_small_r(beta: float, weights: Weights, d: int, T: float, budget: int = 10**7) -> int:
    """Exact size of ``{h : r_{beta,gamma}(h) <= T}`` (ties included)."""
    if T <= 0:
        raise ValueError("T must be positive")
    g = Weights.parse(weights, d).first(d)
    per = []
    for gj in g:
        m = int(math.floor((T * gj) ** (1.0 / beta))) + 1 if beta > 0 else None
        if m is None:
            raise ValueError("beta = 0 gives an unbounded set")
        vals = [r_value(beta, gj, h) for h in range(0, m + 1)]
        per.append([v for v in vals if v <= T])
    work = [0]

    def rec(j, acc):
        if j == d:
            return 1
        total = 0
        for h, v in enumerate(per[j]):
            work[0] += 1
            if work[0] > budget:
                raise BudgetExceeded(f"count_small_r exceeded budget {budget}")
            prod = acc * v
            if prod > T:
                break
            total += rec(j + 1, prod) * (1 if h == 0 else 2)
        return total

    # r is non-decreasing in |h|, so the break above is safe
    return rec(0, 1.0)
