"""Figures of merit for rank-1 lattice rules.

Everything here is a sum or minimum over the dual lattice
``{h != 0 : h . z = 0 mod p}``. The sum ``P_{beta,gamma}(p, z)`` is computed
three ways:

* closed form (even ``beta``) through periodic Bernoulli polynomials,
* an exact spectral form (any ``beta > 1``) through the Hurwitz zeta
  function,
* a truncated brute-force enumeration with a certified tail bound, kept as
  an independent oracle.

Both fast routes use the identity
``P = (1/p) sum_k prod_j (1 + gamma_j K({k z_j / p})) - 1`` with
``K(x) = sum_{h != 0} exp(2 pi i h x) / |h|**beta``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .korobov import BudgetExceeded, SpaceParams, Weights, r_array, r_value
from .lattice import LatticeRule

CLOSED_FORM = "closed_form"
TRUNCATED_ORACLE = "truncated_oracle"

_CHUNK = 1 << 15


def bernoulli2(x):
    return x * x - x + 1.0 / 6.0


def bernoulli4(x):
    x2 = x * x
    return x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0


def bernoulli6(x):
    x2 = x * x
    x4 = x2 * x2
    return x4 * x2 - 3.0 * x4 * x + 2.5 * x4 - 0.5 * x2 + 1.0 / 42.0


BERNOULLI = {2: bernoulli2, 4: bernoulli4, 6: bernoulli6}


def kernel_scale(beta: int) -> float:
    """Constant turning ``B_beta`` into ``sum_{h!=0} e(hx) / |h|^beta``."""
    return (-1.0) ** (beta // 2 + 1) * (2.0 * math.pi) ** beta / math.factorial(beta)


def bernoulli_kernel(beta: int, x):
    """``sum_{h != 0} exp(2 pi i h x) / |h|**beta`` for ``x`` in [0, 1)."""
    if beta not in BERNOULLI:
        raise ValueError(f"closed form only for beta in {{2, 4, 6}}, got {beta}")
    return kernel_scale(beta) * BERNOULLI[beta](x)


def _is_even_closed(beta) -> bool:
    return float(beta).is_integer() and int(beta) in BERNOULLI


@functools.lru_cache(maxsize=512)
def _table_closed(beta: int, p: int) -> np.ndarray:
    t = bernoulli_kernel(beta, np.arange(p) / p)
    t.setflags(write=False)
    return t


@functools.lru_cache(maxsize=512)
def _table_hurwitz(beta: float, p: int) -> np.ndarray:
    # grouping h = q p + r: sum_h cos(2 pi h m / p) h^-beta
    #   = p^-beta sum_{r=1..p} zeta(beta, r/p) cos(2 pi r m / p)
    r = np.arange(p, dtype=float)
    r[0] = p
    a = special.zeta(beta, r / p) * float(p) ** -beta
    t = 2.0 * np.real(np.fft.fft(a))
    t.setflags(write=False)
    return t


def kernel_table(beta: float, p: int, method: str = "auto") -> np.ndarray:
    """``K(m / p)`` for ``m = 0..p-1``."""
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if method == "auto":
        method = "bernoulli" if _is_even_closed(beta) else "hurwitz"
    if method == "bernoulli":
        if not _is_even_closed(beta):
            raise ValueError(f"closed form only for beta in {{2, 4, 6}}, got {beta}")
        return _table_closed(int(beta), int(p))
    if method == "hurwitz":
        return _table_hurwitz(float(beta), int(p))
    raise ValueError(f"unknown kernel method {method!r}")


@dataclass(frozen=True)
class MeritResult:
    value: float
    method: str
    tail_bound: float = 0.0
    p: int | None = None
    z: tuple[int, ...] | None = None
    beta: float | None = None
    gammas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.method not in (CLOSED_FORM, TRUNCATED_ORACLE):
            raise ValueError(f"unknown method {self.method!r}")
        if (self.tail_bound == 0.0) != (self.method == CLOSED_FORM):
            raise ValueError("tail_bound must be 0 exactly for closed-form results")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DualVector:
    h: tuple[int, ...]
    r: float


def _gammas(weights, d) -> np.ndarray:
    if isinstance(weights, Weights):
        return weights.first(d)
    g = np.asarray(weights, dtype=float)
    if g.size < d:
        raise ValueError(f"need {d} weights, got {g.size}")
    return g[:d]


def merit_from_table(rule: LatticeRule, table: np.ndarray, gammas) -> float:
    """``(1/p) sum_k prod_j (1 + gamma_j table[k z_j mod p]) - 1``."""
    g = _gammas(gammas, rule.d)
    chunks = []
    for start in range(0, rule.p, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, rule.p), dtype=np.int64)
        idx = rule.indices(k)
        chunks.append(np.sum(np.prod(1.0 + g * table[idx], axis=1)))
    return math.fsum(chunks) / rule.p - 1.0


def _result(rule, beta, g, value, method=CLOSED_FORM, tail=0.0):
    return MeritResult(
        value=float(value), method=method, tail_bound=float(tail), p=rule.p, z=rule.z,
        beta=float(beta), gammas=tuple(float(x) for x in g),
    )


def p_merit_closed(rule: LatticeRule, beta: int, weights) -> MeritResult:
    """``P_{beta,gamma}(p, z)`` via Bernoulli polynomials, beta in {2, 4, 6}."""
    if not _is_even_closed(beta):
        raise ValueError(f"closed form only for beta in {{2, 4, 6}}, got {beta}")
    g = _gammas(weights, rule.d)
    val = merit_from_table(rule, kernel_table(beta, rule.p, "bernoulli"), g)
    return _result(rule, beta, g, val)


def p_merit_spectral(rule: LatticeRule, beta: float, weights) -> MeritResult:
    """``P_{beta,gamma}(p, z)`` for any real ``beta > 1`` via Hurwitz zeta."""
    g = _gammas(weights, rule.d)
    val = merit_from_table(rule, kernel_table(beta, rule.p, "hurwitz"), g)
    return _result(rule, beta, g, val)


def p_merit(rule: LatticeRule, beta: float, weights) -> MeritResult:
    if _is_even_closed(beta):
        return p_merit_closed(rule, int(beta), weights)
    return p_merit_spectral(rule, beta, weights)


def p_merit_oracle(
    rule: LatticeRule, beta: float, weights, H: int, budget: int = 5 * 10**7
) -> MeritResult:
    """Brute-force dual sum over ``[-H, H]^d`` plus a rigorous tail bound.

    The true value lies in ``[value, value + tail_bound]``.
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if H < rule.p:
        raise ValueError("H must be at least p")
    p, d = rule.p, rule.d
    g = _gammas(weights, d)
    width = 2 * H + 1
    m_last = -(-width // p)
    if width ** (d - 1) * m_last > budget:
        raise BudgetExceeded(f"oracle box needs ~{width ** (d - 1) * m_last} terms")

    def inv_r1(h, gj):
        h = np.abs(h).astype(float)
        with np.errstate(divide="ignore"):
            return np.where(h == 0, 1.0, np.minimum(1.0, gj / h**beta))

    z = np.asarray(rule.z, dtype=np.int64)
    zd_inv = pow(int(z[-1]), -1, p)
    axis = np.arange(-H, H + 1, dtype=np.int64)
    t = np.arange(m_last, dtype=np.int64)
    partial = []
    if d == 1:
        h = axis[axis % p == 0]
        partial.append(np.sum(inv_r1(h, g[0])))
    else:
        free_count = width ** (d - 1)
        for start in range(0, free_count, _CHUNK):
            flat = np.arange(start, min(start + _CHUNK, free_count), dtype=np.int64)
            free = np.stack(np.unravel_index(flat, (width,) * (d - 1)), axis=-1) - H
            w = np.prod(inv_r1(free, g[:-1]), axis=1)
            s = (free @ z[:-1]) % p
            c = (-s * zd_inv) % p
            first = -H + (c + H) % p
            hd = first[:, None] + p * t[None, :]
            ok = hd <= H
            last = np.where(ok, inv_r1(hd, g[-1]), 0.0).sum(axis=1)
            partial.append(np.sum(w * last))
    value = math.fsum(float(x) for x in partial) - 1.0  # drop h = 0
    s1 = math.fsum(np.arange(H, 0, -1, dtype=float) ** -beta)
    tail1 = H ** (1.0 - beta) / (beta - 1.0)
    inner = np.prod(1.0 + 2.0 * g * s1)
    outer = np.prod(1.0 + 2.0 * g * (s1 + tail1))
    tail = float(outer - inner) + 16 * d * np.finfo(float).eps * float(outer)
    return _result(rule, beta, g, value, TRUNCATED_ORACLE, tail)


def worst_case_error(rule: LatticeRule, space: SpaceParams) -> float:
    """Worst-case error of the rule on the unit ball: ``sqrt(P_{2alpha, gamma^2})``."""
    if space.d != rule.d:
        raise ValueError("space and rule dimensions differ")
    if 2 * space.alpha <= 1:
        raise ValueError("worst-case error is infinite for alpha <= 1/2")
    sq = space.squared()
    return math.sqrt(max(p_merit(rule, sq.alpha, sq.gammas).value, 0.0))


def _max_abs(bound, alpha, gamma):
    # largest |h| with |h|^alpha / gamma <= bound (h = 0 always allowed)
    if bound < 1:
        return -1
    m = int(math.floor((bound * gamma) ** (1.0 / alpha))) + 1
    while m > 0 and r_value(alpha, gamma, m) > bound:
        m -= 1
    return m


def enumerate_dual(
    rule: LatticeRule, r_bound: float, space: SpaceParams, budget: int = 10**7
) -> list[DualVector]:
    """All nonzero dual vectors with ``r_{alpha,gamma}(h) <= r_bound``.

    Free coordinates are walked with pruning on the running product of
    ``r``; the last coordinate is solved from the congruence.
    """
    if space.alpha <= 0:
        raise ValueError("alpha = 0 gives an unbounded enumeration box")
    if space.d != rule.d:
        raise ValueError("space and rule dimensions differ")
    p, d, a = rule.p, rule.d, space.alpha
    g = space.gammas
    z = rule.z
    zd_inv = pow(z[-1], -1, p)
    out: list[DualVector] = []
    work = [0]

    def coord_values(j, bound):
        m = _max_abs(bound, a, g[j])
        vals = [0]
        for k in range(1, m + 1):
            vals += [k, -k]
        return vals

    def rec(prefix, acc, dot):
        j = len(prefix)
        if j == d - 1:
            bound = r_bound / acc
            m = _max_abs(bound, a, g[-1])
            if m < 0:
                return
            c = (-dot * zd_inv) % p
            hd = -m + (c + m) % p
            while hd <= m:
                work[0] += 1
                if work[0] > budget:
                    raise BudgetExceeded(f"enumerate_dual exceeded budget {budget}")
                h = prefix + (hd,)
                if any(h):
                    r = acc * r_value(a, g[-1], hd)
                    if r <= r_bound:
                        out.append(DualVector(h, float(r)))
                hd += p
            return
        for v in coord_values(j, r_bound / acc):
            work[0] += 1
            if work[0] > budget:
                raise BudgetExceeded(f"enumerate_dual exceeded budget {budget}")
            rv = acc * r_value(a, g[j], v)
            if rv > r_bound:
                continue
            rec(prefix + (v,), rv, dot + v * z[j])

    rec((), 1.0, 0)
    out.sort(key=lambda dv: (dv.r, tuple(abs(x) for x in dv.h), dv.h))
    return out


def rho_index(rule: LatticeRule, space: SpaceParams, search_cap: int = 10**7) -> float:
    """Weighted Zaremba index: min of ``r_{alpha,gamma}`` over the nonzero dual.

    Iterative deepening on the bound (factor 2), capped by the axis vector
    ``(p, 0, ..., 0)`` which always lies in the dual.
    """
    if space.alpha <= 0:
        raise ValueError("rho_index needs alpha > 0")
    seed = r_value(space.alpha, space.gammas[0], rule.p)
    b = 1.0
    while b < seed:
        found = enumerate_dual(rule, b, space, budget=search_cap)
        if found:
            return found[0].r
        b *= 2.0
    found = enumerate_dual(rule, seed, space, budget=search_cap)
    return found[0].r


def divisor_count(p: int, h: Sequence[int]) -> int:
    """``#{z in {1..p-1}^d : h . z = 0 mod p}``, exactly.

    With ``m`` coordinates of ``h`` nonzero mod p, substituting
    ``w_j = h_j z_j`` reduces to counting m-tuples of units summing to 0,
    which is ``((p-1)^m + (-1)^m (p-1)) / p``.
    """
    d = len(h)
    m = sum(1 for x in h if int(x) % p)
    if m == 0:
        return (p - 1) ** d
    units = ((p - 1) ** m + (-1) ** m * (p - 1)) // p
    return (p - 1) ** (d - m) * units


def _default_provider(space, alg):
    from .sampler import accepted_set

    return lambda p: accepted_set(p, space, alg)


def omega_weight(
    n: int,
    h: Sequence[int],
    space: SpaceParams,
    alg,
    z_set_provider: Callable[[int], np.ndarray] | None = None,
    budget: int = 10**6,
) -> float:
    """Probability that ``h`` lies in the dual lattice of the random rule.

    Exact: averages the indicator over every good vector of every prime in
    the range. ``z_set_provider(p)`` returns the good set as an array.
    """
    from .sampler import sieve_primes

    h = np.asarray(h, dtype=np.int64)
    if h.shape != (space.d,):
        raise ValueError("h has the wrong dimension")
    if not h.any():
        raise ValueError("omega is defined for h != 0 only")
    provider = z_set_provider or _default_provider(space, alg)
    primes = sieve_primes(n).primes
    fracs = []
    for p in primes:
        if (p - 1) ** space.d > budget:
            raise BudgetExceeded(f"(p-1)^d = {(p - 1) ** space.d} exceeds {budget}")
        Z = np.asarray(provider(p), dtype=np.int64)
        fracs.append(np.count_nonzero((Z @ h) % p == 0) / len(Z))
    return math.fsum(fracs) / len(primes)


def omega_weight_mc(n, h, space, alg, rng, samples: int = 10_000) -> tuple[float, float]:
    """Monte Carlo estimate of omega (value, standard error) for large grids."""
    from .sampler import draw

    h = np.asarray(h, dtype=np.int64)
    if not h.any():
        raise ValueError("omega is defined for h != 0 only")
    hits = np.empty(samples)
    for i in range(samples):
        rec = draw(n, space, alg, rng)
        hits[i] = (int(np.dot(h, rec.z)) % rec.p) == 0
    return float(hits.mean()), float(hits.std(ddof=1) / math.sqrt(samples))
