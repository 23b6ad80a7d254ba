"""Test integrands with known integral, Korobov norm, and rule error."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .korobov import SpaceParams, r_array, r_vector, zeta
from .lattice import LatticeRule
from .merit import (
    BERNOULLI,
    bernoulli_kernel,
    enumerate_dual,
    kernel_table,
    merit_from_table,
    p_merit,
    p_merit_spectral,
)
from .sampler import sieve_primes


@dataclass(frozen=True)
class TestFunction:
    evaluator: Callable[[np.ndarray], np.ndarray]
    exact_integral: complex | float
    norm: float
    kind: str
    params: dict = field(default_factory=dict)
    # exact error Q(f) - I(f) for a given rule, where known in closed form
    rule_error: Callable[[LatticeRule], complex | float] | None = None

    __test__ = False  # not a pytest class

    def __call__(self, x):
        return self.evaluator(x)

    def descriptor(self) -> dict:
        return {"kind": self.kind, **self.params}


def _c2(coeffs: Mapping) -> dict:
    out = {}
    for h, c in coeffs.items():
        key = (int(h),) if np.isscalar(h) else tuple(int(x) for x in h)
        out[key] = complex(c)
    return out


def trig_poly_fn(coeffs: Mapping, space: SpaceParams) -> TestFunction:
    """``f(x) = sum_h c_h exp(2 pi i h.x)`` over a finite support."""
    coeffs = _c2(coeffs)
    d = space.d
    zero = (0,) * d
    for h in coeffs:
        if len(h) != d and h != (0,):
            raise ValueError(f"mode {h} has wrong dimension")
    coeffs = {(zero if h == (0,) else h): c for h, c in coeffs.items()}
    H = np.array(list(coeffs), dtype=np.int64).reshape(-1, d)
    C = np.array(list(coeffs.values()), dtype=complex)

    def f(x):
        x = np.atleast_2d(x)
        return np.exp(2j * np.pi * (x @ H.T)) @ C

    norm = math.sqrt(math.fsum(abs(r_vector(space, h) * c) ** 2 for h, c in coeffs.items()))

    def err(rule):
        return sum(c for h, c in coeffs.items() if any(h) and np.dot(h, rule.z) % rule.p == 0)

    return TestFunction(
        f, coeffs.get(zero, 0j), norm, "trig_poly",
        {"coeffs": [[list(h), [c.real, c.imag]] for h, c in coeffs.items()]}, err,
    )


def product_kernel_fn(space: SpaceParams, order: int | None = None) -> TestFunction:
    """``prod_j (1 + gamma_j K_{2k}({x_j}))`` with Fourier coefficients
    ``prod_{h_j != 0} gamma_j |h_j|^(-2k)``.

    ``order`` is the kernel smoothness ``k`` (default: ``alpha``). The norm is
    taken in the space's own ``alpha``: ``prod_j (1 + 2 zeta(4k - 2 alpha))``,
    squared-rooted; it does not depend on the weights.
    """
    k = int(space.alpha) if order is None else int(order)
    if order is None and space.alpha != k:
        raise ValueError("product kernel needs integer alpha, or an explicit order")
    if 2 * k not in BERNOULLI:
        raise ValueError(f"kernel order must be 1, 2 or 3, got {k}")
    e = 4 * k - 2 * space.alpha
    if e <= 1:
        raise ValueError("kernel is not in the space (infinite norm)")
    g = space.gammas

    def f(x):
        x = np.atleast_2d(x)
        return np.prod(1.0 + g * bernoulli_kernel(2 * k, x), axis=1)

    norm = math.sqrt((1.0 + 2.0 * zeta(e)) ** space.d)

    def err(rule):
        return p_merit(rule, 2 * k, g).value

    return TestFunction(f, 1.0, norm, "product_kernel", {"order": k}, err)


def lower_bound_fn(n: int, space: SpaceParams) -> TestFunction:
    """Unit-norm function whose error is the same for every ``z``.

    Modes ``(q, 0, ..., 0)`` for ``q`` in the prime range get coefficient
    ``1 / (r(q, 0, ..., 0) sqrt(#primes))``; a rule with modulus ``p`` aliases
    exactly the mode ``q = p``. Complex-valued.
    """
    primes = np.array(sieve_primes(n).primes, dtype=np.int64)
    if primes.size == 0:
        raise ValueError(f"no primes in range for n={n}")
    a, g1 = space.alpha, space.gammas[0]
    root = math.sqrt(primes.size)
    c = np.array([1.0 / (r_array(a, [g1], [[q]])[0] * root) for q in primes])

    def f(x):
        x = np.atleast_2d(x)
        step = max(1, (1 << 22) // primes.size)
        return np.concatenate([np.exp(2j * np.pi * np.outer(x[i : i + step, 0], primes)) @ c
                               for i in range(0, len(x), step)])

    coef = dict(zip(primes.tolist(), c.tolist()))

    def err(rule):
        return coef.get(rule.p, 0.0)

    return TestFunction(f, 0.0, 1.0, "lower_bound", {"n": n}, err)


def lower_bound_error(p: int, n: int, space: SpaceParams) -> float:
    """``gamma_1 / (p^alpha sqrt(#primes))``."""
    return space.gammas[0] / (p**space.alpha * math.sqrt(len(sieve_primes(n))))


def worst_case_fn(rule: LatticeRule, space: SpaceParams, mode: str = "auto",
                  r_cut: float | None = None, budget: int = 10**6) -> TestFunction:
    """Unit-norm integrand attaining the rule's worst-case error.

    Coefficients ``c / r_{2alpha,gamma^2}(h)`` on the nonzero dual lattice.
    ``mode="kernel"`` (integer alpha) sums the full series through the
    reproducing kernel, ``f(x) = c ((1/p) sum_k prod_j (1 + gamma_j^2
    K({x_j - k z_j/p})) - 1)``, costing ``p`` kernel terms per point.
    ``mode="truncated"`` keeps dual modes with ``r <= r_cut`` and records
    the dropped mass in ``params['tail']``.
    """
    if space.d != rule.d:
        raise ValueError("space and rule dimensions differ")
    sq = space.squared()
    g2 = sq.gammas
    beta = sq.alpha
    if mode == "auto":
        mode = "kernel" if float(beta).is_integer() and int(beta) in BERNOULLI else "truncated"
    P = p_merit(rule, beta, g2).value
    c = 1.0 / math.sqrt(P)
    # independent route for the norm: Hurwitz-zeta kernel (any beta)
    P_check = p_merit_spectral(rule, beta, g2).value
    if mode == "kernel":
        shift = rule.indices() / rule.p  # (p, d)

        def f(x):
            x = np.atleast_2d(x)
            out = np.empty(len(x))
            for i in range(0, len(x), 256):
                xs = x[i : i + 256, None, :] - shift[None, :, :]
                xs -= np.floor(xs)
                out[i : i + 256] = np.prod(1.0 + g2 * bernoulli_kernel(int(beta), xs), axis=2).mean(axis=1) - 1.0
            return c * out

        return TestFunction(
            f, 0.0, c * math.sqrt(P_check), "worst_case",
            {"p": rule.p, "z": list(rule.z), "mode": mode, "tail": 0.0},
            lambda rl: c * p_merit(rl, beta, g2).value if rl == rule else None,
        )
    if mode != "truncated":
        raise ValueError(f"unknown mode {mode!r}")
    if r_cut is None:
        raise ValueError("truncated mode needs r_cut")
    duals = enumerate_dual(rule, math.sqrt(r_cut), space, budget=budget)
    H = np.array([dv.h for dv in duals], dtype=np.int64).reshape(-1, rule.d)
    w = 1.0 / r_array(beta, g2, H)
    Pt = math.fsum(w)
    ct = 1.0 / math.sqrt(Pt)

    def ft(x):
        x = np.atleast_2d(x)
        return ct * (np.exp(2j * np.pi * (x @ H.T)) @ w)

    return TestFunction(
        ft, 0.0, 1.0, "worst_case",
        {"p": rule.p, "z": list(rule.z), "mode": mode, "tail": max(P - Pt, 0.0)},
        lambda rl: ct * Pt if rl == rule else None,
    )


def constant_fn(value: float, space: SpaceParams) -> TestFunction:
    def f(x):
        return np.full(len(np.atleast_2d(x)), float(value))

    return TestFunction(f, float(value), abs(float(value)), "constant", {"value": float(value)},
                        lambda rule: 0.0)


def from_descriptor(desc: Mapping, space: SpaceParams, n: int | None = None,
                    rule: LatticeRule | None = None) -> TestFunction:
    """Rebuild a test function from its JSON descriptor."""
    kind = desc["kind"]
    if kind == "product_kernel":
        return product_kernel_fn(space, desc.get("order"))
    if kind == "lower_bound":
        return lower_bound_fn(int(desc.get("n", n)), space)
    if kind == "constant":
        return constant_fn(desc.get("value", 1.0), space)
    if kind == "trig_poly":
        coeffs = {tuple(h): complex(*c) for h, c in desc["coeffs"]}
        return trig_poly_fn(coeffs, space)
    if kind == "worst_case":
        rl = rule or LatticeRule(desc["p"], desc["z"])
        return worst_case_fn(rl, space, desc.get("mode", "auto"), desc.get("r_cut"))
    raise ValueError(f"unknown test function kind {kind!r}")


def parse_testfn(text: str) -> dict:
    """CLI shorthand: ``product_kernel[:order]``, ``lower_bound``, ``constant[:c]``
    or a JSON object."""
    import json

    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    name, _, arg = text.partition(":")
    if name == "product_kernel":
        return {"kind": name, **({"order": int(arg)} if arg else {})}
    if name == "constant":
        return {"kind": name, "value": float(arg) if arg else 1.0}
    if name == "lower_bound":
        return {"kind": name}
    raise ValueError(f"unknown test function {text!r}")
