"""Experiment harness: replications, error aggregation, rate fits, and the
small-instance verification suite."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .korobov import (
    AlgorithmParams,
    SpaceParams,
    Weights,
    count_small_r,
    sum_inverse_r_oracle,
    v_d,
    zeta,
)
from .lattice import LatticeRule, apply
from .merit import (
    divisor_count,
    omega_weight,
    p_merit_closed,
    p_merit_oracle,
    rho_index,
    worst_case_error,
)
from .sampler import DrawFailure, accepted_set, integrate_once, make_stream, sieve_primes
from .testfns import from_descriptor, lower_bound_error, lower_bound_fn, worst_case_fn

log = logging.getLogger(__name__)

CSV_HEADER = ["n", "rep", "p", "z", "shift", "estimate", "abs_error", "sq_error", "tries", "seed", "ms"]


@dataclass
class ExperimentConfig:
    d: int = 2
    alpha: float = 1.0
    gammas: object = (1.0, 0.5)
    lam: float | None = None
    delta: float | None = None
    tau: float = 0.5
    try_cap: int = 64
    n_grid: tuple[int, ...] = (32, 64, 128, 256, 512, 1024, 2048, 4096)
    reps: int = 200
    testfn: dict = field(default_factory=lambda: {"kind": "product_kernel", "order": 1})
    shifted: bool = False
    seed: int = 0
    out: str | None = None
    summary: str | None = None
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if any(n < 4 for n in self.n_grid) or not self.n_grid:
            raise ValueError("n values must be >= 4")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        self.space.weights  # expands and validates the weights

    @property
    def space(self) -> SpaceParams:
        return SpaceParams(self.d, self.alpha, Weights.parse(self.gammas, self.d))

    @property
    def alg(self) -> AlgorithmParams:
        kw = {"tau": self.tau, "try_cap": self.try_cap}
        if self.delta is not None:
            kw["delta"] = self.delta
        if self.lam is None:
            a = AlgorithmParams.default(self.space, self.shifted, **kw)
        else:
            a = AlgorithmParams(lam=self.lam, **kw)
        a.validate(self.space, self.shifted)
        return a

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Accepts the nested JSON layout (``space`` / ``alg`` blocks) or flat keys."""
        flat = {k: v for k, v in data.items() if k not in ("space", "alg")}
        flat.update(data.get("space", {}))
        for k, v in data.get("alg", {}).items():
            flat["lam" if k == "lambda" else k] = v
        if "lambda" in flat:
            flat["lam"] = flat.pop("lambda")
        known = set(cls.__dataclass_fields__)
        unknown = set(flat) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**flat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gammas"] = list(self.space.gammas)
        d["n_grid"] = list(self.n_grid)
        return d


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    rep: int
    p: int
    z: tuple[int, ...]
    shift: tuple[float, ...] | None
    estimate: complex | float | None
    abs_error: float | None
    squared_error: float | None
    tries: int
    seed: int
    ms: float | None = None

    @property
    def failed(self) -> bool:
        return self.estimate is None


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float
    n_min: int
    n_max: int
    points: int


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_estimate(v) -> str:
    if v is None:
        return ""
    if isinstance(v, complex):
        return f"{_fmt(v.real)};{_fmt(v.imag)}" if v.imag else _fmt(v.real)
    return _fmt(float(v))


def _one(cfg, space, alg, tf, n, rep):
    rng = make_stream(cfg.seed, n, rep)
    t0 = time.perf_counter()
    try:
        est, rec = integrate_once(tf, n, space, alg, rng, shifted=cfg.shifted, seed=cfg.seed)
    except DrawFailure as e:
        log.warning("n=%d rep=%d: %s", n, rep, e)
        return ExperimentRecord(n, rep, e.p, (), None, None, None, None, e.tries, cfg.seed)
    ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else None
    err = abs(est - tf.exact_integral)
    if isinstance(est, complex) and est.imag == 0:
        est = est.real
    return ExperimentRecord(n, rep, rec.p, rec.z, rec.shift, est, err, err * err, rec.tries, cfg.seed, ms)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ExperimentRecord], list[dict]]:
    """R independent draws per n; returns records and per-n aggregates.

    Each (n, rep) pair has its own random stream, so results do not depend
    on ``workers`` or on execution order.
    """
    space, alg = cfg.space, cfg.alg
    records: list[ExperimentRecord] = []
    aggregates = []
    for n in cfg.n_grid:
        tf = from_descriptor(cfg.testfn, space, n=n)
        jobs = range(cfg.reps)
        if cfg.workers > 1:
            with ThreadPoolExecutor(cfg.workers) as ex:
                recs = list(ex.map(lambda r: _one(cfg, space, alg, tf, n, r), jobs))
        else:
            recs = [_one(cfg, space, alg, tf, n, r) for r in jobs]
        ok = [r for r in recs if not r.failed]
        if not ok:
            raise RuntimeError(f"every draw failed at n={n}")
        records.extend(recs)
        aggregates.append(aggregate(n, recs))
    return records, aggregates


def aggregate(n: int, recs: Sequence[ExperimentRecord]) -> dict:
    ok = [r for r in recs if not r.failed]
    m = len(ok)
    return {
        "n": n,
        "reps": m,
        "failures": len(recs) - m,
        "mean_abs_error": math.fsum(r.abs_error for r in ok) / m,
        "rmse": math.sqrt(math.fsum(r.squared_error for r in ok) / m),
        "mean_tries": math.fsum(r.tries for r in ok) / m,
        "label": "per-function randomized error",
    }


def write_csv(records: Sequence[ExperimentRecord], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([
            r.n, r.rep, r.p,
            ";".join(str(x) for x in r.z),
            "" if r.shift is None else ";".join(_fmt(x) for x in r.shift),
            _fmt_estimate(r.estimate),
            "" if r.abs_error is None else _fmt(r.abs_error),
            "" if r.squared_error is None else _fmt(r.squared_error),
            r.tries, r.seed,
            "" if r.ms is None else f"{r.ms:.3f}",
        ])


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def fit_rate(aggregates, key: str = "mean_abs_error") -> RateFit:
    """Least-squares line through ``(log n, log error)``.

    Accepts a list of aggregate dicts or a pair ``(ns, errors)``.
    """
    if isinstance(aggregates, tuple) and len(aggregates) == 2:
        ns, errs = map(np.asarray, aggregates)
    else:
        ns = np.array([a["n"] for a in aggregates])
        errs = np.array([a[key] for a in aggregates])
    ns, errs = ns.astype(float), errs.astype(float)
    good = errs > 0
    if not good.all():
        warnings.warn(f"dropping {int((~good).sum())} non-positive error values from the fit")
    ns, errs = ns[good], errs[good]
    if len(np.unique(ns)) < 4:
        raise ValueError("need at least 4 distinct n values with positive error")
    res = stats.linregress(np.log(ns), np.log(errs))
    return RateFit(float(res.slope), float(res.intercept), float(res.stderr),
                   int(ns.min()), int(ns.max()), int(len(ns)))


def uniform_z_mean_merit(p: int, beta: float, gammas) -> float:
    """Exact average of ``P_{beta,gamma}(p, z)`` over all ``z`` in ``{1..p-1}^d``.

    Each coordinate of ``h`` is zero, a nonzero multiple of ``p``, or a unit
    mod ``p``; the fraction of ``z`` with ``h . z = 0`` depends only on the
    number ``m`` of unit coordinates, so the sum factorises over coordinates.
    """
    g = np.asarray(gammas, dtype=float)
    z_all = 2.0 * g * zeta(beta)
    mult = z_all / float(p) ** beta  # nonzero multiples of p
    unit = z_all - mult
    # poly[m] = summed weight of patterns with m unit coordinates
    poly = np.zeros(len(g) + 1)
    poly[0] = 1.0
    for a, b in zip(1.0 + mult, unit):
        nxt = poly * a
        nxt[1:] += poly[:-1] * b
        poly = nxt
    m = np.arange(len(g) + 1)
    q = ((p - 1.0) ** m + (-1.0) ** m * (p - 1.0)) / (p * (p - 1.0) ** m)
    return float(poly @ q - 1.0)


def sufficient_n_report(eps: float, space: SpaceParams, alg: AlgorithmParams,
                        shifted: bool = False, c: float = 6.0) -> dict:
    """Number of points that the error bounds certify for tolerance ``eps``.

    Unshifted: ``max(ceil(4 V), ceil((C V**lam / eps)**(1/e)))`` with
    ``e = lam + 1/2 - delta`` and
    ``C = c 2**(3 lam - 2 delta - 1) / delta * sqrt((lam-delta)/(lam-delta+1/2))``.
    Shifted: ``ceil((c/(alpha delta) (4 V)**lam / eps)**(1/e))`` with
    ``e = lam + 1/2 - delta lam / 2``. Here ``V = V_d(alpha/lam, gamma**(1/lam))``.
    ``c`` is the unpinned absolute constant of the bounds.
    """
    if not (0 < eps < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    alg.validate(space, shifted)
    a, lam, dl = space.alpha, alg.lam, alg.delta
    if a <= 0:
        raise ValueError("alpha must be positive")
    sc = space.scaled(lam)
    V = v_d(sc.alpha, sc.weights, sc.d)
    if shifted:
        e = lam + 0.5 - dl * lam / 2
        const = c / (a * dl) * (4 * V) ** lam
        n = math.ceil((const / eps) ** (1 / e))
        floor = None
    else:
        e = lam + 0.5 - dl
        C = c * 2 ** (3 * lam - 2 * dl - 1) / dl * math.sqrt((lam - dl) / (lam - dl + 0.5))
        const = C * V**lam
        floor = math.ceil(4 * V)
        n = max(floor, math.ceil((const / eps) ** (1 / e)))
    return {"n": int(n), "epsilon": eps, "c": c, "V_d": V, "exponent": 1 / e,
            "constant": const, "floor": floor, "shifted": shifted}


def sufficient_n(eps, space, alg, shifted=False, c=6.0) -> int:
    return sufficient_n_report(eps, space, alg, shifted, c)["n"]


# --------------------------------------------------------------------------
# verification suite

MeritFn = Callable[[LatticeRule, int, np.ndarray], float]


def _closed_value(rule, beta, g):
    return p_merit_closed(rule, beta, g).value


def _grid(grid):
    if grid == "smoke":
        return {"primes": (3,), "dims": (1,), "betas": (2,), "gammas": ((1.0,),)}
    if grid == "default":
        return {"primes": (3, 5, 7), "dims": (1, 2), "betas": (2, 4),
                "gammas": ((1.0, 1.0), (1.0, 0.5))}
    if isinstance(grid, dict):
        return grid
    raise ValueError(f"unknown grid {grid!r}")


def _w(gam, d) -> Weights:
    # truncate, or pad with the last weight
    gam = tuple(gam)
    return Weights(gam[:d] + gam[-1:] * max(0, d - len(gam)))


class _Check:
    def __init__(self, name):
        self.name, self.instances, self.failures = name, 0, []

    def __call__(self, ok, **instance):
        self.instances += 1
        if not ok:
            self.failures.append(instance)

    def report(self):
        return {"name": self.name, "passed": not self.failures,
                "instances": self.instances, "failures": self.failures[:20]}


def verify_suite(grid="default", merit_fn: MeritFn | None = None) -> dict:
    """Exhaustive small-instance checks of the counting bounds, the merit
    identities, the worst-case and lower-bound functions, and omega."""
    G = _grid(grid)
    merit_fn = merit_fn or _closed_value
    checks = []

    c = _Check("zeta_product_identity")
    for d, beta, gam in itertools.product(G["dims"], G["betas"], G["gammas"]):
        w = _w(gam, d)
        lo, hi = sum_inverse_r_oracle(beta, w, d, 10**5)
        target = v_d(beta, w, d) / 3
        c(lo <= target <= hi, d=d, beta=beta, gammas=list(w.gammas), interval=[lo, hi])
    checks.append(c)

    c = _Check("small_r_count_bound")
    for d, beta, gam in itertools.product(G["dims"], G["betas"], G["gammas"]):
        w = _w(gam, d)
        for T in (0.5, 1.0, 4.0, 25.0, 100.0):
            cnt = count_small_r(beta, w, d, T)
            c(cnt <= T * v_d(beta, w, d), d=d, beta=beta, T=T, count=cnt)
    checks.append(c)

    c = _Check("divisor_count")
    for p, d in itertools.product(G["primes"], G["dims"]):
        Z = np.array(list(itertools.product(range(1, p), repeat=d)))
        for h in itertools.product(range(-p - 1, p + 2), repeat=d):
            if not any(h):
                continue
            brute = int(np.count_nonzero((Z @ np.array(h)) % p == 0))
            c(brute == divisor_count(p, h), p=p, h=list(h), brute=brute)
    checks.append(c)

    prop = _Check("average_merit_bound")
    cor = _Check("good_vector_abundance")
    zar = _Check("zaremba_inequality")
    for p, d, beta, gam in itertools.product(G["primes"], G["dims"], G["betas"], G["gammas"]):
        w = _w(gam, d)
        g = w.first(d)
        V = v_d(beta, w, d)
        vals = []
        for z in itertools.product(range(1, p), repeat=d):
            rule = LatticeRule(p, z)
            P = merit_fn(rule, beta, g)
            vals.append(P)
            if beta == 2:
                rho = rho_index(rule, SpaceParams(d, beta, w))
                zar(1.0 / rho < P, p=p, z=list(z), rho=rho, P=P)
        avg = math.fsum(vals) / len(vals)
        prop(avg < V / p, p=p, d=d, beta=beta, gammas=list(g), average=avg, bound=V / p)
        good = sum(1 for v in vals if v <= 2 * V / p)
        need = math.ceil((p - 1) ** d / 2)
        cor(good >= need, p=p, d=d, beta=beta, gammas=list(g), good=good, need=need)
    checks += [prop, cor, zar]

    c = _Check("oracle_equivalence")
    rng = np.random.default_rng(20240611)
    for p, d, beta in itertools.product(G["primes"], G["dims"], G["betas"]):
        z = tuple(int(x) for x in rng.integers(1, p, size=d))
        rule = LatticeRule(p, z)
        g = _w(G["gammas"][-1], d).first(d)
        H = 2000 if d == 1 else 120
        orc = p_merit_oracle(rule, beta, g, H)
        val = merit_fn(rule, beta, g)
        c(orc.value - 1e-12 <= val <= orc.value + orc.tail_bound, p=p, z=list(z), beta=beta,
          value=val, oracle=orc.value, tail=orc.tail_bound)
    checks.append(c)

    c = _Check("worst_case_equality")
    for p, d in itertools.product(G["primes"], G["dims"]):
        rule = LatticeRule(p, tuple(range(1, d + 1)) if d < p else (1,) * d)
        space = SpaceParams(d, 1.0, _w(G["gammas"][-1], d))
        f = worst_case_fn(rule, space)
        err = abs(apply(rule, f))
        wce = worst_case_error(rule, space)
        c(abs(err - wce) <= 1e-9 * wce, p=p, d=d, error=err, wce=wce)
    checks.append(c)

    c = _Check("lower_bound_formula")
    for n, a in itertools.product((10, 20, 50), (0.0, 1.0)):
        space = SpaceParams(2, a, Weights((0.8, 0.5)))
        f = lower_bound_fn(n, space)
        for p in sieve_primes(n).primes:
            for z in ((1, 1), (1, p - 1), (2 % p or 1, 3 % p or 1)):
                got = abs(apply(LatticeRule(p, z), f))
                want = lower_bound_error(p, n, space)
                c(abs(got - want) <= 1e-12, n=n, alpha=a, p=p, z=list(z), got=got, want=want)
    checks.append(c)

    c = _Check("omega_bound")
    n = 10
    for d in G["dims"]:
        space = SpaceParams(d, 1.0, Weights((1.0,) * d))
        alg = AlgorithmParams(lam=0.9)
        primes = sieve_primes(n).primes
        Zs = {p: accepted_set(p, space, alg) for p in primes}
        for h in itertools.product(range(-8, 9), repeat=d):
            if not any(h):
                continue
            om = omega_weight(n, h, space, alg, Zs.__getitem__)
            frac = sum(all(x % p == 0 for x in h) for p in primes) / len(primes)
            c(om <= frac + 4 / n, d=d, h=list(h), omega=om)
    checks.append(c)

    reports = [ck.report() for ck in checks]
    return {"grid": grid if isinstance(grid, str) else "custom",
            "passed": all(r["passed"] for r in reports), "checks": reports}
