"""Command line interface.

Subcommands: integrate, converge, verify, cbc, sufficient-n, merit.
Exit codes: 0 success, 1 failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

import numpy as np

from .cbc import cbc_construct
from .experiment import (
    ExperimentConfig,
    fit_rate,
    run_experiment,
    sufficient_n_report,
    verify_suite,
    write_csv,
)
from .korobov import AlgorithmParams, SpaceParams, Weights
from .lattice import LatticeRule
from .merit import p_merit, rho_index, worst_case_error
from .sampler import integrate_once, make_stream
from .testfns import from_descriptor, parse_testfn

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    """``32,64,128`` or ``pow2:5:12`` (2**5 .. 2**12)."""
    if text.startswith("pow2:"):
        _, a, b = text.split(":")
        return [2**k for k in range(int(a), int(b) + 1)]
    return [int(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, grid=False):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--shifted", action="store_true", default=None)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--dims", type=int)
    p.add_argument("--gammas", help="comma list, or const:c / pow:a")
    p.add_argument("--testfn", help="product_kernel[:order], lower_bound, constant[:c], or JSON")
    if grid:
        p.add_argument("--n-grid", dest="n_grid", help="comma list or pow2:a:b")
        p.add_argument("--reps", type=int)
        p.add_argument("--summary", help="write per-n aggregates and the rate fit as JSON")
        p.add_argument("--workers", type=int)
        p.add_argument("--timing", action="store_true", default=None,
                       help="fill the ms column (makes output non-reproducible)")
        p.add_argument("--verify", action="store_true", help="run the verification suite first")


def build_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    flat = ExperimentConfig.from_dict(data).to_dict() if data else {}
    overrides = {
        "seed": args.seed, "shifted": args.shifted, "alpha": args.alpha, "lam": args.lam,
        "delta": args.delta, "d": args.dims, "gammas": args.gammas,
        "n_grid": _ints(args.n_grid) if getattr(args, "n_grid", None) else None,
        "reps": getattr(args, "reps", None), "summary": getattr(args, "summary", None),
        "workers": getattr(args, "workers", None), "timing": getattr(args, "timing", None),
        "out": args.out,
        "testfn": parse_testfn(args.testfn) if args.testfn else None,
    }
    for k, v in overrides.items():
        if v is not None:
            flat[k] = v
    # a weight list from the file must still match an overridden dimension
    if args.dims is not None and args.gammas is None and "gammas" in flat and not isinstance(flat["gammas"], str):
        flat["gammas"] = list(flat["gammas"])[: args.dims] if len(flat["gammas"]) >= args.dims else flat["gammas"]
    return ExperimentConfig(**flat)


@contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _dump(obj, path):
    with _output(path) as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def cmd_integrate(args) -> int:
    cfg = build_config(args)
    n = args.n if args.n is not None else cfg.n_grid[-1]
    space, alg = cfg.space, cfg.alg
    tf = from_descriptor(cfg.testfn, space, n=n)
    est, rec = integrate_once(tf, n, space, alg, make_stream(cfg.seed, n, 0), cfg.shifted, cfg.seed)
    est = complex(est)
    exact = complex(tf.exact_integral)
    _dump({
        "record": rec.to_dict(),
        "estimate": {"re": est.real, "im": est.imag},
        "exact": {"re": exact.real, "im": exact.imag},
        "abs_error": abs(est - exact),
        "testfn": cfg.testfn,
    }, cfg.out)
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = build_config(args)
    if args.verify:
        rep = verify_suite("default")
        if not rep["passed"]:
            _dump(rep, None)
            return EXIT_CHECK
    records, aggs = run_experiment(cfg)
    with _output(cfg.out) as fh:
        write_csv(records, fh)
    if cfg.summary:
        summary = {"config": cfg.to_dict(), "aggregates": aggs}
        try:
            summary["fit_mean_abs_error"] = fit_rate(aggs).__dict__
            summary["fit_rmse"] = fit_rate(aggs, "rmse").__dict__
        except ValueError as e:
            summary["fit_error"] = str(e)
        _dump(summary, cfg.summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    rep = verify_suite(args.grid)
    _dump(rep, args.out)
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def _space_from(args, d) -> SpaceParams:
    if args.alpha is None or args.gammas is None:
        raise ConfigError("--alpha and --gammas are required")
    return SpaceParams(d, args.alpha, Weights.parse(args.gammas, d))


def cmd_cbc(args) -> int:
    space = _space_from(args, args.dims)
    res = cbc_construct(args.p, args.dims, space)
    _dump(res.to_dict(), args.out)
    return EXIT_OK


def cmd_sufficient_n(args) -> int:
    space = _space_from(args, args.dims)
    kw = {} if args.delta is None else {"delta": args.delta}
    alg = AlgorithmParams(lam=args.lam, **kw) if args.lam is not None else AlgorithmParams.default(space, args.shifted, **kw)
    rep = sufficient_n_report(args.epsilon, space, alg, bool(args.shifted), c=args.c)
    rep.update(lam=alg.lam, delta=alg.delta)
    _dump(rep, args.out)
    return EXIT_OK


def cmd_merit(args) -> int:
    z = _ints(args.z)
    rule = LatticeRule(args.p, z)
    space = _space_from(args, rule.d)
    beta = args.beta if args.beta is not None else 2 * space.alpha
    out = {"P": p_merit(rule, beta, space.gammas).to_dict()}
    if space.alpha > 0:
        out["rho"] = rho_index(rule, space)
    if space.alpha > 0.5:
        out["worst_case_error"] = worst_case_error(rule, space)
    _dump(out, args.out)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randlattice", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="one randomized lattice estimate")
    _common(p)
    p.add_argument("--n", type=int, help="point budget (default: last of the grid)")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("converge", help="replicated runs over an n grid, CSV out")
    _common(p, grid=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="exhaustive small-instance checks, JSON out")
    p.add_argument("--grid", default="default", choices=["default", "smoke"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cbc", help="component-by-component generating vector")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gammas", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cbc)

    p = sub.add_parser("sufficient-n", help="points sufficient for a target error")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--gammas", required=True)
    p.add_argument("--shifted", action="store_true")
    p.add_argument("--c", type=float, default=6.0, help="absolute constant in the bounds")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sufficient_n)

    p = sub.add_parser("merit", help="P, rho and worst-case error of one rule")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--z", required=True, help="comma-separated generating vector")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gammas", required=True)
    p.add_argument("--beta", type=float, help="merit exponent (default 2 alpha)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_merit)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
