"""Slope of the unshifted algorithm against lambda at fixed seed.

Shows how the acceptance filter only starts to bite once n passes
4 V_d(alpha/lambda, gamma^(1/lambda)).
"""

import argparse

from randlattice.experiment import ExperimentConfig, fit_rate, run_experiment
from randlattice.korobov import v_d


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", default="0.6,0.7,0.8,0.9,0.95")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for lam in (float(x) for x in args.lambdas.split(",")):
        cfg = ExperimentConfig(lam=lam, delta=min(0.1, (lam - 0.5) / 2), reps=args.reps, seed=args.seed)
        _, aggs = run_experiment(cfg)
        fit = fit_rate(aggs)
        sc = cfg.space.scaled(lam)
        tries = max(a["mean_tries"] for a in aggs)
        print(f"lambda={lam:.2f}  4V_d={4 * v_d(sc.alpha, sc.weights, sc.d):9.1f}  "
              f"max mean tries={tries:.3f}  slope={fit.slope:.3f} +- {fit.stderr:.3f}")


if __name__ == "__main__":
    main()
