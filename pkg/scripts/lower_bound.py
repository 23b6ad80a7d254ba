"""Lower-bound experiment: error of the z-independent hard function.

Prints the mean error per n next to the floor sqrt(log n) / (2 n^(alpha+1/2))
and the fitted slope; for alpha = 0 the slope should be close to -1/2.
"""

import argparse
import math

from randlattice.experiment import ExperimentConfig, fit_rate, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--max-log2n", type=int, default=13)
    args = ap.parse_args()
    cfg = ExperimentConfig(d=1, alpha=args.alpha, gammas=(1.0,), shifted=args.alpha <= 0.5,
                           n_grid=tuple(2**k for k in range(4, args.max_log2n + 1)), reps=args.reps,
                           testfn={"kind": "lower_bound"})
    _, aggs = run_experiment(cfg)
    for a in aggs:
        n = a["n"]
        floor = math.sqrt(math.log(n)) / (2 * n ** (args.alpha + 0.5))
        print(f"n={n:6d}  mean error {a['mean_abs_error']:.3e}  floor {floor:.3e}")
    fit = fit_rate(aggs)
    print(f"slope {fit.slope:.3f} +- {fit.stderr:.3f}")


if __name__ == "__main__":
    main()
