"""Mean inlier ARI (+/- sd) against outlier fraction or number of clusters.

Writes plot-ready CSV, one row per (axis value, method).

    python3 scripts/contamination_sweep.py --axis outlier_fraction --values 0 0.1 0.2 0.3 0.4 0.5
    python3 scripts/contamination_sweep.py --axis k_true --values 3 5 10 20 --fraction 0
"""
import argparse
import sys

from momclust.cli import ExperimentConfig, sweep, sweep_to_csv
from momclust.solver import SolverConfig
from momclust.synth import ScenarioSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--axis", choices=["outlier_fraction", "k_true"], default="outlier_fraction")
    ap.add_argument("--values", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    ap.add_argument("--k", type=int, default=10, help="true and fitted k when sweeping the fraction")
    ap.add_argument("--fraction", type=float, default=0.25, help="outlier fraction when sweeping k")
    ap.add_argument("--model", choices=["uniform_range", "gaussian_far"], default="uniform_range")
    ap.add_argument("--variance", type=float, default=0.1, help="per-coordinate cluster variance")
    ap.add_argument("--methods", nargs="+",
                    default=["mom_power", "erm_power", "mom_kmeans", "kmeans_lloyd", "kmeans_pp"])
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        scenario=ScenarioSpec(k_true=args.k, p=5, points_per_cluster=30, cluster_variance=args.variance,
                              outlier_fraction=args.fraction, outlier_model=args.model),
        solver=SolverConfig(), replicates=args.replicates, seed=args.seed, workers=args.workers,
    )
    # k_fit follows k_true along the sweep
    text = sweep_to_csv(sweep(cfg, args.axis, args.values, args.methods))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
