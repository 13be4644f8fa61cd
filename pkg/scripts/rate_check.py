"""Empirical concentration rate of the k-means loss class.

Prints the per-n mean sup-deviation over a grid of centers and the fitted
log-log slope, which should sit near -1/2.
"""
import argparse
import json

from momclust.cli import RATE_DEFAULTS, run_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--k", type=int, default=RATE_DEFAULTS["k"])
    ap.add_argument("--p", type=int, default=RATE_DEFAULTS["p"])
    ap.add_argument("--aggregator", default=RATE_DEFAULTS["aggregator"], choices=["min", "power", "harmonic"])
    ap.add_argument("--max-log2n", type=int, default=13)
    ap.add_argument("--replicates", type=int, default=RATE_DEFAULTS["replicates"])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rep = run_rate({
        "k": args.k, "p": args.p, "aggregator": args.aggregator, "seed": args.seed,
        "replicates": args.replicates, "n_values": [2**i for i in range(7, args.max_log2n + 1)],
    })
    for n, d in zip(rep.n_values, rep.mean_devs):
        print(f"n={n:>6d}  mean sup deviation {d:.5f}")
    print(f"slope {rep.slope:.3f} (stderr {rep.slope_stderr:.3f})")
    print(json.dumps(rep.to_dict()))


if __name__ == "__main__":
    main()
