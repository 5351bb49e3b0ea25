"""Tabulate sqrt(n) * max_x b(x; n, alpha) against the local-limit value
1 / sqrt(2 pi alpha (1 - alpha))."""

import argparse
import math

import numpy as np

from degseq.lab import max_binomial_mode


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--points", type=int, default=13)
    args = ap.parse_args()

    grid = [int(round(v)) for v in np.logspace(2, 5, args.points)]
    for a in args.alpha:
        limit = 1.0 / math.sqrt(2 * math.pi * a * (1 - a))
        print(f"alpha={a}  limit {limit:.5f}")
        prev = None
        for n in grid:
            v = math.sqrt(n) * max_binomial_mode(n, a)
            trend = "" if prev is None else ("up" if v > prev else "down")
            print(f"  n={n:>6}  {v:.6f}  {trend}")
            prev = v


if __name__ == "__main__":
    main()
