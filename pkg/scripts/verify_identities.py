"""Run the exact identity suite over a grid of (n, p) and print one row per case."""

import argparse
import itertools

from degseq.models import ModelParams
from degseq.oracle import verify_identity_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--p", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7])
    ap.add_argument("--k", type=int, choices=(1, 2), default=1)
    args = ap.parse_args()

    failures = 0
    for n in args.n:
        for ps in itertools.product(args.p, repeat=args.k):
            rep = verify_identity_suite(ModelParams(n, ps))
            worst = max(r.max_error for r in rep.results if r.tolerance is not None)
            print(f"n={n} p={ps}  {'ok  ' if rep.passed else 'FAIL'}  worst checked error {worst:.2e}")
            if not rep.passed:
                failures += 1
                for line in rep.lines():
                    print("    " + line)
    print(f"{failures} failing case(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
