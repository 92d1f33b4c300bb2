#!/usr/bin/env python3
"""Operation-count scaling sweep.

Runs one simulated session per peer-group size, prints the counter
table with the fitted step-3 quadratic, and (optionally) writes the
JSON/CSV report that the plots are built from.  Counters are exact, so
the doubling ratios printed at the end are reproducible across hosts;
only the wall-clock column varies.
"""

import argparse
import sys
from pathlib import Path

from blindbench.bench import run_bench, write_report


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-list", default="4,6,9,13,20,40",
                        help="comma-separated peer-group sizes")
    parser.add_argument("--bits", type=int, default=768,
                        help="modulus size in bits")
    parser.add_argument("--seed", type=int, default=20_240_101,
                        help="seed for keys and inputs")
    parser.add_argument("--out", type=Path, default=None,
                        help="directory for bench_report.json / bench_scaling.csv")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    n_values = sorted({int(tok) for tok in args.n_list.split(",") if tok})
    report = run_bench(n_values, modulus_bits=args.bits, seed=args.seed)
    print(report.table_text())

    by_n = {row.n: row for row in report.rows}
    for n in n_values:
        if 2 * n not in by_n:
            continue
        small = sum(by_n[n].step3.values())
        big = sum(by_n[2 * n].step3.values())
        print(f"step-3 ops {n} -> {2 * n}: x{big / small:.2f} "
              f"(n(n-1) predicts x{(2 * n) * (2 * n - 1) / (n * (n - 1)):.2f})")

    if args.out is not None:
        for path in write_report(report, args.out):
            print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
