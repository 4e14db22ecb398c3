"""Scan the weighted dyadic tail sum S(t) and its three-way split.

S(t) collects 2^{-q theta} min(1, (2^q / sqrt(1+t))^{-2}) style terms
over dyadic frequencies above a fixed index; the scan verifies that S
stays bounded uniformly in t and that the near-frequency part I stays
below R + 1 termwise.

Usage:
    python3 scripts/run_sum_bound.py --theta 1 --r-index 10
    python3 scripts/run_sum_bound.py --theta 0.5 --r-index 4 --out scan.csv
"""
import argparse

import numpy as np

from vedlab import sum_bound_scan
from vedlab.fileio import write_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--r-index", type=int, default=10)
    ap.add_argument("--t-min", type=float, default=1e-2)
    ap.add_argument("--t-max", type=float, default=1e6)
    ap.add_argument("--num-times", type=int, default=41)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    times = np.geomspace(args.t_min, args.t_max, args.num_times)
    rows = sum_bound_scan(args.theta, args.r_index, times)
    arr = np.asarray(rows)

    print(f"theta = {args.theta}, R = {args.r_index}, "
          f"{len(times)} log-spaced times in [{args.t_min:g}, {args.t_max:g}]")
    print(f"sup S   = {arr[:, 1].max():.6f}")
    print(f"sup I   = {arr[:, 2].max():.6f}  (termwise bound R + 1 = {args.r_index + 1})")
    print(f"sup II  = {arr[:, 3].max():.6f}")
    print(f"sup III = {arr[:, 4].max():.6f}")
    if args.out:
        write_csv(args.out, ["t", "S", "I", "II", "III"], arr)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
