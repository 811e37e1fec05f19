"""Exact bounds on the measure of the dyadic zero set in [0, 1] as n_max grows."""

import argparse

from psqha.zeroset import dyadic_zero_measure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=20)
    args = ap.parse_args()

    print(" n  intervals  lower bound  upper bound")
    for n in range(1, args.n_max + 1):
        dz = dyadic_zero_measure(n)
        print(f"{n:2d}  {len(dz.starts):9d}  {float(dz.measure_lower):.9f}  {float(dz.measure_upper):.9f}")


if __name__ == "__main__":
    main()
