"""Build two distinct states with the same slit-observable statistics."""

import argparse

from psqha.grid import PSGrid
from psqha.tomography import Bump, CovariantObservable, indistinguishable_pair


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--q-center", type=float, default=5.0)
    ap.add_argument("--cutoff", type=int, default=96)
    args = ap.parse_args()

    obs = CovariantObservable.slit(args.a, PSGrid())
    _, _, rep = indistinguishable_pair(obs, Bump(q_center=args.q_center), cutoff=args.cutoff)
    for k in sorted(rep):
        print(f"{k:32s} {rep[k]}")


if __name__ == "__main__":
    main()
