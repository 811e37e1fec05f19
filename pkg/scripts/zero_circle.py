"""Locate the zero circles of number-state transforms and compare with Laguerre roots.

The transform of |n><n| is L_n(r^2/2) e^{-r^2/4}, so its zeros sit at twice the
roots of the Laguerre polynomial L_n.
"""

import argparse

import numpy as np
from scipy.special import roots_laguerre

from psqha.fock import embed, number_state, projector
from psqha.grid import PSGrid
from psqha.qconv import weyl_transform
from psqha.zeroset import locate_zero_circle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=4)
    ap.add_argument("--cutoff", type=int, default=48)
    args = ap.parse_args()

    grid = PSGrid()
    print("n  measured r^2                      Laguerre r^2")
    for n in range(1, args.n_max + 1):
        F = weyl_transform(embed(projector(number_state(n, n + 1)), args.cutoff), grid)
        found = np.sort(locate_zero_circle(F, all_roots=True))
        ref = 2 * np.sort(roots_laguerre(n)[0])
        ref = ref[ref < grid.q_max**2]
        print(f"{n}  {np.array2string(found, precision=6):32s}  {np.array2string(ref, precision=6)}")


if __name__ == "__main__":
    main()
