"""Trace distance of vacuum-observable reconstructions against sample size and regularization."""

import argparse
import warnings

import numpy as np

from psqha.fock import number_state, projector, random_density
from psqha.grid import PSGrid
from psqha.tomography import CovariantObservable, MeasurementRecord, outcome_density, reconstruct, sample_outcomes, trace_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cutoff", type=int, default=7)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    obs = CovariantObservable.vacuum(PSGrid())
    states = {
        "|1><1|": projector(number_state(1, args.cutoff)),
        "rank-3": random_density(args.cutoff, 3, levels=6, rng=np.random.default_rng(args.seed)),
    }
    print("state   samples   reg_eps  projection  trace distance")
    warnings.simplefilter("ignore", RuntimeWarning)
    for name, rho in states.items():
        rec = MeasurementRecord(obs.grid, density=outcome_density(rho, obs))
        for reg in (1e-8, 1e-4):
            res = reconstruct(rec, obs, args.cutoff, reg_eps=reg)
            print(f"{name:7s} {'exact':>9s}  {reg:7.0e}  {'clip':10s}  {trace_distance(res.rho_hat, rho):.3e}")
        for n in (10**4, 10**5, 10**6):
            rec = sample_outcomes(rho, obs, n, seed=args.seed)
            for reg in (1e-3, 3e-3, 1e-2):
                res = reconstruct(rec, obs, args.cutoff, reg_eps=reg, projection="nearest")
                print(f"{name:7s} {n:9d}  {reg:7.0e}  {'nearest':10s}  {trace_distance(res.rho_hat, rho):.3e}")


if __name__ == "__main__":
    main()
