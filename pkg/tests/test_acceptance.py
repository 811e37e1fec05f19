"""Acceptance criteria, each at its stated tolerance, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in
the terminal summary under "acceptance criteria".
"""

import time
import warnings
from fractions import Fraction

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from psqha.finite import check_equivalences, random_finite_state
from psqha.fock import embed, number_state, projector, random_density, schatten_norm
from psqha.grid import PSGrid
from psqha.identities import convolution_theorem, integral_identity, norm_slack, plancherel, trace_normalization
from psqha.qconv import weyl_transform
from psqha.tomography import (
    CovariantObservable,
    MeasurementRecord,
    indistinguishable_pair,
    outcome_density,
    reconstruct,
    sample_outcomes,
    trace_distance,
)
from psqha.zeroset import Grid1D, WienerPhi, dyadic_zero_measure, locate_zero_circle, wiener_construction

GRID = PSGrid()
SEED = 20240611


def test_c01_zero_circle(acceptance):
    t0 = time.perf_counter()
    with threadpool_limits(limits=1):
        F = weyl_transform(embed(projector(number_state(1, 2)), 48), GRID)
        r2 = locate_zero_circle(F)
    dt = time.perf_counter() - t0
    ok = abs(r2 - 2.0) <= 1e-3 and dt <= 30
    assert acceptance("C1 zero circle of |1><1|", ok, f"r^2 = {r2:.12f} (|err| <= 1e-3), {dt:.2f} s (<= 30 s)")


def test_c02_trace_normalization(acceptance):
    worst = trace_normalization(50, np.random.default_rng(SEED), GRID, max_levels=8)
    assert acceptance("C2 trace normalization", worst <= 1e-8, f"max |T^(0) - tr T| = {worst:.2e} (<= 1e-8), 50 operators")


def test_c03_plancherel(acceptance):
    worst = plancherel(20, np.random.default_rng(SEED + 1), GRID, max_levels=8)
    assert acceptance("C3 Plancherel", worst <= 1e-3, f"max relative deviation = {worst:.2e} (<= 1e-3), 20 rank-3 operators")


def test_c04_integral_identity(acceptance):
    worst = integral_identity(20, np.random.default_rng(SEED + 2), GRID, max_levels=8)
    assert acceptance("C4 integral identity", worst <= 1e-3, f"max relative error = {worst:.2e} (<= 1e-3), 20 pairs")


def test_c05_convolution_theorem(acceptance):
    conv, fac = convolution_theorem(20, np.random.default_rng(SEED + 3), GRID, max_levels=8)
    ok = conv <= 1e-4 and fac <= 1e-4
    assert acceptance(
        "C5 convolution theorem and factorization",
        ok,
        f"sup residuals {conv:.2e} and {fac:.2e} relative (<= 1e-4), 20 pairs",
    )


def test_c06_norm_estimates(acceptance):
    # the inequalities do not depend on the grid; a 128^2 grid keeps 100 samples quick
    grid = PSGrid(-12.0, 12.0, -12.0, 12.0, 128, 128)
    worst = norm_slack(100, np.random.default_rng(SEED + 4), grid, max_levels=8)
    assert acceptance("C6 norm estimates", worst >= -1e-8, f"min slack = {worst:.2e} (>= -1e-8), 100 samples, p in {{1,2,inf}}")


@pytest.fixture(scope="module")
def c07_states():
    rng = np.random.default_rng(SEED + 5)
    return {"|1><1|": projector(number_state(1, 7)), "rank-3": random_density(7, 3, levels=6, rng=rng)}


@pytest.fixture(scope="module")
def vacuum_obs():
    return CovariantObservable.vacuum(GRID)


def test_c07a_noiseless_reconstruction(acceptance, c07_states, vacuum_obs):
    t0 = time.perf_counter()
    dists = {}
    for name, rho in c07_states.items():
        rec = MeasurementRecord(GRID, density=outcome_density(rho, vacuum_obs))
        res = reconstruct(rec, vacuum_obs, 7, reg_eps=1e-8)
        dists[name] = trace_distance(res.rho_hat, rho)
    dt = time.perf_counter() - t0
    ok = max(dists.values()) <= 5e-2
    detail = ", ".join(f"{k} {v:.2e}" for k, v in dists.items())
    assert acceptance("C7a noiseless reconstruction", ok, f"trace distances {detail} (<= 5e-2), {dt:.1f} s")


@pytest.mark.parametrize("name", ["|1><1|", "rank-3"])
def test_c07b_sampled_reconstruction(acceptance, c07_states, vacuum_obs, name):
    rho = c07_states[name]
    t0 = time.perf_counter()
    rec = sample_outcomes(rho, vacuum_obs, 10**6, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = reconstruct(rec, vacuum_obs, 7, reg_eps=1e-2, projection="nearest")
    dist = trace_distance(res.rho_hat, rho)
    dt = time.perf_counter() - t0
    ok = dist <= 1e-1 and dt <= 120
    assert acceptance(f"C7b sampled reconstruction {name}", ok, f"trace distance {dist:.3f} (<= 1e-1), 10^6 samples, {dt:.1f} s")


def test_c08_finite_oracle(acceptance):
    t0 = time.perf_counter()
    kinds = ("random-mixed", "random-pure", "basis", "maximally-mixed")
    disagreements = 0
    nonempty = 0
    rng = np.random.default_rng(SEED + 6)
    for d in (2, 3, 4, 5):
        for i in range(100):
            rep = check_equivalences(random_finite_state(d, kinds[i % 4], rng))
            disagreements += not rep["ok"]
            nonempty += not rep["zero_set_empty"]
    dt = time.perf_counter() - t0
    ok = disagreements == 0 and dt <= 10
    assert acceptance(
        "C8 finite phase-space oracle",
        ok,
        f"{disagreements} disagreements over 400 states ({nonempty} with nonempty zero set), {dt:.2f} s (<= 10 s)",
    )


def test_c09_dyadic_construction(acceptance):
    dz = dyadic_zero_measure(20)
    measure_ok = dz.measure_lower >= Fraction(1, 2)
    dyadics = all(dz.in_complement(Fraction(k, 2**m)) for m in range(11) for k in range(2**m + 1))
    # phi at the full n_max = 20, and the phi/phi^ pair where phi^ is resolvable on 2^16 points
    phi20 = WienerPhi(20).phi(Grid1D(-1000.0, 1000.0, 2**16).points)
    wc = wiener_construction(6, Grid1D(-1.0, 1.0, 2**16), Grid1D(-1000.0, 1000.0, 2**16))
    phi_min = float(min(phi20.min(), wc.phi.min()))
    ok = measure_ok and dyadics and phi_min >= -1e-12
    assert acceptance(
        "C9 dyadic construction",
        ok,
        f"measure(Z n [0,1]) >= {float(dz.measure_lower):.6f} (exact {dz.measure_lower} >= 1/2: {measure_ok}), "
        f"dyadics k/2^m (m <= 10) in complement: {dyadics}, min sampled phi = {phi_min:.3e} (>= -1e-12)",
    )


def test_c10_indistinguishable_pair(acceptance):
    obs = CovariantObservable.slit(1.0, GRID)
    r1, r2, rep = indistinguishable_pair(obs)
    tn = schatten_norm(r1 - r2, 1)
    ok = tn >= 0.01 and rep["density_sup_diff"] <= 1e-6
    assert acceptance(
        "C10 informational incompleteness witness",
        ok,
        f"||rho1 - rho2||_1 = {tn:.3f} (>= 0.01), sup|f1 - f2| = {rep['density_sup_diff']:.2e} (<= 1e-6)",
    )
