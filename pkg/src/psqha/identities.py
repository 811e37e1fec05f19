"""Random-instance checks of the phase-space identities.

Each check returns its worst deviation over the trials; :data:`TOLERANCES`
holds the acceptance thresholds.  Norm estimates report the smallest slack
(negative means a violated inequality), everything else a nonnegative error.
"""

from __future__ import annotations

import math

import numpy as np

from .fock import random_density
from .grid import PSGrid, gaussian, integrate, symplectic_fourier
from .qconv import convolve_op_op, duality_check, norm_estimates, verify_plancherel, weyl_transform

__all__ = [
    "TOLERANCES",
    "random_operator",
    "trace_normalization",
    "plancherel",
    "integral_identity",
    "convolution_theorem",
    "norm_slack",
    "duality",
    "run_identities",
]

TOLERANCES = {
    "trace_normalization": 1e-8,
    "plancherel": 1e-3,
    "integral": 1e-3,
    "convolution_theorem": 1e-4,
    "factorization": 1e-4,
    "duality": 1e-4,
    "norm_estimates": -1e-8,
}


def random_operator(levels: int, rng) -> np.ndarray:
    """Complex Gaussian matrix: neither Hermitian nor positive."""
    return rng.normal(size=(levels, levels)) + 1j * rng.normal(size=(levels, levels))


def _levels(rng, max_levels: int) -> int:
    return int(rng.integers(1, max_levels + 1))


def trace_normalization(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> float:
    """max |A^(0) - tr A|, evaluated at the origin node of the grid."""
    worst = 0.0
    for _ in range(trials):
        A = random_operator(_levels(rng, max_levels), rng)
        worst = max(worst, abs(weyl_transform(A, grid).values.at_origin() - np.trace(A)))
    return worst


def plancherel(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> float:
    worst = 0.0
    for _ in range(trials):
        A = random_density(max_levels, min(3, max_levels), rng=rng)
        worst = max(worst, verify_plancherel(A, grid)["rel_deviation"])
    return worst


def integral_identity(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> float:
    """Relative error of \\int A*B = tr A tr B (absolute 1e-4 units when the product vanishes)."""
    worst = 0.0
    for _ in range(trials):
        A = random_operator(max_levels, rng)
        B = random_density(max_levels, 2, rng=rng)
        target = np.trace(A) * np.trace(B)
        err = abs(integrate(convolve_op_op(A, B, grid)) - target)
        worst = max(worst, err / abs(target) if abs(target) > 0 else err / 1e-4 * 1e-3)
    return worst


def convolution_theorem(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> tuple[float, float]:
    """Sup residuals of (rho*T)^ = rho^ T^ and of f_rho^ = rho^ conj(T^), relative to the sup of the right side.

    The outcome density is rho * (T_-), whose transform is rho^ (T_-)^ and
    (T_-)^(x) = T^(-x) = conj T^(x) for self-adjoint T.
    """
    from .fock import parity_conjugate

    conv = fac = 0.0
    for _ in range(trials):
        rho = random_density(max_levels, 3, rng=rng)
        T = random_density(max_levels, 2, rng=rng)
        rh = weyl_transform(rho, grid).values.values
        th = weyl_transform(T, grid).values.values
        lhs = symplectic_fourier(convolve_op_op(rho, T, grid)).values
        rhs = rh * th
        conv = max(conv, np.abs(lhs - rhs).max() / np.abs(rhs).max())
        lhs = symplectic_fourier(convolve_op_op(rho, parity_conjugate(T), grid)).values
        rhs = rh * np.conj(th)
        fac = max(fac, np.abs(lhs - rhs).max() / np.abs(rhs).max())
    return conv, fac


def norm_slack(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> float:
    """Smallest slack of the Young-type inequalities at p in {1, 2, inf}."""
    worst = math.inf
    for _ in range(trials):
        n = _levels(rng, max_levels)
        A = random_operator(n, rng) if rng.random() < 0.5 else random_density(n, min(n, 3), rng=rng)
        S = random_density(max_levels, int(rng.integers(1, 4)), rng=rng)
        f = gaussian(grid, float(rng.uniform(0.5, 2.0)), center=tuple(rng.uniform(-2, 2, size=2)), normalized=True)
        f = type(f)(grid, f.values * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        worst = min(worst, min(norm_estimates(A, S, f, cutoff=max_levels + 16).values()))
    return worst


def duality(trials: int, rng, grid: PSGrid, max_levels: int = 8) -> float:
    worst = 0.0
    for _ in range(trials):
        A = random_density(max_levels, 2, rng=rng)
        B = random_density(max_levels, 2, rng=rng)
        f = gaussian(grid, 0.8, center=tuple(rng.uniform(-1, 1, size=2)), normalized=True)
        worst = max(worst, duality_check(f, A, B)["rel_discrepancy"])
    return worst


def run_identities(trials: int, seed: int, grid: PSGrid | None = None, max_levels: int = 8) -> dict:
    """All identity checks with ``trials`` instances each; worst values and verdicts."""
    grid = PSGrid() if grid is None else grid
    rng = np.random.default_rng(seed)
    conv, fac = convolution_theorem(trials, rng, grid, max_levels)
    worst = {
        "trace_normalization": trace_normalization(trials, rng, grid, max_levels),
        "plancherel": plancherel(trials, rng, grid, max_levels),
        "integral": integral_identity(trials, rng, grid, max_levels),
        "convolution_theorem": conv,
        "factorization": fac,
        "duality": duality(trials, rng, grid, max_levels),
        "norm_estimates": norm_slack(trials, rng, grid, max_levels),
    }
    passed = {
        k: bool(worst[k] >= tol) if k == "norm_estimates" else bool(worst[k] <= tol) for k, tol in TOLERANCES.items()
    }
    return {"worst": worst, "tolerance": dict(TOLERANCES), "passed": passed}
