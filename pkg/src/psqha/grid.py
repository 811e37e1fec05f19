"""Phase-space grids, the symplectic Fourier transform and classical convolution.

All integrals use the scaled measure dx = dq dp / (2 pi), so a grid node
carries weight ``dq * dp / (2 pi)``.  The symplectic Fourier transform is

    f^(q', p') = \\int exp(-i (q' p - q p')) f(q, p) dx,

which is its own inverse under this measure.  It is evaluated as an exact
Riemann sum on the grid by two dense matrix products (a matrix Fourier
transform), so input and output live on the same nodes whatever the grid
spacing.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "BOUNDARY_TOL",
    "PSGrid",
    "PSFunction",
    "default_grid",
    "symplectic_fourier",
    "convolve_functions",
    "integrate",
    "gaussian",
]

BOUNDARY_TOL = 1e-8


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class PSGrid:
    """Uniform grid on [q_min, q_max) x [p_min, p_max) with the origin as a node.

    Nodes are ``q_min + k * dq`` for ``k < nq``, ``dq = (q_max - q_min) / nq``.
    """

    q_min: float = -12.0
    q_max: float = 12.0
    p_min: float = -12.0
    p_max: float = 12.0
    nq: int = 256
    n_p: int = 256

    def __post_init__(self):
        for name in ("q_min", "q_max", "p_min", "p_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (self.q_min == -self.q_max and self.p_min == -self.p_max and self.q_max > 0 and self.p_max > 0):
            raise ValueError("grid extents must be symmetric about the origin")
        for n in (self.nq, self.n_p):
            if not (_is_pow2(n) and n >= 16):
                raise ValueError(f"sample counts must be powers of two >= 16, got {n}")

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.nq

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.nq)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nq, self.n_p)

    @property
    def weight(self) -> float:
        """Quadrature weight of one node under dq dp / (2 pi)."""
        return self.dq * self.dp / (2 * math.pi)

    @property
    def origin(self) -> tuple[int, int]:
        return (self.nq // 2, self.n_p // 2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    def alpha(self) -> np.ndarray:
        Q, P = self.mesh()
        return (Q + 1j * P) / math.sqrt(2.0)

    def refined(self, factor: int = 2) -> "PSGrid":
        return replace(self, nq=self.nq * factor, n_p=self.n_p * factor)

    def to_json(self) -> dict:
        return {
            "q_min": self.q_min,
            "q_max": self.q_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nq": self.nq,
            "np": self.n_p,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PSGrid":
        return cls(d["q_min"], d["q_max"], d["p_min"], d["p_max"], int(d["nq"]), int(d["np"]))

    @classmethod
    def square(cls, half_width: float = 12.0, n: int = 256) -> "PSGrid":
        return cls(-half_width, half_width, -half_width, half_width, n, n)


def default_grid() -> PSGrid:
    return PSGrid()


@dataclass
class PSFunction:
    grid: PSGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"samples shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("phase-space function has non-finite samples")

    def boundary_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    def decays(self, tol: float = BOUNDARY_TOL) -> bool:
        return self.boundary_max() <= tol * max(1.0, float(np.abs(self.values).max()))

    def at_origin(self) -> complex:
        return complex(self.values[self.grid.origin])

    def l2_norm(self) -> float:
        return math.sqrt(math.fsum((np.abs(self.values) ** 2).ravel()) * self.grid.weight)

    def l1_norm(self) -> float:
        return math.fsum(np.abs(self.values).ravel()) * self.grid.weight

    def lp_norm(self, p: float) -> float:
        if p == math.inf:
            return float(np.abs(self.values).max())
        if p < 1:
            raise ValueError("p must be >= 1")
        return (math.fsum((np.abs(self.values) ** p).ravel()) * self.grid.weight) ** (1.0 / p)

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "PSFunction":
        grid = PSGrid.from_json(d["grid"])
        return cls(grid, np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float))

    def to_csv(self, stream=None) -> str | None:
        """Rows ``q,p,re,im`` in q-major order; returns the text if no stream is given."""
        own = stream is None
        stream = io.StringIO() if own else stream
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["q", "p", "re", "im"])
        Q, P = self.grid.mesh()
        for q, p, v in zip(Q.ravel(), P.ravel(), self.values.ravel()):
            w.writerow([repr(float(q)), repr(float(p)), repr(float(v.real)), repr(float(v.imag))])
        return stream.getvalue() if own else None


def _same_grid(f: PSFunction, g: PSFunction):
    if f.grid != g.grid:
        raise ValueError("phase-space functions live on different grids")


def symplectic_fourier(f: PSFunction) -> PSFunction:
    """Symplectic Fourier transform sampled on the same grid.

    The Riemann sum factorizes: the pairing puts output q' against input p
    and output p' against input q, hence ``Eq @ f.T @ Ep``.
    """
    g = f.grid
    warn = not f.decays()
    if warn:
        log.debug("symplectic_fourier: input does not decay at grid boundary (%.2e)", f.boundary_max())
    Eq = np.exp(-1j * np.outer(g.q, g.p))  # [a, k] -> exp(-i q'_a p_k)
    Ep = np.exp(1j * np.outer(g.q, g.p))  # [j, b] -> exp(+i q_j p'_b)
    out = g.weight * (Eq @ f.values.T @ Ep)
    return PSFunction(g, out, {"boundary_warning": warn})


def convolve_functions(f: PSFunction, g: PSFunction) -> PSFunction:
    """(f*g)(y) = \\int f(x) g(y - x) dx by transform, multiply, transform back."""
    _same_grid(f, g)
    prod = symplectic_fourier(f).values * symplectic_fourier(g).values
    out = symplectic_fourier(PSFunction(f.grid, prod))
    out.meta["boundary_warning"] = not (f.decays() and g.decays())
    return out


def integrate(f: PSFunction) -> complex:
    """Sum of samples times dq dp / (2 pi), with exactly rounded summation."""
    v = f.values.ravel()
    return complex(math.fsum(v.real), math.fsum(v.imag)) * f.grid.weight


def gaussian(grid: PSGrid, width: float = 1.0, center=(0.0, 0.0), normalized: bool = False) -> PSFunction:
    """exp(-|x - c|^2 / (2 width^2)); with ``normalized`` it integrates to one under dx."""
    Q, P = grid.mesh()
    v = np.exp(-((Q - center[0]) ** 2 + (P - center[1]) ** 2) / (2 * width**2))
    if normalized:
        v = v / width**2
    return PSFunction(grid, v)
