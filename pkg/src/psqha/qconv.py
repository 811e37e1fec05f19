"""Quantum-classical convolutions and the Weyl transform on a phase-space grid.

Conventions (dx = dq dp / 2pi throughout):

    A^(x)      = tr{A W(x)}
    f * A      = \\int f(x) W(x) A W(x)^* dx                (an operator)
    (A * B)(y) = tr{A W(y) B_- W(y)^*},  B_- = Pi B Pi       (a function)

With these, (A*B)^ = A^ B^ and (f*A)^ = f^ A^.  Everything that needs W(x)
on the whole grid goes through :func:`iter_blocks`, which caches the block
table once per (grid, rows, cols) when it fits in memory and streams it in
chunks otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fock import _diagonal_envelopes, check_operator, displacement_blocks, parity_conjugate, schatten_norm
from .grid import PSFunction, PSGrid, integrate, symplectic_fourier

__all__ = [
    "WeylTransformTable",
    "weyl_transform",
    "weyl_transform_at",
    "transform_table",
    "evaluate_transform",
    "inverse_weyl_transform",
    "convolve_op_op",
    "convolve_fn_op",
    "duality_check",
    "verify_plancherel",
    "norm_estimates",
    "iter_blocks",
    "CACHE_BYTES",
]

CACHE_BYTES = 256 * 2**20
CHUNK_BYTES = 48 * 2**20


@dataclass
class WeylTransformTable:
    """Sampled Weyl transform.

    ``source`` keeps whatever produced the table (a Fock matrix or an object
    with an exact ``weyl_transform(q, p)``) so that refinements and off-grid
    evaluations can go back to it.  ``source_cutoff`` is 0 for exact sources.
    """

    source_cutoff: int
    values: PSFunction
    meta: dict = field(default_factory=dict)
    source: object = field(default=None, repr=False, compare=False)

    @property
    def grid(self) -> PSGrid:
        return self.values.grid

    def to_json(self) -> dict:
        d = self.values.to_json()
        d["source_cutoff"] = self.source_cutoff
        return d

    @classmethod
    def from_json(cls, d: dict) -> "WeylTransformTable":
        return cls(int(d["source_cutoff"]), PSFunction.from_json(d))


@lru_cache(maxsize=2)
def _cached_blocks(grid: PSGrid, nr: int, nc: int) -> np.ndarray:
    blocks = displacement_blocks(grid.alpha().ravel(), nr, nc)
    blocks.flags.writeable = False
    return blocks


def iter_blocks(grid: PSGrid, nr: int, nc: int, mask=None):
    """Yield ``(index, blocks)`` covering the grid, ``blocks[i] = W(x_index[i])[:nr, :nc]``.

    ``mask`` (boolean, grid-shaped) restricts to a subset of nodes.
    """
    npts = grid.nq * grid.n_p
    idx_all = np.arange(npts) if mask is None else np.flatnonzero(np.asarray(mask).ravel())
    if npts * nr * nc * 16 <= CACHE_BYTES:
        full = _cached_blocks(grid, nr, nc)
        yield idx_all, full[idx_all]
        return
    alpha = grid.alpha().ravel()
    chunk = max(256, CHUNK_BYTES // (16 * nr * nc))
    for s in range(0, idx_all.size, chunk):
        idx = idx_all[s : s + chunk]
        yield idx, displacement_blocks(alpha[idx], nr, nc)


def weyl_transform_at(A, q, p) -> np.ndarray:
    """tr{A W(q, p)} at arbitrary (broadcast) points.

    Summed diagonal by diagonal from the Laguerre envelopes, so memory stays
    O(points) for any cutoff; the entries used are exact.
    """
    A = check_operator(A)
    q, p = np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float))
    shape = q.shape
    alpha = ((q + 1j * p) / math.sqrt(2.0)).ravel()
    N = A.shape[0]
    x = alpha.real**2 + alpha.imag**2
    mod = np.sqrt(x)
    unit = np.where(mod > 0, alpha / np.where(mod > 0, mod, 1.0), 1.0)
    out = np.zeros(alpha.size, dtype=complex)
    lo_k = np.ones_like(unit)
    up_k = np.ones_like(unit)
    for k in range(N):
        if k:
            lo_k = lo_k * unit
            up_k = up_k * (-unit.conj())
        g = _diagonal_envelopes(x, k, N - k)
        # tr{A W} = sum_{m,n} A[n, m] W[m, n]
        lower = np.diagonal(A, offset=k)  # A[n, n+k] pairs with W[n+k, n]
        out += lo_k * (lower @ g)
        if k:
            upper = np.diagonal(A, offset=-k)  # A[n+k, n] pairs with W[n, n+k]
            out += up_k * (upper @ g)
    return out.reshape(shape)


def weyl_transform(A, grid: PSGrid) -> WeylTransformTable:
    """Sampled x -> tr{A W(x)} on the grid."""
    A = check_operator(A)
    Q, P = grid.mesh()
    return WeylTransformTable(A.shape[0], PSFunction(grid, weyl_transform_at(A, Q, P)), source=A)


def evaluate_transform(source, q, p) -> np.ndarray:
    """Weyl transform of ``source`` at points; matrices go through :func:`weyl_transform_at`."""
    if hasattr(source, "weyl_transform"):
        q, p = np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float))
        return np.asarray(source.weyl_transform(q, p), dtype=complex)
    return weyl_transform_at(source, q, p)


def transform_table(source, grid: PSGrid) -> WeylTransformTable:
    """Table for a Fock matrix or an exact generator."""
    if hasattr(source, "weyl_transform"):
        Q, P = grid.mesh()
        return WeylTransformTable(0, PSFunction(grid, evaluate_transform(source, Q, P)), {"exact": True}, source=source)
    return weyl_transform(source, grid)


def inverse_weyl_transform(F, cutoff: int) -> np.ndarray:
    """A[m, n] = \\int F(x) <m|W(x)^*|n> dx as a grid Riemann sum."""
    values = F.values if isinstance(F, WeylTransformTable) else F
    grid = values.grid
    w = values.values.ravel() * grid.weight
    A = np.zeros((cutoff, cutoff), dtype=complex)
    nz = w != 0
    if not nz.any():
        return A
    for idx, blocks in iter_blocks(grid, cutoff, cutoff, mask=nz.reshape(grid.shape)):
        # <m|W^*|n> = conj(W[n, m])
        A += np.einsum("p,pnm->mn", w[idx], blocks.conj(), optimize=True)
    return A


def convolve_op_op(A, B, grid: PSGrid) -> PSFunction:
    """(A*B)(y) = tr{A W(y) B_- W(y)^*} on the grid."""
    A = check_operator(A, "A")
    B = check_operator(B, "B")
    Bm = parity_conjugate(B)
    na, nb = A.shape[0], B.shape[0]
    out = np.empty(grid.nq * grid.n_p, dtype=complex)
    for idx, Wb in iter_blocks(grid, na, nb):
        # tr{A Wb Bm Wb^dagger} = sum_{i,l} (A Wb Bm)[i, l] conj(Wb[i, l])
        left = np.matmul(A, Wb) @ Bm
        out[idx] = np.einsum("pil,pil->p", left, Wb.conj())
    return PSFunction(grid, out.reshape(grid.shape))


def convolve_fn_op(f: PSFunction, A, cutoff: int | None = None) -> np.ndarray:
    """f * A = \\int f(x) W(x) A W(x)^* dx as a Riemann sum, reported at ``cutoff``."""
    A = check_operator(A)
    grid = f.grid
    n_out = A.shape[0] if cutoff is None else int(cutoff)
    w = f.values.ravel() * grid.weight
    nz = w != 0
    out = np.zeros((n_out, n_out), dtype=complex)
    if not nz.any():
        return out
    for idx, Wb in iter_blocks(grid, n_out, A.shape[0], mask=nz.reshape(grid.shape)):
        left = np.matmul(Wb, A) * w[idx, None, None]
        # sum_p left[p] @ Wb[p]^dagger as one matrix product
        npts = idx.size
        out += left.transpose(1, 0, 2).reshape(n_out, npts * A.shape[0]) @ (
            Wb.conj().transpose(0, 2, 1).reshape(npts * A.shape[0], n_out)
        )
    return out


def duality_check(f: PSFunction, A, B) -> dict:
    """Both sides of \\int f_-(x) (A*B)(x) dx = tr{A_- (f*B)}, computed independently."""
    A = check_operator(A, "A")
    B = check_operator(B, "B")
    grid = f.grid
    f_minus = _reflect(f)
    lhs = integrate(PSFunction(grid, f_minus.values * convolve_op_op(A, B, grid).values))
    fB = convolve_fn_op(f, B, cutoff=A.shape[0])
    rhs = complex(np.trace(parity_conjugate(A) @ fB))
    absdiff = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "abs_discrepancy": absdiff,
        "rel_discrepancy": absdiff / scale if scale > 0 else 0.0,
    }


def _reflect(f: PSFunction) -> PSFunction:
    """g(x) = f(-x) on a grid whose nodes are symmetric except the first row/column."""
    v = f.values
    out = np.zeros_like(v)
    # node k <-> node n - k (mod n); index 0 (the -L edge) has no mirror inside
    out[1:, 1:] = v[:0:-1, :0:-1]
    out[0, :] = 0.0
    out[:, 0] = 0.0
    out[0, 0] = 0.0
    return PSFunction(f.grid, out)


def verify_plancherel(A, grid: PSGrid) -> dict:
    A = check_operator(A)
    table = weyl_transform(A, grid)
    lhs = table.values.l2_norm()
    rhs = schatten_norm(A, 2) if np.any(A) else 0.0
    return {
        "transform_l2": lhs,
        "hs_norm": rhs,
        "rel_deviation": abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs),
    }


def norm_estimates(A, S, f: PSFunction, ps=(1.0, 2.0, math.inf), cutoff: int | None = None) -> dict:
    """Slack of ||A*S||_p <= ||A||_p ||S||_1 and ||f*S||_p <= ||f||_1 ||S||_p.

    Function norms are L^p under dx on the grid, operator norms Schatten.
    Negative slack is a violation.
    """
    A = check_operator(A, "A")
    S = check_operator(S, "S")
    grid = f.grid
    AS = convolve_op_op(A, S, grid)
    fS = convolve_fn_op(f, S, cutoff)
    s1 = schatten_norm(S, 1)
    out = {}
    for p in ps:
        key = "inf" if p == math.inf else f"{p:g}"
        out[f"op_op_{key}"] = schatten_norm(A, p) * s1 - AS.lp_norm(p)
        out[f"fn_op_{key}"] = f.l1_norm() * schatten_norm(S, p) - schatten_norm(fS, p)
    return out


def weyl_fourier_covariance(A, x, grid: PSGrid):
    """Moduli of the transforms of A and its translate (equal up to a phase)."""
    from .fock import translate

    return np.abs(weyl_transform(A, grid).values.values), np.abs(
        weyl_transform(translate(A, x, cutoff=A.shape[0] + 32), grid).values.values
    )


def transform_of_convolution(A, B, grid: PSGrid) -> tuple[np.ndarray, np.ndarray]:
    """(A*B)^ by the symplectic transform and A^ B^ by Weyl transforms."""
    lhs = symplectic_fourier(convolve_op_op(A, B, grid)).values
    rhs = weyl_transform(A, grid).values.values * weyl_transform(B, grid).values.values
    return lhs, rhs


def reference_scale(*arrays) -> float:
    return max(float(np.abs(a).max()) for a in arrays) or 1.0


