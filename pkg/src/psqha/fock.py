"""Truncated Fock-space operators, Weyl (displacement) operators and states.

Operators are plain complex ``numpy`` arrays of shape ``(N, N)`` in the number
basis; ``N`` is the cutoff.  Phase-space points are pairs ``(q, p)`` with
hbar = 1.  The Weyl operator is

    W(q, p) = exp(i(pQ - qP)) = D(alpha),   alpha = (q + i p) / sqrt(2),

with ``a = (Q + iP)/sqrt(2)``.  Matrix elements are taken from the closed
form, so every entry of a truncated ``W`` is an exact entry of the infinite
matrix; truncation only ever removes rows and columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_legendre

__all__ = [
    "DENSITY_TOL",
    "check_operator",
    "check_density",
    "check_state",
    "alpha_of",
    "weyl_operator",
    "displacement_blocks",
    "translate",
    "parity_conjugate",
    "schatten_norm",
    "number_state",
    "coherent_state",
    "slit_state",
    "hermite_functions",
    "Slit",
    "projector",
    "embed",
    "random_density",
    "operator_to_json",
    "operator_from_json",
    "state_to_json",
    "state_from_json",
]

DENSITY_TOL = 1e-10


# --------------------------------------------------------------------------
# validation


def check_operator(A, name: str = "operator") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def check_density(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, positive, unit trace (all to ``tol``)."""
    rho = check_operator(rho, "density operator")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise ValueError(f"density operator not Hermitian (deviation {herm:.2e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density operator trace is {tr!r}, expected 1")
    evmin = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if evmin < -tol:
        raise ValueError(f"density operator has negative eigenvalue {evmin:.2e}")
    return rho


def check_state(psi, tol: float = DENSITY_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size < 1 or not np.all(np.isfinite(psi)):
        raise ValueError("state must be a finite non-empty vector")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError(f"state norm is {np.linalg.norm(psi)!r}, expected 1")
    return psi


def _check_point(x) -> tuple[float, float]:
    q, p = (float(v) for v in x)
    if not (math.isfinite(q) and math.isfinite(p)):
        raise ValueError(f"phase-space point must be finite, got {x!r}")
    return q, p


def _check_cutoff(N) -> int:
    if int(N) != N or N < 1:
        raise ValueError(f"cutoff must be a positive integer, got {N!r}")
    return int(N)


def alpha_of(q, p):
    """Complex displacement amplitude of the phase-space point (q, p)."""
    return (np.asarray(q) + 1j * np.asarray(p)) / math.sqrt(2.0)


# --------------------------------------------------------------------------
# Weyl operators


def weyl_operator(x, N: int) -> np.ndarray:
    """Truncated matrix of W(x) from the associated-Laguerre closed form.

    For m >= n, <m|D(a)|n> = sqrt(n!/m!) a^(m-n) e^{-|a|^2/2} L_n^(m-n)(|a|^2),
    and the upper triangle uses (-conj(a))^(n-m) with m, n swapped.
    """
    q, p = _check_point(x)
    N = _check_cutoff(N)
    a = complex(q, p) / math.sqrt(2.0)
    r2 = q * q / 2.0 + p * p / 2.0
    lr2 = math.log(r2) if r2 > 0 else -math.inf

    # unit phases by repeated multiplication keep W(-x) == W(x)^dagger bitwise
    u = a / abs(a) if r2 > 0 else 1.0 + 0j
    pow_lo = np.ones(N, dtype=complex)
    pow_up = np.ones(N, dtype=complex)
    for k in range(1, N):
        pow_lo[k] = pow_lo[k - 1] * u
        pow_up[k] = pow_up[k - 1] * (-u.conjugate())

    W = np.empty((N, N), dtype=complex)
    lg = gammaln(np.arange(N) + 1.0)
    for k in range(N):
        n = np.arange(N - k)
        m = n + k
        if k > 0 and r2 == 0.0:
            W[m, n] = 0.0
            W[n, m] = 0.0
            continue
        logmag = 0.5 * (lg[n] - lg[m]) + 0.5 * k * lr2 - r2 / 2.0 if k else np.full(n.size, -r2 / 2.0)
        real = np.exp(logmag) * eval_genlaguerre(n, k, r2)
        W[m, n] = real * pow_lo[k]
        if k:
            W[n, m] = real * pow_up[k]
    return W


def _diagonal_envelopes(x: np.ndarray, k: int, count: int) -> np.ndarray:
    """Normalized Laguerre envelopes along one diagonal.

    Returns ``g[n] = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^(k)(x)`` for
    ``n < count`` via the three-term recurrence in ``n``, which stays
    stable well past 300 levels (the column-wise recursion does not).
    """
    g = np.empty((count,) + x.shape)
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    if k == 0:
        g[0] = np.exp(-x / 2.0)
    else:
        g[0] = np.where(x > 0, np.exp(-x / 2.0 + 0.5 * k * lx - 0.5 * gammaln(k + 1.0)), 0.0)
    if count > 1:
        g[1] = g[0] * (1.0 + k - x) / math.sqrt(k + 1.0)
    for n in range(1, count - 1):
        g[n + 1] = ((2 * n + 1 + k - x) * g[n] - math.sqrt(n * (n + k)) * g[n - 1]) / math.sqrt(
            (n + 1) * (n + k + 1)
        )
    return g


def displacement_blocks(alpha, nr: int, nc: int) -> np.ndarray:
    """Batched ``<m|D(alpha)|n>`` for ``m < nr``, ``n < nc``.

    ``alpha`` may have any shape; the result has shape ``alpha.shape + (nr, nc)``.
    """
    a = np.asarray(alpha, dtype=complex)
    shape = a.shape
    a = a.ravel()
    x = (a.real**2 + a.imag**2)
    mod = np.sqrt(x)
    unit = np.where(mod > 0, a / np.where(mod > 0, mod, 1.0), 1.0)
    out = np.zeros((nr, nc, a.size), dtype=complex)
    up = -unit.conj()
    lo_k = np.ones_like(unit)
    up_k = np.ones_like(unit)
    for k in range(max(nr, nc)):
        if k:
            lo_k = lo_k * unit
            up_k = up_k * up
        # the same envelope serves diagonal m = n + k and n = m + k
        count = max(min(nr - k, nc), min(nc - k, nr) if k else 0)
        g = _diagonal_envelopes(x, k, count)
        c_lo = min(nr - k, nc)
        if c_lo > 0:
            n = np.arange(c_lo)
            out[n + k, n] = g[:c_lo] * lo_k
        c_up = min(nc - k, nr)
        if k and c_up > 0:
            m = np.arange(c_up)
            out[m, m + k] = g[:c_up] * up_k
    return np.ascontiguousarray(np.moveaxis(out, -1, 0)).reshape(shape + (nr, nc))


def translate(A, x, cutoff: int | None = None) -> np.ndarray:
    """Phase-space translate W(x) A W(x)^* reported at ``cutoff`` (default: A's).

    The product only involves W entries with a column index inside A's
    support, and those entries are exact, so the returned block is exact;
    trace lost beyond ``cutoff`` is the only truncation effect.
    """
    A = check_operator(A)
    q, p = _check_point(x)
    n_out = A.shape[0] if cutoff is None else _check_cutoff(cutoff)
    Wb = displacement_blocks(np.array(complex(q, p) / math.sqrt(2.0)), n_out, A.shape[0])
    return Wb @ A @ Wb.conj().T


def parity_conjugate(A) -> np.ndarray:
    A = check_operator(A)
    s = (-1.0) ** np.arange(A.shape[0])
    return A * np.outer(s, s)


def schatten_norm(A, p: float = 1.0) -> float:
    """Schatten p-norm from the singular values; ``p = inf`` gives the operator norm."""
    A = check_operator(A)
    if not p >= 1:
        raise ValueError(f"Schatten index must satisfy p >= 1, got {p!r}")
    s = np.linalg.svd(A, compute_uv=False)
    if math.isinf(p):
        return float(s.max())
    if p == 1:
        return float(s.sum())
    smax = s.max()
    if smax == 0:
        return 0.0
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


# --------------------------------------------------------------------------
# states


def number_state(n: int, N: int) -> np.ndarray:
    N = _check_cutoff(N)
    if not 0 <= n < N:
        raise ValueError(f"number state index {n} outside cutoff {N}")
    psi = np.zeros(N, dtype=complex)
    psi[n] = 1.0
    return psi


def coherent_state(alpha: complex, N: int) -> np.ndarray:
    """Coherent state coefficients, renormalized after truncation."""
    N = _check_cutoff(N)
    alpha = complex(alpha)
    n = np.arange(N)
    if alpha == 0:
        return number_state(0, N)
    logmag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0) - abs(alpha) ** 2 / 2
    psi = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return psi / np.linalg.norm(psi)


def hermite_functions(N: int, t) -> np.ndarray:
    """Normalized Hermite functions ``h_n(t)`` for ``n < N``; shape ``(N,) + t.shape``."""
    t = np.asarray(t, dtype=float)
    h = np.empty((N,) + t.shape)
    h[0] = np.pi**-0.25 * np.exp(-(t**2) / 2.0)
    if N > 1:
        h[1] = math.sqrt(2.0) * t * h[0]
    for n in range(2, N):
        h[n] = math.sqrt(2.0 / n) * t * h[n - 1] - math.sqrt((n - 1) / n) * h[n - 2]
    return h


@lru_cache(maxsize=16)
def _legendre(nodes: int):
    return roots_legendre(nodes)


def _slit_raw(a: float, N: int, nodes: int) -> np.ndarray:
    s, w = _legendre(nodes)
    h = hermite_functions(N, a * s)
    return (h @ (a * w)) / math.sqrt(2.0 * a)


def slit_state(a: float, N: int) -> np.ndarray:
    """Fock coefficients of the normalized indicator wavefunction of [-a, a].

    Gauss-Legendre quadrature against Hermite functions, doubling the node
    count until the coefficients move by less than 1e-10; renormalized after
    truncation.  The Hermite coefficients of a step decay slowly (about
    n^{-3/4}), so the truncated state only approximates the slit; use
    :class:`Slit` where the exact generator matters.
    """
    N = _check_cutoff(N)
    if not a > 0:
        raise ValueError(f"slit half-width must be positive, got {a!r}")
    nodes = max(32, 4 * int(math.ceil(a * math.sqrt(2 * N + 1))))
    c = _slit_raw(a, N, nodes)
    while True:
        nodes *= 2
        c2 = _slit_raw(a, N, nodes)
        if np.abs(c2 - c).max() < 1e-10 or nodes > 1 << 16:
            break
        c = c2
    return (c2 / np.linalg.norm(c2)).astype(complex)


@dataclass(frozen=True)
class Slit:
    """Exact position-space generator ``phi = 1_[-a,a] / sqrt(2a)``.

    Gives the Weyl transform and the overlaps ``<n|W(x) phi>`` without
    truncating ``phi`` in the number basis.
    """

    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"slit half-width must be positive, got {self.a!r}")

    trace_norm = 1.0

    def coefficients(self, N: int) -> np.ndarray:
        return slit_state(self.a, N)

    @property
    def strip_edge(self) -> float:
        """The transform vanishes identically for |q| >= 2a."""
        return 2 * self.a

    def weyl_transform(self, q, p) -> np.ndarray:
        """<phi|W(q,p)|phi> = sin(p(2a-|q|)/2) / (a p) on |q| < 2a, zero elsewhere."""
        q, p = np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float))
        overlap = np.clip(2 * self.a - np.abs(q), 0.0, None)
        val = overlap / (2 * self.a) * np.sinc(p * overlap / (2 * np.pi))
        return val.astype(complex)

    def displaced_overlaps(self, qs, ps, N: int) -> np.ndarray:
        """``u[i, j, n] = <n| W(qs[i], ps[j]) phi>`` on a tensor grid, by quadrature."""
        qs = np.asarray(qs, float)
        ps = np.asarray(ps, float)
        pmax = float(np.abs(ps).max()) if ps.size else 0.0
        nodes = 64 + 8 * int(math.ceil(self.a * (math.sqrt(2 * N + 1) + pmax)))
        s, w = _legendre(nodes)
        out = np.empty((qs.size, ps.size, N), dtype=complex)
        norm = 1.0 / math.sqrt(2 * self.a)
        for i, q in enumerate(qs):
            t = q + self.a * s
            hw = hermite_functions(N, t) * (self.a * w)
            osc = np.exp(1j * np.outer(t, ps))
            out[i] = (hw @ osc).T * (norm * np.exp(-0.5j * q * ps))[:, None]
        return out


# --------------------------------------------------------------------------
# helpers


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def embed(A, N: int) -> np.ndarray:
    """Zero-pad (or truncate) an operator to cutoff ``N``."""
    A = check_operator(A)
    out = np.zeros((N, N), dtype=complex)
    k = min(N, A.shape[0])
    out[:k, :k] = A[:k, :k]
    return out


def random_density(N: int, rank: int, levels: int | None = None, rng=None) -> np.ndarray:
    """Random rank-``rank`` density operator supported on the first ``levels`` states."""
    rng = np.random.default_rng(rng)
    levels = N if levels is None else levels
    G = rng.normal(size=(levels, rank)) + 1j * rng.normal(size=(levels, rank))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return embed(rho, N)


def operator_to_json(A) -> dict:
    A = check_operator(A)
    return {"cutoff": A.shape[0], "re": A.real.tolist(), "im": A.imag.tolist()}


def operator_from_json(d: dict) -> np.ndarray:
    A = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
    if A.shape != (d["cutoff"], d["cutoff"]):
        raise ValueError("operator JSON shape does not match its cutoff")
    return check_operator(A)


def state_to_json(psi) -> dict:
    psi = np.asarray(psi, dtype=complex)
    return {"cutoff": psi.size, "re": psi.real.tolist(), "im": psi.imag.tolist()}


def state_from_json(d: dict) -> np.ndarray:
    psi = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
    if psi.shape != (d["cutoff"],):
        raise ValueError("state JSON shape does not match its cutoff")
    return psi
