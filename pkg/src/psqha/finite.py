"""Finite phase space Z_d x Z_d.

Weyl operators are clock-and-shift matrices, X|k> = |k+1>, Z|k> = w^k |k>
with w = exp(2 pi i / d):

    W(a, b) = w^(-ab (d+1)/2) X^a Z^b   (d odd; (d+1)/2 inverts 2 mod d)
    W(a, b) = X^a Z^b                   (d even)

Zero sets, regularity and injectivity are phase-blind, so the convention only
matters for reproducibility.  Parity is (Pi psi)(k) = psi(-k mod d), and the
finite convolution of two operators is

    (A*B)(x) = (1/d) tr{A W(x) Pi B Pi W(x)^*}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "RANK_TOL",
    "FiniteOp",
    "FiniteWeylTable",
    "finite_weyl",
    "finite_weyl_transform",
    "finite_parity",
    "finite_convolve",
    "regularity_rank",
    "injectivity_defect",
    "check_equivalences",
    "product_weyl",
    "random_finite_state",
]

RANK_TOL = 1e-10


@dataclass
class FiniteOp:
    d: int
    entries: np.ndarray

    def __post_init__(self):
        self.d = int(self.d)
        if self.d < 2:
            raise ValueError("d must be at least 2")
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.shape != (self.d, self.d):
            raise ValueError(f"entries must be {self.d}x{self.d}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("non-finite entries")

    def to_json(self) -> dict:
        return {"d": self.d, "re": self.entries.real.tolist(), "im": self.entries.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteOp":
        return cls(obj["d"], np.asarray(obj["re"], float) + 1j * np.asarray(obj["im"], float))


@dataclass
class FiniteWeylTable:
    d: int
    values: np.ndarray  # values[a, b] = tr{T W(a, b)}

    def zero_set(self, tol: float = RANK_TOL) -> list[tuple[int, int]]:
        scale = max(float(np.abs(self.values).max()), 1.0)
        return [tuple(map(int, ab)) for ab in np.argwhere(np.abs(self.values) <= tol * scale)]


def _as_matrix(T) -> np.ndarray:
    if isinstance(T, FiniteOp):
        return T.entries
    return FiniteOp(np.asarray(T).shape[0], T).entries


@lru_cache(maxsize=16)
def _weyl_stack(d: int) -> np.ndarray:
    """All W(a, b), shape (d, d, d, d), read-only."""
    k = np.arange(d)
    w = np.exp(2j * np.pi / d)
    X = np.eye(d, dtype=complex)[(k - 1) % d]  # X[k+1, k] = 1
    Zd = w ** k
    out = np.empty((d, d, d, d), dtype=complex)
    Xa = np.eye(d, dtype=complex)
    for a in range(d):
        for b in range(d):
            M = Xa * (Zd**b)[None, :]
            if d % 2:
                M = M * w ** (-(a * b * (d + 1) // 2) % d)
            out[a, b] = M
        Xa = X @ Xa
    out.flags.writeable = False
    return out


def finite_weyl(d: int, a: int, b: int) -> np.ndarray:
    d = int(d)
    if d < 2:
        raise ValueError("d must be at least 2")
    if not (0 <= a < d and 0 <= b < d):
        raise IndexError(f"(a, b) = ({a}, {b}) out of range for d = {d}")
    return _weyl_stack(d)[a, b].copy()


def finite_weyl_transform(T) -> FiniteWeylTable:
    M = _as_matrix(T)
    d = M.shape[0]
    # tr{T W} = sum_{ij} T[j, i] W[i, j]
    return FiniteWeylTable(d, np.einsum("abij,ji->ab", _weyl_stack(d), M))


def finite_parity(A) -> np.ndarray:
    M = _as_matrix(A)
    d = M.shape[0]
    idx = (-np.arange(d)) % d
    return M[np.ix_(idx, idx)]


def _translates(M: np.ndarray) -> np.ndarray:
    """W(x) M W(x)^* for every x, shape (d*d, d, d)."""
    d = M.shape[0]
    W = _weyl_stack(d).reshape(d * d, d, d)
    return W @ M @ W.conj().transpose(0, 2, 1)


def finite_convolve(A, B) -> np.ndarray:
    """(A*B)(a, b) as a d x d table."""
    MA, MB = _as_matrix(A), _as_matrix(B)
    d = MA.shape[0]
    tr = _translates(finite_parity(MB))
    return (np.einsum("ij,xji->x", MA, tr) / d).reshape(d, d)


def _rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > tol * s[0]).sum())


def regularity_rank(T) -> int:
    """Rank of the d^2 x d^2 matrix of vectorized translates."""
    M = _as_matrix(T)
    d = M.shape[0]
    return _rank(_translates(M).reshape(d * d, d * d))


def injectivity_defect(T) -> int:
    """Kernel dimension of A -> A*T on d x d matrices."""
    M = _as_matrix(T)
    d = M.shape[0]
    # column (i, j) of the map is the table of E_ij * T = (W T_- W^*)[j, i] / d
    tr = _translates(finite_parity(M))
    L = tr.transpose(0, 2, 1).reshape(d * d, d * d) / d
    return d * d - _rank(L)


def check_equivalences(T) -> dict:
    """Zero set empty <=> regularity rank d^2 <=> injectivity defect 0, plus a witness.

    For a zero x of T^ the Weyl operator W(-x) satisfies W(-x) * T = 0.
    The report carries it and the size of its convolution.
    """
    M = _as_matrix(T)
    d = M.shape[0]
    table = finite_weyl_transform(M)
    zeros = table.zero_set()
    rank = regularity_rank(M)
    defect = injectivity_defect(M)
    flags = {
        "zero_set_empty": not zeros,
        "full_rank": rank == d * d,
        "injective": defect == 0,
    }
    report = {
        "d": d,
        "zero_set": zeros,
        "regularity_rank": rank,
        "injectivity_defect": defect,
        "nonzero_transform_entries": d * d - len(zeros),
        **flags,
        "agree": len(set(flags.values())) == 1,
        "defect_matches_zero_count": defect == len(zeros),
        "witness": None,
        "witness_residual": None,
    }
    if zeros:
        a, b = zeros[0]
        A = finite_weyl(d, (-a) % d, (-b) % d)
        report["witness"] = {"point": [(-a) % d, (-b) % d], "op": FiniteOp(d, A).to_json()}
        report["witness_residual"] = float(np.abs(finite_convolve(A, M)).max())
    report["ok"] = report["agree"] and report["defect_matches_zero_count"] and (
        report["witness_residual"] is None or report["witness_residual"] <= 1e-10
    )
    return report


def product_weyl(d1: int, d2: int, x1: tuple[int, int], x2: tuple[int, int]) -> np.ndarray:
    """Weyl operator of Z_d1 x Z_d2 as the tensor product of the factors."""
    return np.kron(finite_weyl(d1, *x1), finite_weyl(d2, *x2))


def random_finite_state(d: int, kind: str = "random-mixed", rng=None) -> np.ndarray:
    """Density matrices for experiments: maximally-mixed, basis, random-pure, random-mixed."""
    rng = np.random.default_rng(rng)
    if kind == "maximally-mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "basis":
        M = np.zeros((d, d), dtype=complex)
        k = int(rng.integers(d))
        M[k, k] = 1.0
        return M
    if kind == "random-pure":
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        return np.outer(v, v.conj())
    if kind == "random-mixed":
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        M = G @ G.conj().T
        return M / np.trace(M).real
    raise ValueError(f"unknown state kind {kind!r}")
