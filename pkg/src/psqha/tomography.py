"""Covariant phase-space observables, simulated data and reconstruction.

The outcome density of the observable generated by T is

    f_rho(x) = tr{rho W(x) T W(x)^*},

whose symplectic transform is rho^ conj(T^).  Reconstruction divides by
conj(T^) where |T^| is above a threshold and maps back with the inverse Weyl
transform.  The generator is either a Fock matrix or an exact position-space
object such as :class:`psqha.fock.Slit`.  The exact form is what lets
transforms vanish identically on open sets.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .fock import (
    Slit,
    _diagonal_envelopes,
    check_density,
    check_operator,
    number_state,
    parity_conjugate,
    projector,
    schatten_norm,
    translate,
)
from .grid import PSFunction, PSGrid, default_grid, integrate, symplectic_fourier
from .qconv import WeylTransformTable, convolve_op_op, inverse_weyl_transform, transform_table, weyl_transform_at

log = logging.getLogger(__name__)

__all__ = [
    "CovariantObservable",
    "MeasurementRecord",
    "ReconstructionResult",
    "NotInformationallyComplete",
    "outcome_density",
    "sample_outcomes",
    "kde_density",
    "reconstruct",
    "project_density",
    "trace_distance",
    "Bump",
    "indistinguishable_pair",
]

NORMALIZATION_TOL = 1e-8
DEFICIT_TOL = 1e-2
MAX_DISCARD = 0.5


class NotInformationallyComplete(ValueError):
    pass


def trace_distance(a, b) -> float:
    return 0.5 * schatten_norm(np.asarray(a) - np.asarray(b), 1)


# --------------------------------------------------------------------------
# observable


@dataclass
class CovariantObservable:
    """Observable generated by ``generator``: a density matrix or an exact pure state.

    ``That`` caches the generator's Weyl transform on ``grid``.
    """

    generator: object
    grid: PSGrid = field(default_factory=default_grid)
    label: str = ""
    That: WeylTransformTable = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.generator, Slit):
            self.generator = check_density(self.generator)
        self.That = transform_table(self.generator, self.grid)
        t0 = self.That.values.at_origin()
        if abs(t0 - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"generator transform at the origin is {t0}, expected 1")

    @classmethod
    def number(cls, k: int = 0, grid: PSGrid | None = None) -> "CovariantObservable":
        return cls(projector(number_state(k, k + 1)), grid or default_grid(), f"n={k}")

    @classmethod
    def vacuum(cls, grid: PSGrid | None = None) -> "CovariantObservable":
        return cls.number(0, grid)

    @classmethod
    def slit(cls, a: float = 1.0, grid: PSGrid | None = None, cutoff: int | None = None) -> "CovariantObservable":
        """Exact slit generator, or its Fock truncation when ``cutoff`` is given."""
        s = Slit(a)
        gen = s if cutoff is None else projector(s.coefficients(cutoff))
        return cls(gen, grid or default_grid(), f"slit:{a}")

    @property
    def is_exact(self) -> bool:
        return isinstance(self.generator, Slit)

    @property
    def strip_edge(self) -> float | None:
        return self.generator.strip_edge if self.is_exact else None

    def covariance_check(self, rho, step: int = 8) -> float:
        """Largest deviation between f of translate(rho, x) and f_rho shifted by x.

        Shifts run over the 3x3 lattice of multiples of ``step`` grid nodes.
        The comparison stays away from the wrapped border.
        """
        rho = check_density(rho)
        g = self.grid
        base = outcome_density(rho, self).values.real
        worst = 0.0
        pad = step + 1
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                x = (i * step * g.dq, j * step * g.dp)
                moved = translate(rho, x, cutoff=rho.shape[0] + 40)
                f = outcome_density(check_density(moved, tol=1e-6), self, check=False).values.real
                shifted = np.roll(base, (i * step, j * step), axis=(0, 1))
                worst = max(worst, float(np.abs(f - shifted)[pad:-pad, pad:-pad].max()))
        return worst


# --------------------------------------------------------------------------
# densities and data


def _slit_density(rho: np.ndarray, slit: Slit, grid: PSGrid) -> np.ndarray:
    N = rho.shape[0]
    out = np.empty(grid.shape)
    # row blocks keep the overlap table small
    rows = max(1, int(2**22 // (grid.n_p * N)))
    for s in range(0, grid.nq, rows):
        u = slit.displaced_overlaps(grid.q[s : s + rows], grid.p, N)
        out[s : s + rows] = np.einsum("ijn,nm,ijm->ij", u.conj(), rho, u, optimize=True).real
    return out


def outcome_density(rho, obs: CovariantObservable, check: bool = True) -> PSFunction:
    """f_rho(x) = tr{rho W(x) T W(x)^*} on the observable's grid."""
    rho = check_operator(rho, "rho")
    g = obs.grid
    if obs.is_exact:
        vals = _slit_density(rho, obs.generator, g)
    else:
        # convolve_op_op conjugates its second argument by parity
        vals = convolve_op_op(rho, parity_conjugate(obs.generator), g).values.real
    f = PSFunction(g, vals)
    if check:
        if vals.min() < -1e-10:
            raise ArithmeticError(f"outcome density has negative samples ({vals.min():.3g})")
        total = integrate(f).real
        tr = float(np.trace(rho).real)
        if abs(total - tr) > DEFICIT_TOL:
            raise ArithmeticError(f"density integrates to {total:.4f} instead of {tr:.4f}: grid too small")
    return f


@dataclass
class MeasurementRecord:
    grid: PSGrid
    density: PSFunction | None = None
    samples: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        if (self.density is None) == (self.samples is None):
            raise ValueError("a record holds either a density or samples")
        if self.samples is not None:
            s = np.asarray(self.samples, float)
            if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] < 1:
                raise ValueError("samples must be an (n, 2) array")
            g = self.grid
            inside = (s[:, 0] >= g.q_min) & (s[:, 0] < g.q_max) & (s[:, 1] >= g.p_min) & (s[:, 1] < g.p_max)
            if not inside.all():
                raise ValueError("samples outside the grid extents")
            self.samples = s

    @property
    def noiseless(self) -> bool:
        return self.density is not None

    def to_json(self) -> dict:
        d = {"grid": self.grid.to_json(), "seed": self.seed}
        if self.density is not None:
            d["density"] = self.density.to_json()
        else:
            d["samples"] = self.samples.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MeasurementRecord":
        grid = PSGrid.from_json(d["grid"])
        if "density" in d:
            return cls(grid, density=PSFunction.from_json(d["density"]), seed=d.get("seed"))
        return cls(grid, samples=np.asarray(d["samples"], float), seed=d.get("seed"))


def sample_outcomes(rho, obs: CovariantObservable, n: int, seed: int, density: PSFunction | None = None) -> MeasurementRecord:
    """n i.i.d. outcomes from the grid-discretized density.

    Node k owns the cell [x_k, x_k + step); a cell is drawn by inverse CDF and
    the point is placed uniformly inside it.
    """
    n = int(n)
    if n < 1:
        raise ValueError("need at least one sample")
    f = outcome_density(rho, obs) if density is None else density
    g = obs.grid
    prob = np.clip(f.values.real, 0.0, None).ravel()
    prob = prob / math.fsum(prob)
    cdf = np.cumsum(prob)
    cdf[-1] = 1.0
    rng = np.random.default_rng(seed)
    cells = np.searchsorted(cdf, rng.random(n), side="right")
    i, j = np.unravel_index(cells, g.shape)
    jitter = rng.random((n, 2))
    q = g.q[i] + jitter[:, 0] * g.dq
    p = g.p[j] + jitter[:, 1] * g.dp
    # rounding can land exactly on the upper edge of the last cell
    q = np.minimum(q, np.nextafter(g.q_max, -np.inf))
    p = np.minimum(p, np.nextafter(g.p_max, -np.inf))
    return MeasurementRecord(g, samples=np.column_stack([q, p]), seed=seed)


def _silverman(x: np.ndarray, d: int = 2) -> float:
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    iqr = float(np.subtract(*np.percentile(x, [75, 25]))) / 1.349
    sigma = min(sd, iqr) if iqr > 0 else sd
    return sigma * (4.0 / (d + 2)) ** (1.0 / (d + 4)) * n ** (-1.0 / (d + 4))


def _gauss_weights(h: float, step: float) -> np.ndarray:
    if h <= 0:
        return np.ones(1)
    r = int(math.ceil(6 * h / step))
    k = np.exp(-0.5 * (np.arange(-r, r + 1) * step / h) ** 2)
    return k / k.sum()


def kde_density(record: MeasurementRecord) -> tuple[PSFunction, PSFunction, tuple[float, float]]:
    """Gaussian KDE on the grid with Silverman bandwidths per axis.

    Samples are binned to the node owning their cell, then smoothed by a
    discrete Gaussian.  Returns (density, kernel transform, bandwidths); the
    kernel transform is exact for the discrete kernel, so it can be divided out.
    """
    g = record.grid
    s = record.samples
    i = np.clip(np.floor((s[:, 0] - g.q_min) / g.dq).astype(int), 0, g.nq - 1)
    j = np.clip(np.floor((s[:, 1] - g.p_min) / g.dp).astype(int), 0, g.n_p - 1)
    counts = np.bincount(i * g.n_p + j, minlength=g.nq * g.n_p).reshape(g.shape).astype(float)
    hq, hp = _silverman(s[:, 0]), _silverman(s[:, 1])
    kq, kp = _gauss_weights(hq, g.dq), _gauss_weights(hp, g.dp)
    smooth = ndimage.convolve1d(counts, kq, axis=0, mode="constant")
    smooth = ndimage.convolve1d(smooth, kp, axis=1, mode="constant")
    dens = PSFunction(g, smooth / (s.shape[0] * g.weight))
    kernel = np.zeros(g.shape)
    i0, j0 = g.origin
    rq, rp = kq.size // 2, kp.size // 2
    kernel[i0 - rq : i0 + rq + 1, j0 - rp : j0 + rp + 1] = np.outer(kq, kp)
    khat = symplectic_fourier(PSFunction(g, kernel / g.weight))
    return dens, khat, (hq, hp)


# --------------------------------------------------------------------------
# reconstruction


@dataclass
class ReconstructionResult:
    rho_hat: np.ndarray
    raw: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def project_density(A, method: str = "clip") -> np.ndarray:
    """Map a matrix to a density operator.

    ``clip`` hermitizes, clips negative eigenvalues and renormalizes.
    ``nearest`` is the Frobenius-nearest density operator with the same
    eigenvectors: negative mass is spread evenly over the kept eigenvalues
    until none is negative.
    """
    A = check_operator(A)
    H = 0.5 * (A + A.conj().T)
    w, v = np.linalg.eigh(H)
    if method == "clip":
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            raise ArithmeticError("no positive spectrum left to project onto")
        w = w / w.sum()
    elif method == "nearest":
        tr = w.sum()
        if tr <= 0:
            raise ArithmeticError("matrix has non-positive trace")
        w = w[::-1] / tr
        v = v[:, ::-1]
        acc = 0.0
        k = w.size
        while k > 0 and w[k - 1] + acc / k < 0:
            acc += w[k - 1]
            w[k - 1] = 0.0
            k -= 1
        w[:k] += acc / k
        w = np.clip(w, 0.0, None)
    else:
        raise ValueError(f"unknown projection {method!r}")
    return (v * w) @ v.conj().T


def reference_mass(grid: PSGrid, N: int) -> np.ndarray:
    """sum_{m,n<N} |<m|W(x)|n>|^2 on the grid: where operators on N levels live."""
    alpha = grid.alpha().ravel()
    x = alpha.real**2 + alpha.imag**2
    w = np.zeros(alpha.size)
    for k in range(N):
        g = _diagonal_envelopes(x, k, N - k)
        w += (2 if k else 1) * (g**2).sum(axis=0)
    return w.reshape(grid.shape)


def reconstruct(
    record: MeasurementRecord,
    obs: CovariantObservable,
    cutoff: int,
    reg_eps: float = 1e-4,
    method: str = "cutoff",
    projection: str = "clip",
) -> ReconstructionResult:
    """Invert f^ = rho^ conj(T^) on the grid.

    ``method='cutoff'`` divides where |T^| > reg_eps and zeroes the rest.
    ``'tikhonov'`` uses rho^ = f^ T^ / (|T^|^2 + reg_eps^2).
    ``regularized_fraction`` is the share of :func:`reference_mass` over the
    discarded nodes (|T^| <= reg_eps).  It measures how much of the room
    available to operators on ``cutoff`` levels the observable cannot see.
    """
    if record.grid != obs.grid:
        raise ValueError("record and observable live on different grids")
    cutoff = int(cutoff)
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    if not reg_eps > 0:
        raise ValueError("reg_eps must be positive")
    g = obs.grid
    That = obs.That.values.values
    if record.noiseless:
        dens, khat, bw = record.density, None, None
    else:
        dens, kh, bw = kde_density(record)
        khat = kh.values
    fhat = symplectic_fourier(dens).values
    denom = np.conj(That) if khat is None else np.conj(That) * khat
    keep = np.abs(That) > reg_eps
    if method == "cutoff":
        rho_t = np.where(keep, fhat / np.where(keep, denom, 1.0), 0.0)
    elif method == "tikhonov":
        rho_t = fhat * np.conj(denom) / (np.abs(denom) ** 2 + reg_eps**2)
    else:
        raise ValueError(f"unknown method {method!r}")

    ref = reference_mass(g, cutoff)
    frac = float(ref[~keep].sum() / ref.sum())
    if frac > MAX_DISCARD:
        raise NotInformationallyComplete(
            f"observable effectively not informationally complete at this resolution "
            f"(regularized_fraction {frac:.3f})"
        )
    raw = inverse_weyl_transform(PSFunction(g, rho_t), cutoff)
    rho_hat = project_density(raw, projection)

    Q, P = g.mesh()
    est_t = weyl_transform_at(rho_hat, Q, P)
    raw_t = weyl_transform_at(raw, Q, P)
    mass = np.abs(est_t) ** 2
    outside = float(mass[~keep].sum() / mass.sum())
    if outside > 1e-3:
        warnings.warn(
            f"{outside:.2%} of the estimate's transform mass lies where |T^| <= reg_eps; "
            "the observable does not see this state well",
            RuntimeWarning,
            stacklevel=2,
        )
    kfac = 1.0 if khat is None else khat

    def residual(t):
        # Plancherel: L2 distance of densities from their transforms
        return float(np.linalg.norm(fhat - t * np.conj(That) * kfac) / np.linalg.norm(fhat))

    diag = {
        "regularized_fraction": frac,
        "residual": residual(est_t),
        "residual_raw": residual(raw_t),
        "mass_outside": outside,
        "reg_eps": reg_eps,
        "method": method,
        "projection": projection,
    }
    if bw is not None:
        diag["bandwidth"] = list(bw)
    return ReconstructionResult(rho_hat, raw, diag)


# --------------------------------------------------------------------------
# indistinguishable pair


def _smooth_step(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside (C-infinity, compact)."""
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


@dataclass(frozen=True)
class Bump:
    """Gaussian of widths (q_width, p_width) times a compact C-infinity cutoff.

    Placed at (+-q_center, 0).  The cutoff has half-extent ``support`` in both
    directions; by default it reaches to 0.2 inside the strip edge.
    """

    q_center: float = 5.0
    q_width: float = 0.5
    p_width: float = 0.5
    support: float | None = None

    def half_extent(self, edge: float) -> float:
        return self.support if self.support is not None else self.q_center - edge - 0.2

    def values(self, Q, P, edge: float) -> np.ndarray:
        h = self.half_extent(edge)
        if not h > 0:
            raise ValueError("bump support is empty")
        out = np.zeros(np.broadcast(Q, P).shape)
        for c in (self.q_center, -self.q_center):
            g = np.exp(-0.5 * ((Q - c) / self.q_width) ** 2 - 0.5 * (P / self.p_width) ** 2)
            out = out + g * _smooth_step((Q - c) / h) * _smooth_step(P / h)
        return out


def indistinguishable_pair(
    obs: CovariantObservable,
    bump: Bump | None = None,
    eps: float | None = None,
    cutoff: int = 96,
    rho_base=None,
    T0=None,
    eps_min: float = 1e-12,
):
    """Two states that the observable cannot tell apart when Z3 fails.

    A^ = g^ T0^ with g^ a bump inside the zero set of T^.  The bump is
    mirrored, so g^(-x) = conj g^(x) and A is self-adjoint.  The pair is
    rho_base +- eps A.  ``eps`` (default: 0.999 of the positivity limit) is
    halved until both are states.  ``rho_base`` defaults to the maximally
    mixed state on ``cutoff`` levels.
    """
    bump = Bump() if bump is None else bump
    g = obs.grid
    edge = obs.strip_edge if obs.strip_edge is not None else 0.0
    T0 = projector(number_state(0, 1)) if T0 is None else check_density(T0)
    Q, P = g.mesh()
    ghat = bump.values(Q, P, edge)
    if np.abs(ghat[0]).max() > 1e-12 or np.abs(ghat[-1]).max() > 1e-12:
        raise ValueError("bump does not fit inside the grid")
    Ahat = ghat * weyl_transform_at(T0, Q, P)
    A = inverse_weyl_transform(PSFunction(g, Ahat), cutoff)
    A = 0.5 * (A + A.conj().T)

    base = np.eye(cutoff) / cutoff if rho_base is None else check_density(rho_base)
    if base.shape[0] != cutoff:
        raise ValueError("rho_base must live on the same cutoff")
    w, v = np.linalg.eigh(base)
    if w.min() <= 0:
        raise ValueError("rho_base must be full rank")
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    limit = 1.0 / max(np.abs(np.linalg.eigvalsh(inv_sqrt @ A @ inv_sqrt)).max(), 1e-300)
    e = 0.999 * limit if eps is None else float(eps)
    while True:
        r1, r2 = base + e * A, base - e * A
        if min(np.linalg.eigvalsh(r1).min(), np.linalg.eigvalsh(r2).min()) >= 0:
            break
        e *= 0.5
        if e < eps_min:
            raise ArithmeticError("no eps above eps_min keeps both operators positive; rho_base is not full-rank enough")
    # the bump has no trace, but the truncation may carry a tiny one
    r1 = r1 / np.trace(r1).real
    r2 = r2 / np.trace(r2).real

    # pointwise comparison; the slit's momentum tails run past the default grid
    d1 = outcome_density(r1, obs, check=False)
    f1 = d1.values.real
    f2 = outcome_density(r2, obs, check=False).values.real
    diff_t = weyl_transform_at(r1 - r2, Q, P)
    seen = np.abs(obs.That.values.values) > 0
    inside = float(np.abs(obs.That.values.values[ghat > 0]).max()) if (ghat > 0).any() else 0.0
    report = {
        "eps": e,
        "eps_limit": limit,
        "trace_norm_diff": schatten_norm(r1 - r2, 1),
        "density_sup_diff": float(np.abs(f1 - f2).max()),
        "density_sup": float(max(np.abs(f1).max(), np.abs(f2).max())),
        "density_integral": integrate(d1).real,
        "transform_diff_outside_zero_set": float(np.abs(diff_t[seen]).max()) if seen.any() else 0.0,
        "max_That_on_bump": inside,
        "bump_in_zero_set": inside == 0.0,
    }
    if not report["bump_in_zero_set"]:
        log.info("bump overlaps the support of T^ (max %.3g); the densities will differ", inside)
    return r1, r2, report
