"""Zero sets of Weyl transforms and the explicit constructions around them.

A grid can neither prove that a set has measure zero nor that it is
nowhere dense, so :func:`zero_set_report` is a heuristic with a fixed recipe:

* The *window* is the set of nodes at radius r with max_{|y| >= r} |F(y)| >= epsilon.
  Outside it the transform has decayed below threshold for good.  That is
  the Riemann-Lebesgue tail, not a zero set.
* A grid cell is a zero cell if one corner has |F| < epsilon, or if both the
  real and imaginary parts change sign across its corners (a component
  smaller than epsilon counts as either sign).
* Density of the nonzero set is probed in balls of radius r_probe around
  nodes of the core window, where the tail envelope exceeds 1e3 epsilon.
* Zero fractions are taken over window cells at the base resolution and two
  further doublings.  A fraction that shrinks with the step is read as
  measure zero.  A stable positive one with a dense nonzero set at probe
  scale is read as Z3 but not Z2.

The dyadic construction is kept in exact integer arithmetic over the common
denominator 2**(2 n_max + 2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from .fock import check_density, check_operator, schatten_norm
from .grid import PSFunction, PSGrid, symplectic_fourier
from .qconv import WeylTransformTable, convolve_fn_op, evaluate_transform, transform_table, weyl_transform_at

__all__ = [
    "CLASSES",
    "ZeroSetReport",
    "zero_set_report",
    "locate_zero_circle",
    "Grid1D",
    "WienerPhi",
    "WienerConstruction",
    "wiener_construction",
    "DyadicZeroSet",
    "dyadic_zero_measure",
    "StripGenerator",
    "T2Construction",
    "build_T2",
]

CLASSES = ("Z1", "Z2_not_Z1", "Z3_not_Z2", "not_Z3")
NOISE_REL = 1e-13
CORE_FACTOR = 1e3
# zero fractions falling at least this fast per doubling count as measure zero
# (a curve gives 0.5 per doubling, a set of positive measure gives 1)
SHRINK_PER_DOUBLING = 0.65


class NoZeroCrossing(ValueError):
    pass


# --------------------------------------------------------------------------
# zero-set report


@dataclass
class ZeroSetReport:
    epsilon: float
    min_abs: float
    min_abs_window: float
    zero_fraction: float
    complement_dense_flag: bool
    refinement_trend: list
    classification: str
    r_probe: float
    noise_floor: float
    window_fraction: float
    orientation: str | None = None
    heuristic: bool = True
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _window(values: np.ndarray, grid: PSGrid, eps: float) -> np.ndarray:
    """Nodes inside the radius beyond which |F| stays below eps."""
    Q, P = grid.mesh()
    r = np.hypot(Q, P).ravel()
    a = np.abs(values).ravel()
    order = np.argsort(-r, kind="stable")
    tail = np.maximum.accumulate(a[order])
    env = np.empty_like(tail)
    env[order] = tail
    return (env >= eps).reshape(grid.shape)


def _sign_change(c: np.ndarray, eps: float) -> np.ndarray:
    """Cells whose four corner values of a real component straddle zero."""
    pos = c >= -eps
    neg = c <= eps
    corners = lambda m: (m[:-1, :-1], m[1:, :-1], m[:-1, 1:], m[1:, 1:])
    any_pos = np.logical_or.reduce(corners(pos))
    any_neg = np.logical_or.reduce(corners(neg))
    return any_pos & any_neg


def _zero_cells(values: np.ndarray, grid: PSGrid, eps: float):
    small = np.abs(values) < eps
    cs = small[:-1, :-1] | small[1:, :-1] | small[:-1, 1:] | small[1:, 1:]
    crossing = _sign_change(values.real, eps) & _sign_change(values.imag, eps)
    win = _window(values, grid, eps)
    wcell = win[:-1, :-1] & win[1:, :-1] & win[:-1, 1:] & win[1:, 1:]
    return (cs | crossing) & wcell, wcell, win


def _fraction(zero: np.ndarray, wcell: np.ndarray) -> float:
    n = int(wcell.sum())
    return float(zero.sum()) / n if n else 0.0


def _dense_flag(values: np.ndarray, grid: PSGrid, eps: float, r_probe: float, win: np.ndarray) -> bool:
    """Every r_probe ball around a window node holds a node with |F| >= eps."""
    rq = int(math.floor(r_probe / grid.dq))
    rp = int(math.floor(r_probe / grid.dp))
    i, j = np.mgrid[-rq : rq + 1, -rp : rp + 1]
    foot = (i * grid.dq) ** 2 + (j * grid.dp) ** 2 <= r_probe**2
    big = np.abs(values) >= eps
    reach = ndimage.maximum_filter(big, footprint=foot, mode="constant", cval=False)
    return bool(reach[win].all()) if win.any() else True


def _orientation(zero: np.ndarray, wcell: np.ndarray) -> str | None:
    """'p-bands' if membership depends on p alone, 'q-bands' if on q alone."""
    if zero.sum() < 16 or wcell.sum() < 16:
        return None

    def mismatch(axis):
        # disagreement with the per-line majority, lines running along ``axis``
        n = np.maximum(wcell.sum(axis=axis, keepdims=True), 1)
        major = (zero & wcell).sum(axis=axis, keepdims=True) * 2 > n
        return float(((zero != major) & wcell).sum() / wcell.sum())

    along_q, along_p = mismatch(0), mismatch(1)
    if along_q <= 0.1 * along_p:
        return "p-bands"
    if along_p <= 0.1 * along_q:
        return "q-bands"
    return None


def _default_epsilon(F: WeylTransformTable) -> float:
    src = F.source
    if isinstance(src, np.ndarray):
        norm = schatten_norm(src, 1)
    elif src is not None and hasattr(src, "trace_norm"):
        norm = float(src.trace_norm)
    else:
        norm = abs(F.values.at_origin()) or float(np.abs(F.values.values).max())
    return 1e-6 * norm


def zero_set_report(F: WeylTransformTable, epsilon: float | None = None, r_probe: float | None = None, levels: int = 3) -> ZeroSetReport:
    """Heuristic Z1/Z2/Z3 diagnosis of a sampled Weyl transform.

    Refinement needs ``F.source``; without one the trend has a single entry
    and measure-zero cannot be told apart from positive measure.
    """
    grid = F.grid
    vals = F.values.values
    eps = _default_epsilon(F) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    floor = NOISE_REL * float(np.abs(vals).max())
    if eps < floor:
        raise ValueError(f"epsilon {eps:.3g} is below the numerical noise floor of the transform; use >= {floor:.3g}")
    step = max(grid.dq, grid.dp)
    r_probe = 8 * step if r_probe is None else float(r_probe)
    if r_probe < 2 * step:
        raise ValueError(f"r_probe must be at least two grid steps ({2 * step:.4g})")

    zero, wcell, win = _zero_cells(vals, grid, eps)
    trend = [_fraction(zero, wcell)]
    notes = []
    if F.source is not None:
        g = grid
        for _ in range(levels - 1):
            g = g.refined(2)
            Q, P = g.mesh()
            v = evaluate_transform(F.source, Q, P)
            z, wc, _ = _zero_cells(v, g, eps)
            trend.append(_fraction(z, wc))
    else:
        notes.append("no source attached: refinement trend unavailable")

    min_abs = float(np.abs(vals).min())
    min_win = float(np.abs(vals[win]).min()) if win.any() else 0.0
    # density is judged where the transform sits well above threshold, so a
    # tail fading through epsilon does not read as a gap
    core = _window(vals, grid, CORE_FACTOR * eps)
    dense = _dense_flag(vals, grid, eps, r_probe, core if core.any() else win)
    any_zero = any(t > 0 for t in trend)

    if not any_zero and min_win >= eps:
        cls = "Z1"
    elif len(trend) > 1 and trend[0] > 0 and trend[-1] <= SHRINK_PER_DOUBLING ** (len(trend) - 1) * trend[0]:
        cls = "Z2_not_Z1" if dense else "not_Z3"
    elif dense:
        cls = "Z3_not_Z2"
    else:
        cls = "not_Z3"

    return ZeroSetReport(
        epsilon=eps,
        min_abs=min_abs,
        min_abs_window=min_win,
        zero_fraction=trend[0],
        complement_dense_flag=dense,
        refinement_trend=trend,
        classification=cls,
        r_probe=r_probe,
        noise_floor=floor,
        window_fraction=float(win.mean()),
        orientation=_orientation(zero, wcell),
        notes=notes,
    )


# --------------------------------------------------------------------------
# zero circles


def _bisect(fun, a: float, b: float, fa: float, tol: float = 1e-13) -> float:
    for _ in range(200):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def locate_zero_circle(F: WeylTransformTable, rays: int = 8, all_roots: bool = False):
    """radius**2 of the sign-change circle(s) of a radially symmetric transform.

    Scans the real part along ``rays`` rays at the grid step, then bisects
    each bracket.  Exact evaluation goes through ``F.source``.  Without a
    source it falls back to linear interpolation of the table along the axes.
    Returns the innermost radius**2 (or all of them with ``all_roots``),
    averaged over rays.
    """
    grid = F.grid
    rmax = min(grid.q_max, grid.p_max)
    step = min(grid.dq, grid.dp)
    r = np.arange(0.0, rmax, step)
    scale = float(np.abs(F.values.values).max())
    if F.source is not None:
        angles = np.pi * np.arange(rays) / rays
        per_ray = []
        for th in angles:
            c, s = math.cos(th), math.sin(th)
            line = evaluate_transform(F.source, r * c, r * s).real
            fun = lambda t: float(evaluate_transform(F.source, np.array([t * c]), np.array([t * s])).real[0])
            roots = []
            for k in np.flatnonzero(np.sign(line[:-1]) * np.sign(line[1:]) < 0):
                if max(abs(line[k]), abs(line[k + 1])) < 1e-10 * scale:
                    continue  # decayed tail noise
                roots.append(_bisect(fun, r[k], r[k + 1], line[k]))
            per_ray.append(roots)
    else:
        per_ray = []
        i0, j0 = grid.origin
        for line, ax in ((F.values.values[i0:, j0].real, grid.q[i0:]), (F.values.values[i0, j0:].real, grid.p[j0:])):
            roots = []
            for k in np.flatnonzero(np.sign(line[:-1]) * np.sign(line[1:]) < 0):
                if max(abs(line[k]), abs(line[k + 1])) < 1e-10 * scale:
                    continue
                t = line[k] / (line[k] - line[k + 1])
                roots.append(ax[k] + t * (ax[k + 1] - ax[k]))
            per_ray.append(roots)
    counts = {len(x) for x in per_ray}
    if counts == {0}:
        raise NoZeroCrossing("no sign change of the transform along any ray")
    if len(counts) != 1:
        raise ValueError("rays disagree on the number of zero circles; is the transform radially symmetric?")
    radii2 = (np.asarray(per_ray) ** 2).mean(axis=0)
    return [float(x) for x in radii2] if all_roots else float(radii2[0])


# --------------------------------------------------------------------------
# dyadic construction


@dataclass(frozen=True)
class Grid1D:
    """Endpoint-inclusive uniform sampling of an interval."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_max > self.x_min):
            raise ValueError("need finite x_min < x_max")
        if self.n < 2:
            raise ValueError("need at least two points")

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)


def _triangle(s):
    return np.clip(1.0 - np.abs(s), 0.0, None)


@dataclass(frozen=True)
class WienerPhi:
    """phi^(s) = sum_{n<=n_max} 2^-n sum_k 2^-|k| tri(2^(n+2) (2^n s + k)).

    ``tri`` is the hat (1 - |s|)_+ = chi*chi for chi the indicator of
    (-1/2, 1/2).  With phi^(s) = \\int phi(q) e^{-iqs} dq its inverse is the
    closed form in :meth:`phi`, a sum of nonnegative terms.
    """

    n_max: int

    def __post_init__(self):
        if int(self.n_max) < 1:
            raise ValueError("n_max must be >= 1")

    @staticmethod
    def kernel(t):
        """sum_k 2^-|k| e^{-itk} in closed form."""
        return 3.0 / (5.0 - 4.0 * np.cos(t))

    @staticmethod
    def base(t):
        """Inverse transform of the hat: sinc(t/2)^2 / (2 pi)."""
        return np.sinc(np.asarray(t, float) / (2 * np.pi)) ** 2 / (2 * np.pi)

    def phi_hat(self, s) -> np.ndarray:
        s = np.asarray(s, float)
        out = np.zeros_like(s)
        for n in range(1, self.n_max + 1):
            mu = 2.0**n
            lam = 2.0 ** (n + 2)
            # supports have width 2/lam < 1, so only the nearest k contributes
            k = -np.rint(mu * s)
            out += 2.0**-n * 2.0 ** -np.abs(k) * _triangle(lam * (mu * s + k))
        return out

    def phi(self, q) -> np.ndarray:
        q = np.asarray(q, float)
        out = np.zeros_like(q)
        for n in range(1, self.n_max + 1):
            mu = 2.0**n
            lam = 2.0 ** (n + 2)
            out += 2.0**-n / (mu * lam) * self.base(q / (mu * lam)) * self.kernel(q / mu)
        return out

    @property
    def phi_hat_zero(self) -> float:
        return 1.0 - 2.0**-self.n_max


@dataclass
class DyadicZeroSet:
    """Exact bookkeeping for Z(phi)^c in [0, 1].

    ``starts``/``ends`` are numerators over ``denominator`` of the merged
    open intervals of the union of I_n, n <= n_max.
    """

    n_max: int
    denominator: int
    starts: np.ndarray
    ends: np.ndarray
    complement_measure: Fraction
    tail: Fraction
    measure_lower: Fraction
    measure_upper: Fraction

    @property
    def intervals(self) -> list[tuple[Fraction, Fraction]]:
        D = self.denominator
        return [(Fraction(int(a), D), Fraction(int(b), D)) for a, b in zip(self.starts, self.ends)]

    def in_complement(self, x) -> bool:
        """Exact membership of a rational x in the union (open intervals, clipped to [0, 1])."""
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise ValueError("x must lie in [0, 1]")
        y = x * self.denominator
        k = int(np.searchsorted(self.starts, math.floor(y), side="right")) - 1
        for j in (k - 1, k, k + 1):
            if 0 <= j < self.starts.size:
                a, b = int(self.starts[j]), int(self.ends[j])
                lo_ok = y > a or (a == 0 and y == 0)
                hi_ok = y < b or (b == self.denominator and y == b)
                if lo_ok and hi_ok:
                    return True
        return False

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "denominator": self.denominator,
            "starts": [int(a) for a in self.starts],
            "ends": [int(b) for b in self.ends],
            "complement_measure": str(self.complement_measure),
            "tail": str(self.tail),
            "measure_lower": str(self.measure_lower),
            "measure_upper": str(self.measure_upper),
        }


def dyadic_zero_measure(n_max: int) -> DyadicZeroSet:
    """Merge I_n = ((1/2^n) Z +- 1/2^(2n+2)) n [0, 1] for n <= n_max exactly.

    Measure of Z(phi) n [0, 1] lies between 1 - U - tail and 1 - U, with U the
    merged measure and tail = sum_{n > n_max} 2^-(n+1) = 2^-(n_max+1).
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if 2 * n_max + 2 > 62:
        raise ValueError("n_max too large for 64-bit numerators")
    D = 1 << (2 * n_max + 2)
    starts, ends = [], []
    for n in range(1, n_max + 1):
        centre = np.arange(0, (1 << n) + 1, dtype=np.int64) << (n_max + 2 + n_max - n)  # k / 2^n over D
        half = np.int64(1) << (2 * n_max - 2 * n)  # 1 / 2^(2n+2) over D
        starts.append(np.clip(centre - half, 0, D))
        ends.append(np.clip(centre + half, 0, D))
    s = np.concatenate(starts)
    e = np.concatenate(ends)
    order = np.lexsort((e, s))
    s, e = s[order], e[order]
    # open intervals merge only when they overlap
    reach = np.maximum.accumulate(e)
    new = np.ones(s.size, bool)
    new[1:] = s[1:] >= reach[:-1]
    group = np.cumsum(new) - 1
    ms = s[new]
    me = np.zeros(ms.size, dtype=np.int64)
    np.maximum.at(me, group, e)
    U = Fraction(int((me - ms).sum()), D)
    tail = Fraction(1, 1 << (n_max + 1))
    return DyadicZeroSet(
        n_max=n_max,
        denominator=D,
        starts=ms,
        ends=me,
        complement_measure=U,
        tail=tail,
        measure_lower=1 - U - tail,
        measure_upper=1 - U,
    )


@dataclass
class WienerConstruction:
    s: np.ndarray
    phi_hat: np.ndarray
    q: np.ndarray
    phi: np.ndarray
    zeros: DyadicZeroSet
    model: WienerPhi

    def __iter__(self):
        return iter((self.phi_hat, self.phi, self.zeros))


def wiener_construction(n_max: int, grid_1d: Grid1D, phi_grid: Grid1D | None = None) -> WienerConstruction:
    """Partial sums of the dyadic construction, sampled, with exact zero-set bookkeeping.

    ``grid_1d`` samples phi^ and must resolve the narrowest support, i.e. have
    step below 2^-(2 n_max + 2).  phi is smooth on scale 1 and is sampled on
    ``phi_grid`` (default: ``grid_1d``).
    """
    model = WienerPhi(int(n_max))
    need = 2.0 ** -(2 * model.n_max + 2)
    if not grid_1d.step < need:
        raise ValueError(f"grid step {grid_1d.step:.3g} does not resolve supports of width {2 * need:.3g}")
    s = grid_1d.points
    qg = grid_1d if phi_grid is None else phi_grid
    q = qg.points
    phi = model.phi(q)
    if phi.min() < -1e-12:
        raise ArithmeticError(f"phi went negative ({phi.min():.3g})")
    return WienerConstruction(s, model.phi_hat(s), q, phi, dyadic_zero_measure(model.n_max), model)


# --------------------------------------------------------------------------
# T2 = f * T0 with f(q, p) = phi(q) exp(-p^2)


@dataclass(frozen=True)
class StripGenerator:
    """Exact transform of f * T0 for f(q, p) = phi(q) e^{-p^2}, unit integral.

    The symplectic transform sends phi's variable to the momentum slot:
    f^(q, p) = e^{-q^2/4} phi^(-p) / phi^(0), so zeros are bands in p.
    """

    phi: WienerPhi
    T0: np.ndarray = field(repr=False)
    trace_norm: float = 1.0

    def weyl_transform(self, q, p) -> np.ndarray:
        q, p = np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float))
        fhat = np.exp(-(q**2) / 4) * self.phi.phi_hat(-p) / self.phi.phi_hat_zero
        return fhat * weyl_transform_at(self.T0, q, p)


@dataclass
class T2Construction:
    """``rho``: the Fock matrix of f * T0 from the grid Riemann sum, trace one.

    ``f`` is the sampled function that went into it and ``exact`` the
    untruncated transform used for zero-set work.
    """

    rho: np.ndarray
    f: PSFunction
    exact: StripGenerator
    trace_before: float

    def exact_table(self, grid: PSGrid) -> WeylTransformTable:
        return transform_table(self.exact, grid)

    def two_path(self, grid: PSGrid | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(T2)^ from the matrix and (f^ T0^) from the sampled f, both on the grid."""
        grid = self.f.grid if grid is None else grid
        Q, P = grid.mesh()
        lhs = weyl_transform_at(self.rho, Q, P)
        rhs = symplectic_fourier(self.f).values * weyl_transform_at(self.exact.T0, Q, P) / self.trace_before
        return lhs, rhs


def build_T2(phi: WienerPhi, T0, grid: PSGrid, cutoff: int = 128) -> T2Construction:
    """T2 = f * T0 with f(q, p) = phi(q) e^{-p^2}, normalized to unit integral.

    The matrix is a positive combination of translates of T0, so it is a
    density operator whatever the truncation; the renormalization absorbs
    the part of f cut off by the grid and the Fock truncation.
    """
    T0 = check_density(T0)
    Q, P = grid.mesh()
    phiq = phi.phi(grid.q)
    if phiq.min() < -1e-12:
        raise ValueError("phi must be nonnegative")
    vals = np.clip(phiq, 0.0, None)[:, None] * np.exp(-(P**2))
    f = PSFunction(grid, vals)
    total = math.fsum(vals.ravel()) * grid.weight
    f = PSFunction(grid, vals / total)
    rho = convolve_fn_op(f, T0, cutoff=cutoff)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    rho = rho / tr
    return T2Construction(rho, f, StripGenerator(phi, check_operator(T0)), tr)
