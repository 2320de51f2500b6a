"""Bilinear symbols on the frequency grid.

The cone symbol chi_{xi1 < xi2 < n} is split as m' + m'' + m''' where

* m' is a Whitney partition of chi_{xi1 < xi2} (shifted dyadic cubes in the
  plane xi1 + xi2 + xi3 = 0) coupled to an averaged representation of the
  cutoff at xi1 + xi2 < 2n,
* m'' is a double average of cutoffs in xi1 and xi2 restricted to pairs of
  intervals with |omega'| <= |omega|,
* m''' is the exact remainder.

The translation/dilation average that turns sums of bumps into a sharp
cutoff is computed per dyadic scale: for a fixed dilation phase the cell of
width w containing the cutoff is translated over a full period, so the
cutoff's relative position u in the cell is sampled on midpoint nodes.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .budgets import ConfigurationError
from .grid import frequencies

SINGULAR_SETS = ("line xi1=xi2", "line xi2=N", "vertex (N,N)", "none")
SHIFTS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))
# the cube bumps are 1 on |t| <= CUBE_FLAT (t in side units) and vanish at 0.4
CUBE_FLAT = 0.3
# (c1, c2) in c1 diam(Q) <= dist(Q, singular line) <= c2 diam(Q); a small ratio keeps
# the cube-scale transitions of m' resolved on grids with N <= 256
WHITNEY_CONSTANTS = (0.5, 4)



# ---------------------------------------------------------------- bumps

def smooth_step(t):
    """C-infinity step from 0 (t <= 0) to 1 (t >= 1) built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    s = 1.0 - t
    b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


def plateau(x, inner: float, outer: float):
    """Even bump equal to 1 on |x| <= inner and vanishing for |x| >= outer."""
    return smooth_step((outer - np.abs(np.asarray(x, dtype=float))) / (outer - inner))


def phi_hat(x):
    return plateau(x, 1 / 16, 1 / 8)


def phi_tilde_hat(x):
    return plateau(x, 1 / 8, 1 / 4)


# ---------------------------------------------------------------- Symbol2D

@dataclass(frozen=True)
class Symbol2D:
    """Sampled symbol; values[i1, i2] is m(xi1, xi2) with xi = i - N/2."""

    values: np.ndarray
    singular_set: str = "none"
    cutoff: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("symbol values must be a square array")
        if self.singular_set not in SINGULAR_SETS:
            raise ValueError(f"unknown singular set {self.singular_set!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def at(self, xi1: int, xi2: int) -> complex:
        h = self.n // 2
        return complex(self.values[xi1 + h, xi2 + h])

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def __add__(self, other: Symbol2D) -> Symbol2D:
        return Symbol2D(self.values + other.values, cutoff=self.cutoff)

    def __sub__(self, other: Symbol2D) -> Symbol2D:
        return Symbol2D(self.values - other.values, cutoff=self.cutoff)

    def to_csv(self, path) -> None:
        xi = frequencies(self.n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi1", "xi2", "re", "im"])
            for i, a in enumerate(xi):
                for j, b in enumerate(xi):
                    z = self.values[i, j]
                    w.writerow([int(a), int(b), repr(float(z.real)), repr(float(z.imag))])


def _mesh(n: int):
    xi = frequencies(n)
    return np.meshgrid(xi, xi, indexing="ij")


def cone_indicator(n_grid: int, cutoff: int) -> Symbol2D:
    """chi_{xi1 < xi2 < cutoff}, strict on integers."""
    if not -n_grid // 2 <= cutoff <= n_grid // 2:
        raise ValueError("cutoff outside the frequency range")
    a, b = _mesh(n_grid)
    return Symbol2D(((a < b) & (b < cutoff)).astype(float), "vertex (N,N)", cutoff)


def half_plane_indicator(n_grid: int) -> Symbol2D:
    """chi_{xi1 < xi2}: the bilinear Hilbert transform symbol."""
    a, b = _mesh(n_grid)
    return Symbol2D((a < b).astype(float), "line xi1=xi2")


def cone_count(n_grid: int, cutoff: int) -> int:
    """Number of integer pairs with -N/2 <= xi1 < xi2 < cutoff."""
    m = cutoff + n_grid // 2
    return m * (m - 1) // 2


# ---------------------------------------------------------------- averaged cutoff

@dataclass(frozen=True)
class Quadrature:
    """Midpoint rule for the translation/dilation average.

    eta_steps: translation nodes per cell (relative positions u in [0, 1)).
    k_steps: dilation phases per octave; the integrand is 1-periodic in the
    dilation exponent, so one octave carries the whole k-range.
    """

    eta_steps: int = 128
    k_steps: int = 32

    def __post_init__(self):
        if self.eta_steps < 2 or self.eta_steps % 2 or self.k_steps < 1:
            raise ValueError("eta_steps must be even and >= 2, k_steps >= 1")

    def refined(self) -> Quadrature:
        return Quadrature(2 * self.eta_steps, 2 * self.k_steps)

    def u_nodes(self) -> np.ndarray:
        # right-half nodes only; the left half carries chi_{omega^r}(N) = 0
        u = (np.arange(self.eta_steps) + 0.5) / self.eta_steps
        return u[u >= 0.5]

    def kappa_nodes(self) -> np.ndarray:
        return (np.arange(self.k_steps) + 0.5) / self.k_steps


DEFAULT_QUAD = Quadrature()

# a = 2d/w must lie in (3/8, 13/8) for phi_hat_{omega^l} to see the point
_A_LO, _A_HI = 3 / 8, 13 / 8


def _scale_range(d: np.ndarray):
    lo = np.floor(np.log2(2 * d.min() / _A_HI)) - 1
    hi = np.ceil(np.log2(2 * d.max() / _A_LO)) + 1
    return int(lo), int(hi)


def _cell_terms(d: np.ndarray, quad: Quadrature):
    """Per-node weights for distances d = N - xi > 0.

    Returns (lam, u, w, g) with g[node, point] = phi_hat((xi - c(omega^l))/|omega^l|)
    divided by the node count, where omega is the cell of width w = 2^lam that
    contains N at relative position u.
    """
    d = np.asarray(d, dtype=float)
    u = quad.u_nodes()
    kap = quad.kappa_nodes()
    s_lo, s_hi = _scale_range(d)
    lam = (kap[:, None] + np.arange(s_lo, s_hi + 1)[None, :]).ravel()
    w = 2.0 ** lam
    # nodes: (lam, u) pairs
    lam_n = np.repeat(lam, u.size)
    w_n = np.repeat(w, u.size)
    u_n = np.tile(u, lam.size)
    arg = 2 * u_n[:, None] - 0.5 - 2 * d[None, :] / w_n[:, None]
    g = phi_hat(arg) / (quad.k_steps * quad.eta_steps)
    return lam_n, u_n, w_n, g


@lru_cache(maxsize=16)
def _raw_profile_max(quad: Quadrature, samples: int = 1024) -> float:
    # the raw average is invariant under d -> 2d, so one octave of d suffices
    d = 2.0 ** (np.arange(samples) / samples)
    _, _, _, g = _cell_terms(d, quad)
    return float(g.sum(axis=0).max())


def normalization(quad: Quadrature = DEFAULT_QUAD) -> float:
    """Constant c with c * (raw average) <= 1 everywhere and -> 1 as quad refines."""
    return 1.0 / _raw_profile_max(quad)


def exact_average() -> float:
    """Continuum value of the raw average for xi < N (independent of N - xi)."""
    from scipy.integrate import quad as integrate

    def h(a):
        return integrate(lambda t: float(phi_hat(t - a)), 0.5, 1.5, points=[a - 1 / 8, a + 1 / 8])[0]

    val = integrate(lambda a: h(a) / a, _A_LO, _A_HI, points=[5 / 8, 11 / 8], limit=200)[0]
    return val / (2 * np.log(2))


def averaged_cutoff(cutoff: float, xi, quad: Quadrature = DEFAULT_QUAD) -> np.ndarray:
    """Finite average approximating chi_{xi < cutoff}; exactly 0 for xi >= cutoff."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros(xi.shape)
    d = cutoff - xi
    pos = d > 0
    if pos.any():
        _, _, _, g = _cell_terms(d[pos], quad)
        out[pos] = normalization(quad) * g.sum(axis=0)
    return out


# ---------------------------------------------------------------- Whitney geometry

_LINE = np.array([1.0, 1.0, -2.0])


def _box_line_distance(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Euclidean distance from axis boxes [lo, hi] (rows) to the line R(1, 1, -2)."""
    v = _LINE
    bps = np.sort(np.concatenate([lo / v, hi / v], axis=1), axis=1)
    inf = np.full((lo.shape[0], 1), np.inf)
    left = np.concatenate([-inf, bps], axis=1)
    right = np.concatenate([bps, inf], axis=1)
    # a representative interior point of every piece between breakpoints
    mid = np.where(np.isinf(left), right - 1.0, np.where(np.isinf(right), left + 1.0, 0.5 * (left + right)))

    def active(t):
        x = t[..., None] * v
        below = x < lo[:, None, :]
        above = x > hi[:, None, :]
        bound = np.where(below, lo[:, None, :], np.where(above, hi[:, None, :], 0.0))
        return below | above, bound

    act, bound = active(mid)
    num = (act * v * bound).sum(-1)
    den = (act * v * v).sum(-1)
    tstar = np.where(den > 0, num / np.where(den > 0, den, 1.0), mid)
    tstar = np.clip(tstar, left, right)
    cand = np.concatenate([tstar, bps], axis=1)
    x = cand[..., None] * v
    gap = np.maximum(lo[:, None, :] - x, 0) + np.maximum(x - hi[:, None, :], 0)
    return np.sqrt((gap**2).sum(-1).min(axis=1))


def _box_line_distance_sq_exact(lo, hi) -> Fraction:
    """Exact squared distance for one box with rational corners."""
    v = (1, 1, -2)
    bps = sorted({Fraction(lo[i]) / v[i] for i in range(3)} | {Fraction(hi[i]) / v[i] for i in range(3)})

    def f(t):
        s = Fraction(0)
        for i in range(3):
            x = t * v[i]
            if x < lo[i]:
                s += (lo[i] - x) ** 2
            elif x > hi[i]:
                s += (x - hi[i]) ** 2
        return s

    cands = list(bps)
    edges = [None] + bps + [None]
    for a, b in zip(edges[:-1], edges[1:]):
        m = (a - 1 if b is None else b + 0) if a is None else (a + 1 if b is None else (a + b) / 2)
        num = den = Fraction(0)
        for i in range(3):
            x = m * v[i]
            if x < lo[i]:
                num += v[i] * Fraction(lo[i]); den += v[i] ** 2
            elif x > hi[i]:
                num += v[i] * Fraction(hi[i]); den += v[i] ** 2
        t = num / den if den else m
        if a is not None:
            t = max(t, a)
        if b is not None:
            t = min(t, b)
        cands.append(t)
    return min(f(t) for t in cands)


@dataclass(frozen=True)
class WhitneyCube:
    sigma: tuple
    scale: int
    position: tuple
    constants: tuple = WHITNEY_CONSTANTS

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.scale

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        s = self.side
        sign = 1 if self.scale % 2 == 0 else -1
        out = []
        for k, sg in zip(self.position, self.sigma):
            lo = s * (k + sign * sg)
            out.append((lo, lo + s))
        return out

    def diam_sq(self) -> Fraction:
        return 3 * self.side**2

    def dist_sq(self) -> Fraction:
        b = self.bounds()
        return _box_line_distance_sq_exact([x[0] for x in b], [x[1] for x in b])

    def whitney_ok(self) -> bool:
        c1, c2 = (Fraction(c) for c in self.constants)
        d2, m2 = self.dist_sq(), self.diam_sq()
        return c1 * c1 * m2 <= d2 <= c2 * c2 * m2

    def intersects_plane(self) -> bool:
        b = self.bounds()
        lo = sum(x[0] for x in b)
        hi = sum(x[1] for x in b)
        return lo < 0 < hi

    def bump(self, p) -> np.ndarray:
        """Product bump adapted to (8/10) Q, equal to 1 on (6/10) Q."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        b = self.bounds()
        out = np.ones(p.shape[0])
        s = float(self.side)
        for i in range(3):
            c = float(b[i][0]) + s / 2
            out *= plateau((p[:, i] - c) / s, CUBE_FLAT, 0.4)
        return out

    def factor_bump(self, i: int, x) -> np.ndarray:
        """eta_{Q_i}: equal to 1 on (8/10) Q_i, supported in (9/10) Q_i."""
        b = self.bounds()[i]
        s = float(self.side)
        return plateau((np.asarray(x, dtype=float) - float(b[0]) - s / 2) / s, 0.4, 0.45)

    def as_cube(self):
        from .tiles import ShiftedDyadicCube

        return ShiftedDyadicCube(3, self.scale, tuple(self.position), tuple(self.sigma))


def _plane_points(n_grid: int, upper: bool = True):
    a, b = _mesh(n_grid)
    a = a.ravel()
    b = b.ravel()
    keep = a < b if upper else np.ones_like(a, dtype=bool)
    return np.stack([a[keep], b[keep], -(a[keep] + b[keep])], axis=1).astype(float), keep


def _whitney_records(points: np.ndarray, constants=WHITNEY_CONSTANTS):
    """All (point, cube) incidences with nonzero bump among admissible cubes.

    Returns dict of arrays: point index, psi, cube bounds (lo, hi), sigma index,
    scale, integer position.
    """
    c1, c2 = constants
    if not 0 < c1 < c2:
        raise ConfigurationError(f"Whitney constants need 0 < c1 < c2, got {constants}")
    delta = np.abs(points[:, 0] - points[:, 1]) / np.sqrt(2.0)
    pos = delta > 0
    if not pos.any():
        return None
    dmin, dmax = delta[pos].min(), delta[pos].max()
    j_lo = int(np.floor(np.log2(dmin / (c2 * np.sqrt(3))))) - 1
    j_hi = int(np.ceil(np.log2(dmax / (c1 * np.sqrt(3))))) + 1
    recs = {k: [] for k in ("pt", "psi", "lo", "hi", "sig", "j", "k")}
    idx = np.arange(points.shape[0])
    for si, sig in enumerate(itertools.product(SHIFTS, repeat=3)):
        sig_f = np.array([float(x) for x in sig])
        for j in range(j_lo, j_hi + 1):
            side = 2.0**j
            off = side * (1 if j % 2 == 0 else -1) * sig_f
            k = np.floor((points - off) / side)
            lo = side * k + off
            t = (points - lo) / side - 0.5
            psi = np.prod(plateau(t, CUBE_FLAT, 0.4), axis=1)
            m = (psi > 0) & pos
            if not m.any():
                continue
            lo_m, hi_m = lo[m], lo[m] + side
            dist = _box_line_distance(lo_m, hi_m)
            diam = side * np.sqrt(3)
            ok = (dist >= c1 * diam) & (dist <= c2 * diam)
            # settle near-ties with exact arithmetic
            close = (np.abs(dist - c1 * diam) < 1e-9 * diam) | (np.abs(dist - c2 * diam) < 1e-9 * diam)
            for r in np.flatnonzero(close):
                cube = WhitneyCube(sig, j, tuple(int(x) for x in k[m][r]), constants)
                ok[r] = cube.whitney_ok()
            side_ok = (lo_m[:, 0] + hi_m[:, 0]) < (lo_m[:, 1] + hi_m[:, 1])
            ok &= side_ok
            if not ok.any():
                continue
            recs["pt"].append(idx[m][ok])
            recs["psi"].append(psi[m][ok])
            recs["lo"].append(lo_m[ok])
            recs["hi"].append(hi_m[ok])
            recs["sig"].append(np.full(ok.sum(), si))
            recs["j"].append(np.full(ok.sum(), j))
            recs["k"].append(k[m][ok].astype(np.int64))
    if not recs["pt"]:
        return None
    return {key: np.concatenate(v) for key, v in recs.items()}


def whitney_partition(n_grid: int, constants=WHITNEY_CONSTANTS):
    """Normalized Whitney partition of chi_{xi1 < xi2} on the grid points of the plane.

    Returns (points, records, S) where records carry psi / S as 'phi'.
    Raises ConfigurationError if some point with xi1 < xi2 is covered by no cube.
    """
    pts, _ = _plane_points(n_grid)
    rec = _whitney_records(pts, constants)
    S = np.zeros(pts.shape[0])
    if rec is not None:
        np.add.at(S, rec["pt"], rec["psi"])
    uncovered = np.flatnonzero(S <= 0)
    if uncovered.size:
        p = pts[uncovered[0]]
        raise ConfigurationError(
            f"Whitney constants {constants} leave {uncovered.size} grid points uncovered, "
            f"e.g. (xi1, xi2) = ({int(p[0])}, {int(p[1])}); need c2 / (c1 + 1) >= 2"
        )
    rec["phi"] = rec["psi"] / S[rec["pt"]]
    return pts, rec, S


def whitney_decompose(
    shift: tuple, constants=WHITNEY_CONSTANTS, n_grid: int = 32
) -> list[WhitneyCube]:
    """Admissible cubes of the shifted mesh whose bumps see some grid point with xi1 < xi2."""
    shift = tuple(Fraction(s) for s in shift)
    if any(s not in SHIFTS for s in shift):
        raise ValueError("shift components must be 0, 1/3 or 2/3")
    pts, _ = _plane_points(n_grid)
    rec = _whitney_records(pts, constants)
    si = list(itertools.product(SHIFTS, repeat=3)).index(shift)
    if rec is None:
        return []
    sel = rec["sig"] == si
    keys = sorted({(int(j), tuple(int(x) for x in k)) for j, k in zip(rec["j"][sel], rec["k"][sel])})
    return [WhitneyCube(shift, j, k, tuple(constants)) for j, k in keys]


def whitney_sum(points: np.ndarray, constants=WHITNEY_CONSTANTS) -> np.ndarray:
    """sum over shifts and cubes of the normalized bumps at arbitrary plane points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rec = _whitney_records(pts, constants)
    S = np.zeros(pts.shape[0])
    if rec is None:
        return S
    np.add.at(S, rec["pt"], rec["psi"])
    out = np.zeros(pts.shape[0])
    good = S > 0
    phi = rec["psi"] / np.where(S[rec["pt"]] > 0, S[rec["pt"]], 1.0)
    np.add.at(out, rec["pt"], phi)
    return np.where(good, out, 0.0)


def fourier_factorize(cube: WhitneyCube, lmax: int = 4, samples: int = 24, constants=WHITNEY_CONSTANTS):
    """Fourier coefficients c_l of the normalized bump phi_Q on the cube.

    phi_Q(xi) = sum_l c_l prod_i eta_{Q_i}(xi_i) e(l_i (xi_i - a_i)/|Q|) on (8/10) Q.
    Returns (c with |l|_inf <= lmax, tail = sum_{|l|_inf > lmax} |c_l|, max reconstruction error).
    """
    b = cube.bounds()
    s = float(cube.side)
    grid1 = [float(b[i][0]) + s * (np.arange(samples) + 0.5) / samples for i in range(3)]
    g = np.stack(np.meshgrid(*grid1, indexing="ij"), axis=-1).reshape(-1, 3)
    # phi_Q = psi_Q / S with S summed over every admissible cube of every shift
    psi = cube.bump(g)
    rec = _whitney_records(g, constants)
    S = np.zeros(g.shape[0])
    if rec is not None:
        np.add.at(S, rec["pt"], rec["psi"])
    vals = np.where(S > 0, psi / np.where(S > 0, S, 1.0), 0.0).reshape(samples, samples, samples)
    c = np.fft.fftn(vals) / samples**3
    ls = np.fft.fftfreq(samples, 1 / samples).astype(int)
    L = np.maximum.reduce(np.meshgrid(np.abs(ls), np.abs(ls), np.abs(ls), indexing="ij"))
    keep = L <= lmax
    tail = float(np.abs(c[~keep]).sum())
    recon = np.fft.ifftn(np.where(keep, c, 0)) * samples**3
    err = float(np.abs(recon - vals).max())
    return np.where(keep, c, 0), tail, err


# ---------------------------------------------------------------- m', m'', m'''

_LATTICE = 2.0**40


def _snap(values: np.ndarray) -> np.ndarray:
    # multiples of 2^-40 below 2^12 in modulus add exactly in double precision,
    # so the three symbols sum to the cone indicator bit for bit in any order
    return np.round(np.asarray(values, dtype=float) * _LATTICE) / _LATTICE


def _grid_symbol(n_grid, flat_points_mask, flat_values, tag, cutoff):
    out = np.zeros(n_grid * n_grid)
    out[flat_points_mask] = _snap(flat_values)
    return Symbol2D(out.reshape(n_grid, n_grid), tag, cutoff)


def build_m_prime(n_grid: int, cutoff: int, quad: Quadrature = DEFAULT_QUAD, constants=WHITNEY_CONSTANTS) -> Symbol2D:
    """Whitney pieces of chi_{xi1 < xi2} times the averaged cutoff at xi1 + xi2 < 2n.

    A cube Q and an interval omega contribute together only when -Q3 is
    contained in omega^l (closed-interval containment).
    """
    pts, keep = _plane_points(n_grid)
    _, rec, _ = whitney_partition(n_grid, constants)
    zeta = pts[:, 0] + pts[:, 1]
    dprime = 2 * cutoff - zeta
    c = normalization(quad)
    vals = np.zeros(pts.shape[0])
    order = np.argsort(rec["pt"], kind="stable")
    rpt = rec["pt"][order]
    starts = np.searchsorted(rpt, np.arange(pts.shape[0]))
    ends = np.searchsorted(rpt, np.arange(pts.shape[0]), side="right")
    for dp in np.unique(dprime[dprime > 0]):
        _, u_n, w_n, g = _cell_terms(np.array([dp]), quad)
        g = g[:, 0]
        nz = g > 0
        g, u_n, w_n = g[nz], u_n[nz], w_n[nz]
        lo_l = 2 * cutoff - u_n * w_n
        hi_l = lo_l + w_n / 2
        # phi~hat_{-omega^l}(xi3) = phi~hat((xi3 + c(omega^l)) / |omega^l|)
        cl = lo_l + w_n / 4
        xi3 = dp - 2 * cutoff
        g = g * phi_tilde_hat((xi3 + cl) / (w_n / 2))
        for p in np.flatnonzero(dprime == dp):
            sl = order[starts[p]:ends[p]]
            if sl.size == 0:
                continue
            a3 = rec["lo"][sl, 2]
            b3 = rec["hi"][sl, 2]
            ok = (lo_l[None, :] <= -b3[:, None]) & (hi_l[None, :] >= -a3[:, None])
            vals[p] = c * float(rec["phi"][sl] @ (ok @ g))
    return _grid_symbol(n_grid, keep, vals, "line xi1=xi2", cutoff)


def _lambda_profile(xi: np.ndarray, cutoff: int, quad: Quadrature):
    """X[l, i]: averaged-cutoff mass at xi[i] carried by cells of log-width index l.

    Index l = i_kappa + k_steps * s orders cells by width 2^(kappa + s).
    """
    K = quad.k_steps
    d = cutoff - xi.astype(float)
    pos = d > 0
    if not pos.any():
        return np.zeros((0, xi.size)), 0
    s_lo, s_hi = _scale_range(d[pos])
    nlam = K * (s_hi - s_lo + 1)
    X = np.zeros((nlam, xi.size))
    lam_n, _, _, g = _cell_terms(d[pos], quad)
    # lam = kappa_i + s with kappa_i = (i + 1/2)/K
    lidx = np.rint((lam_n - 0.5 / K) * K).astype(int) - K * s_lo
    np.add.at(X, (lidx[:, None], np.flatnonzero(pos)[None, :]), g)
    return X, s_lo


def build_m_doubleprime(n_grid: int, cutoff: int, quad: Quadrature = DEFAULT_QUAD) -> Symbol2D:
    """Double cutoff average over pairs (omega, omega') with |omega'| <= |omega|.

    Both right halves contain the cutoff, so they always intersect; the
    remaining restriction orders the two widths.
    """
    xi = frequencies(n_grid)
    c = normalization(quad)
    X, s1 = _lambda_profile(xi, cutoff, quad)
    if X.size == 0:
        return Symbol2D(np.zeros((n_grid, n_grid)), "line xi2=N", cutoff)
    # same scale window for both variables
    cumY = np.cumsum(X, axis=0)  # omega' widths up to and including the current one
    vals = _snap(c * c * (X.T @ cumY))
    return Symbol2D(vals, "line xi2=N", cutoff)


def build_m_tripleprime(m_prime: Symbol2D, m_doubleprime: Symbol2D) -> Symbol2D:
    """chi_{xi1 < xi2 < n} - m' - m'' exactly."""
    if m_prime.cutoff != m_doubleprime.cutoff:
        raise ValueError("components built for different cutoffs")
    chi = cone_indicator(m_prime.n, m_prime.cutoff)
    return Symbol2D(chi.values - m_prime.values - m_doubleprime.values, "vertex (N,N)", m_prime.cutoff)


@dataclass(frozen=True)
class SymbolDecomposition:
    chi: Symbol2D
    m_prime: Symbol2D
    m_doubleprime: Symbol2D
    m_tripleprime: Symbol2D
    quad: Quadrature = field(default=DEFAULT_QUAD)


def decompose_cone(n_grid: int, cutoff: int, quad: Quadrature = DEFAULT_QUAD, constants=WHITNEY_CONSTANTS) -> SymbolDecomposition:
    mp = build_m_prime(n_grid, cutoff, quad, constants)
    mpp = build_m_doubleprime(n_grid, cutoff, quad)
    return SymbolDecomposition(cone_indicator(n_grid, cutoff), mp, mpp, build_m_tripleprime(mp, mpp), quad)


def m_prime_regime(n_grid: int, cutoff: int, factor: float = 2**-4) -> np.ndarray:
    """Mask of xi1 < xi2, (xi1 + xi2)/2 < n and |xi1 - xi2| <= factor |(xi1 + xi2)/2 - n|."""
    a, b = _mesh(n_grid)
    near = np.abs(a - b) <= factor * np.abs((a + b) / 2 - cutoff)
    return near & (a < b) & (a + b < 2 * cutoff)


def m_doubleprime_regime(n_grid: int, cutoff: int, factor: float = 2**-4) -> np.ndarray:
    """Mask of xi1 < xi2 < n and |xi2 - n| <= factor |xi1 - n|."""
    a, b = _mesh(n_grid)
    return (np.abs(b - cutoff) <= factor * np.abs(a - cutoff)) & (a < b) & (b < cutoff)


def m_prime_target(n_grid: int, cutoff: int) -> np.ndarray:
    a, b = _mesh(n_grid)
    return ((a < b) & ((a + b) < 2 * cutoff)).astype(float)


# ---------------------------------------------------------------- MMH

@dataclass
class MMHReport:
    center: tuple
    constants: dict  # multi-index -> sup
    per_order: dict  # order -> max over multi-indices of that order
    exclude_radius: float = 0.0


def _central_diff(a: np.ndarray, axis: int) -> np.ndarray:
    sl_hi = [slice(None)] * a.ndim
    sl_lo = [slice(None)] * a.ndim
    sl_hi[axis] = slice(2, None)
    sl_lo[axis] = slice(None, -2)
    return (a[tuple(sl_hi)] - a[tuple(sl_lo)]) / 2


def check_mmh(m: Symbol2D, center=(0, 0), max_order: int = 2, exclude_radius: float = 0.0) -> MMHReport:
    """sup over grid points xi != center of |xi - center|^|alpha| |D^alpha m(xi)|.

    D^alpha is the iterated central difference; only points whose stencil lies
    inside the grid are used (no wrap-around).
    """
    if max_order > 3 or max_order < 0:
        raise ValueError("max_order must be between 0 and 3")
    n = m.n
    h = n // 2
    if not (-h <= center[0] < h and -h <= center[1] < h):
        raise IndexError(f"center {center} outside the frequency grid")
    a, b = _mesh(n)
    r = np.hypot(a - center[0], b - center[1])
    consts = {}
    per_order = {}
    for order in range(max_order + 1):
        best = 0.0
        for a1 in range(order + 1):
            a2 = order - a1
            d = m.values
            for _ in range(a1):
                d = _central_diff(d, 0)
            for _ in range(a2):
                d = _central_diff(d, 1)
            rr = r[a1:n - a1, a2:n - a2]
            mask = rr > max(exclude_radius, 0.0)
            val = float((rr[mask] ** order * np.abs(d[mask])).max()) if mask.any() else 0.0
            consts[(a1, a2)] = val
            best = max(best, val)
        per_order[order] = best
    return MMHReport(tuple(center), consts, per_order, exclude_radius)
