"""Size-splitting decompositions and empirical checks of the summation estimates.

Splits follow the frequency-ordered stopping time: among trees whose own size
exceeds the halved threshold, take the one whose top has the highest
frequency center, then the leftmost, then the smallest. Its maximal tree over
the tiles still available is removed. A member that would break strong
j-disjointness with an earlier tree is removed as a singleton companion tree,
so the selected trees stay pairwise strongly j-disjoint and the remainder
still drops below the threshold.

Estimate checks return LHS, RHS and LHS / RHS against a calibrated budget.
Modified energies of tri-tile sequences are greedy lower bounds, which can only
shrink the RHS, so the measured ratios err on the large side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .budgets import budget
from .forms import DEFAULT_PACKETS, Packets, lambda_doubleprime
from .grid import CutoffFunction, GridFunction, points
from .sizes import (
    DEFAULT_C,
    DEFAULT_DEPTH,
    _check_collection,
    _selection_key,
    _types_except,
    _weights,
    as_halves,
    bitile_ancestors,
    bitile_energy,
    bitile_integral,
    bitile_size,
    modified_energy_j,
    size_j,
    top_set,
)
from .tiles import DESK, BiTile, Dilations, PreconditionError, Tree, in_tree, order_relate
from .wavepackets import PHI, chi_tilde, coefficients, modulated_coefficients


class ParameterError(ValueError):
    """Interpolation exponents outside their admissible range."""


_TOL = 1e-12


@dataclass(frozen=True)
class SplitResult:
    remainder: tuple
    remainder_coeffs: np.ndarray = field(repr=False)
    trees: tuple
    companions: tuple
    n: int
    threshold: float
    remainder_size: float
    counting: float
    counting_ratio: float

    @property
    def all_trees(self) -> tuple:
        return self.trees + self.companions

    @property
    def extracted(self) -> tuple:
        return tuple(p for t in self.all_trees for p in t.members)


def _length(I) -> float:
    return float(I.length)


def _pair_conflict(p, q, I_t, I_s, j: int) -> bool:
    # p in the new tree (top interval I_t), q in an earlier tree (top interval I_s)
    a, b = p.tile(j - 1), q.tile(j - 1)
    if a == b:
        return True
    if a.omega.dilate(2).intersects(b.omega.dilate(2)):
        return p.I.intersects(I_s) or q.I.intersects(I_t)
    return False


def split_by_size(
    collection, coeffs, j: int, n: int, E_ref: float,
    depth: int = DEFAULT_DEPTH, dil: Dilations = DESK,
) -> SplitResult:
    """Split into a remainder with size_j <= 2^(-n-1) E_ref and trees."""
    collection = list(collection)
    coeffs = np.asarray(coeffs, dtype=complex)
    _check_collection(collection, coeffs, j)
    bound = 2.0**-n * E_ref
    s = size_j(collection, coeffs, j, depth, dil).value if collection else 0.0
    if s > bound * (1 + _TOL):
        raise PreconditionError(f"size_{j} = {s} exceeds 2^-n E_ref = {bound}")
    tau = bound / 2
    w = _weights(coeffs)
    avail = np.ones(len(collection), dtype=bool)
    trees: list[Tree] = []
    comps: list[Tree] = []
    if collection:
        ts = top_set(collection, _types_except(j), depth, dil)
        order = sorted(range(len(ts.tops)), key=lambda k: _selection_key(ts.tops[k][1]))
        while True:
            pick = None
            for k in order:
                mask = ts.members[k] & avail
                if mask.any() and math.fsum(w[mask]) > tau**2 * ts.lengths[k]:
                    pick = k
                    break
            if pick is None:
                break
            i, top = ts.tops[pick]
            keep, moved = [], []
            for a in np.flatnonzero(ts.members[pick] & avail):
                p = collection[a]
                bad = any(_pair_conflict(p, q, top.I, t.I_T, j) for t in trees for q in t.members)
                (moved if bad else keep).append(p)
            avail &= ~ts.members[pick]
            if keep:
                trees.append(Tree(top, tuple(keep), i))
            comps.extend(Tree(p.tile(i - 1), (p,), i) for p in moved)
    rem = [p for p, b in zip(collection, avail) if b]
    rc = coeffs[avail]
    rs = size_j(rem, rc, j, depth, dil).value if rem else 0.0
    count = math.fsum(_length(t.I_T) for t in trees + comps)
    return SplitResult(tuple(rem), rc, tuple(trees), tuple(comps), n, tau, rs, count, count / 4.0**n)


@dataclass(frozen=True)
class Level:
    n: int
    members: tuple
    cover: tuple
    size: float
    counting: float
    counting_ratio: float


@dataclass(frozen=True)
class Partition:
    levels: tuple
    energy: float
    size: float

    @property
    def max_counting_ratio(self) -> float:
        return max((lv.counting_ratio for lv in self.levels), default=0.0)


def partition_levels(
    collection, coeffs, j: int, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK, max_levels: int = 200
) -> Partition:
    """Q = union of Q_n with size_j(Q_n) <= min(2^-n E, size_j(Q)), each covered by trees."""
    collection = list(collection)
    coeffs = np.asarray(coeffs, dtype=complex)
    _check_collection(collection, coeffs, j)
    if not collection:
        return Partition((), 0.0, 0.0)
    E = modified_energy_j(collection, coeffs, j, depth, dil).value
    S = size_j(collection, coeffs, j, depth, dil).value
    index = {p: a for a, p in enumerate(collection)}
    levels = []
    rem, rc = collection, coeffs
    if S > 0 and E > 0:
        n = math.floor(math.log2(E / S))
        for _ in range(max_levels):
            if not np.any(_weights(rc)):
                break
            res = split_by_size(rem, rc, j, n, E, depth, dil)
            got = res.extracted
            if got:
                ga = [index[p] for p in got]
                sz = size_j(got, coeffs[ga], j, depth, dil).value
                levels.append(Level(n, got, res.all_trees, sz, res.counting, res.counting_ratio))
            rem, rc = list(res.remainder), res.remainder_coeffs
            n += 1
        else:
            raise RuntimeError("partition did not terminate")
    if rem:
        # zero coefficients: one level of singleton trees with size 0
        n = levels[-1].n + 1 if levels else 0
        cover = tuple(Tree(p.tile(_types_except(j)[0] - 1), (p,), _types_except(j)[0]) for p in rem)
        c = math.fsum(_length(p.I) for p in rem)
        levels.append(Level(n, tuple(rem), cover, 0.0, c, c / 4.0**n))
    return Partition(tuple(levels), E, S)


# ---------------------------------------------------------------- bi-tile splits

def _bitiles_disjoint(a: BiTile, b: BiTile) -> bool:
    return not (a.I0.intersects(b.I0) and a.omega0.intersects(b.omega0))


def _bitile_key(p: BiTile):
    lo, hi = p.omega_float(0)
    a, b = p.I_float()
    return (-(lo + hi) / 2, a, b - a)


def split_bitiles(
    collection, G: GridFunction, cutoff: CutoffFunction, n: int, E_ref: float, mode: str = "full",
    ambient_depth: int = DEFAULT_DEPTH, C: float = DEFAULT_C,
) -> SplitResult:
    """Split a bi-tile collection so the remainder has size <= 2^(-n-1) E_ref.

    Bi-tile size only sees ancestors, so every tile below a bad ancestor P' must
    go; they are grouped into classical trees under the bad tops, taken in the
    selection order.
    """
    collection = list(collection)
    if mode == "easy":
        for a in range(len(collection)):
            for b in range(a):
                if not _bitiles_disjoint(collection[a], collection[b]):
                    raise PreconditionError("the easy size needs pairwise disjoint bi-tiles")
    depth = ambient_depth if mode == "full" else 0
    bound = 2.0**-n * E_ref
    s = bitile_size(collection, G, cutoff, mode, ambient_depth, C).value if collection else 0.0
    if s > bound * (1 + _TOL):
        raise PreconditionError(f"bi-tile size {s} exceeds 2^-n E_ref = {bound}")
    tau = bound / 2
    cache: dict = {}

    def value(q):
        if q not in cache:
            lo, hi = q.I_float()
            cache[q] = bitile_integral(G, cutoff, q, C) / (hi - lo)
        return cache[q]

    bad = []
    for p in collection:
        for q in bitile_ancestors(p, depth):
            if q not in bad and value(q) > tau:
                bad.append(q)
    bad.sort(key=_bitile_key)
    avail = np.ones(len(collection), dtype=bool)
    trees = []
    for top in bad:
        mem = [a for a in np.flatnonzero(avail) if order_relate(collection[a], top, "<=c")]
        if mem:
            avail[mem] = False
            trees.append(Tree(top, tuple(collection[a] for a in mem), 0, "classical"))
    rem = [p for p, b in zip(collection, avail) if b]
    rs = bitile_size(rem, G, cutoff, mode, ambient_depth, C).value if rem else 0.0
    count = math.fsum(q.I_float()[1] - q.I_float()[0] for q in (t.top for t in trees))
    return SplitResult(tuple(rem), np.zeros(0), tuple(trees), (), n, tau, rs, count, count / 2.0**n)


def partition_bitile_levels(
    collection, G: GridFunction, cutoff: CutoffFunction, mode: str = "full",
    ambient_depth: int = DEFAULT_DEPTH, C: float = DEFAULT_C, max_levels: int = 200,
) -> Partition:
    """Bi-tile analogue of partition_levels, with counting ratios Sigma |I_T| / 2^n."""
    collection = list(collection)
    if not collection:
        return Partition((), 0.0, 0.0)
    E = bitile_energy(collection, G, cutoff, "modified", ambient_depth, C).value
    S = bitile_size(collection, G, cutoff, mode, ambient_depth, C).value
    levels = []
    rem = collection
    if S > 0 and E > 0:
        n = math.floor(math.log2(E / S))
        for _ in range(max_levels):
            if not rem or bitile_size(rem, G, cutoff, mode, ambient_depth, C).value == 0:
                break
            res = split_bitiles(rem, G, cutoff, n, E, mode, ambient_depth, C)
            got = res.extracted
            if got:
                sz = bitile_size(got, G, cutoff, mode, ambient_depth, C).value
                levels.append(Level(n, got, res.trees, sz, res.counting, res.counting_ratio))
            rem = list(res.remainder)
            n += 1
        else:
            raise RuntimeError("partition did not terminate")
    if rem:
        n = levels[-1].n + 1 if levels else 0
        cover = tuple(Tree(p, (p,), 0, "classical") for p in rem)
        c = math.fsum(p.I_float()[1] - p.I_float()[0] for p in rem)
        levels.append(Level(n, tuple(rem), cover, 0.0, c, c / 2.0**n))
    return Partition(tuple(levels), E, S)


# ---------------------------------------------------------------- estimate checks

def _chi_avg(E: np.ndarray, lo: float, hi: float) -> float:
    """|I|^-1 int_E chi~_I."""
    n = E.shape[0]
    return float(np.sum(E * chi_tilde(points(n), (lo + hi) / 2, hi - lo)) / n) / (hi - lo)


def _bracket(E1: np.ndarray, Q, eps: float, alpha: float) -> float:
    sup = max((_chi_avg(E1, *q.I_float()) for q in Q), default=0.0)
    return sup ** (1 - eps) + float(np.mean(E1)) ** alpha


def _ratio(lhs: float, rhs: float, tol: float = 1e-12) -> tuple:
    if rhs > 0:
        return lhs / rhs, False
    return (0.0, False) if lhs <= tol else (math.inf, True)


def tree_estimate_check(
    T, P, f1: GridFunction, f2: GridFunction, f3: GridFunction, cutoff: CutoffFunction, E1: np.ndarray,
    eps: float = 0.5, alpha: float = 0.5, packets: Packets = DEFAULT_PACKETS, easy: bool = False,
    depth: int = DEFAULT_DEPTH, C: float = DEFAULT_C, budget_value: float | None = None,
) -> dict:
    """|Lambda''_{P,T}| against size_1 size^(1-eps) |I_T| [sup (int_E1 chi~ / |I|)^(1-eps) + |E1|^alpha]."""
    if not 0 < alpha < 1 - eps:
        raise ParameterError("need 0 < alpha < 1 - eps")
    members = list(T.members)
    if not members:
        return {"kind": "tree-estimate", "lhs": 0.0, "rhs": 0.0, "ratio": 0.0, "anomaly": False,
                "budget": budget_value, "within_budget": True}
    lhs = abs(lambda_doubleprime(P, members, f1, f2, f3, cutoff, packets))
    a = coefficients(f2, members, 1, packets.q[0]).values
    s1 = size_j(as_halves(members), a, 1, depth).value
    s2 = bitile_size(members, f3, cutoff, "easy" if easy else "full", depth, C).value
    lo, hi = (T.top.I_float() if isinstance(T.top, BiTile) else (float(T.I_T.lo), float(T.I_T.hi)))
    rhs = s1 * s2 ** (1 - eps) * (hi - lo) * _bracket(E1, members, eps, alpha)
    ratio, anomaly = _ratio(lhs, rhs)
    b = budget("tree-estimate") if budget_value is None else budget_value
    return {"kind": "tree-estimate", "lhs": lhs, "rhs": rhs, "ratio": ratio, "anomaly": anomaly,
            "budget": b, "within_budget": ratio <= b}


ABSTRACT_KINDS = ("trilinear", "bilinear", "eps-bilinear", "biparameter")


def _check_thetas(kind: str, theta, eps: float) -> tuple:
    t = tuple(float(x) for x in theta)
    close = lambda x, y: abs(x - y) <= 1e-12  # noqa: E731
    if kind == "trilinear":
        ok = len(t) == 3 and all(0 <= x < 1 for x in t) and close(sum(t), 1)
    elif kind == "bilinear":
        ok = len(t) == 2 and 0 <= t[0] < 1 and 0 < t[1] <= 1 and close(t[0] + 2 * t[1], 1)
    elif kind == "eps-bilinear":
        ok = len(t) == 2 and 0 < t[0] < 1 and 0 < t[1] < 1 - eps and close(t[0] + 2 * t[1], 1 - 2 * eps)
    else:
        ok = len(t) == 2 and all(0 <= x < 1 for x in t) and close(sum(t), 1)
    if not ok:
        raise ParameterError(f"theta {theta} violates the constraints for {kind}")
    return t


def weak_l1_disjoint(values: np.ndarray, intervals) -> float:
    """sup over disjoint sub-families D of ||sum_D v_P chi_{I_P}||_{1,inf} for dyadic I_P.

    For each level v the best D covers the union of {I_P : v_P >= v}, so the
    supremum is max_v v |union|.
    """
    best = 0.0
    for v in sorted(set(float(x) for x in values if x > 0)):
        keep = [I for x, I in zip(values, intervals) if x >= v]
        # maximal dyadic intervals are disjoint and cover the union
        tops = [I for I in keep if not any(J != I and J.contains(I) for J in keep)]
        best = max(best, v * math.fsum(float(I.length) for I in set(tops)))
    return best


def double_tilde_energy(members, f: GridFunction, C: float = DEFAULT_C) -> float:
    x = points(f.n)
    vals, ivs = [], []
    for p in members:
        lo, hi = p.I_float()
        v = float(np.sum(np.abs(f.samples) * chi_tilde(x, (lo + hi) / 2, hi - lo) ** C) / f.n) / (hi - lo)
        vals.append(v)
        ivs.append(p.I0)
    return weak_l1_disjoint(np.array(vals), ivs)


def abstract_estimate_check(kind: str, fixture: dict, thetas, budget_value: float | None = None) -> dict:
    """Model sum against the size/energy product, one ratio per theta point."""
    if kind not in ABSTRACT_KINDS:
        raise ValueError(f"unknown estimate kind {kind!r}")
    fx = fixture
    eps = float(fx.get("eps", 0.0))
    thetas = [_check_thetas(kind, t, eps) for t in thetas]
    depth = fx.get("depth", DEFAULT_DEPTH)
    family = fx.get("family", PHI)
    C = fx.get("C", DEFAULT_C)
    if kind == "trilinear":
        Q = list(fx["tritiles"])
        if "coeffs" in fx:
            a = [np.asarray(c, dtype=complex) for c in fx["coeffs"]]
        else:
            a = [coefficients(f, Q, j + 1, family).values for j, f in enumerate(fx["f"])]
        lhs = abs(complex(np.sum([2.0 ** (q.m / 2) * a[0][k] * a[1][k] * a[2][k] for k, q in enumerate(Q)])))
        S = [size_j(Q, a[j], j + 1, depth).value for j in range(3)] if Q else [0.0] * 3
        E = [modified_energy_j(Q, a[j], j + 1, depth).value for j in range(3)] if Q else [0.0] * 3

        def rhs_of(t):
            return math.prod(S[j] ** t[j] * E[j] ** (1 - t[j]) for j in range(3))
        parts = {"size": S, "energy": E}
    elif kind in ("bilinear", "eps-bilinear"):
        Q = list(fx["bitiles"])
        G = fx["G"] if kind == "bilinear" else fx["f3"]
        fa = fx["f1"] if kind == "bilinear" else fx["f2"]
        cutoff = fx["cutoff"]
        easy = bool(fx.get("easy", False))
        a = coefficients(fa, Q, 1, family).values
        H = as_halves(Q)
        s1 = size_j(H, a, 1, depth).value if Q else 0.0
        e1 = modified_energy_j(H, a, 1, depth).value if Q else 0.0
        s2 = bitile_size(Q, G, cutoff, "easy" if easy else "full", depth, C).value if Q else 0.0
        e2 = bitile_energy(Q, G, cutoff, "modified", depth, C).value if Q else 0.0
        parts = {"size": [s1, s2], "energy": [e1, e2]}
        if kind == "bilinear":
            b = modulated_coefficients(G, cutoff, Q, family).values
            lhs = abs(complex(np.sum(a * b))) if Q else 0.0

            def rhs_of(t):
                return s1 ** t[0] * s2 ** t[1] * e1 ** (1 - t[0]) * e2 ** (1 - t[1])
        else:
            alpha = float(fx.get("alpha", 0.5 * (1 - eps)))
            if not 0 < alpha < 1 - eps:
                raise ParameterError("need 0 < alpha < 1 - eps")
            pk = fx.get("packets", DEFAULT_PACKETS)
            lhs = abs(lambda_doubleprime(fx["P"], Q, fx["f1"], fa, G, cutoff, pk)) if Q else 0.0
            br = _bracket(fx["E1"], Q, eps, alpha)
            parts["bracket"] = br

            def rhs_of(t):
                return s1 ** t[0] * s2 ** t[1] * e1 ** (1 - t[0]) * e2 ** (1 - eps - t[1]) * br
    else:
        T = fx["tree"]
        members = list(T.members)
        if any(not in_tree(p, T.top, 2, "classical") for p in members):
            raise PreconditionError("biparameter needs a 2-tree of bi-tiles")
        f, g = fx["f"], fx["g"]
        af = coefficients(f, members, 1, family).values
        ag = coefficients(g, members, 1, family).values
        lhs = math.fsum(np.abs(af * ag))
        H = as_halves(members)
        sf = size_j(H, af, 1, depth).value if members else 0.0
        sg = size_j(H, ag, 1, depth).value if members else 0.0
        ef = double_tilde_energy(members, f, C)
        eg = double_tilde_energy(members, g, C)
        parts = {"size": [sf, sg], "energy": [ef, eg]}

        def rhs_of(t):
            return sf ** (1 - t[0]) * sg ** (1 - t[1]) * ef ** t[0] * eg ** t[1]
    pts = []
    for t in thetas:
        rhs = rhs_of(t)
        r, anomaly = _ratio(lhs, rhs)
        pts.append({"theta": list(t), "lhs": lhs, "rhs": rhs, "ratio": r, "anomaly": anomaly})
    mx = max((p["ratio"] for p in pts), default=0.0)
    b = budget(kind) if budget_value is None else budget_value
    return {"kind": kind, "points": pts, "max_ratio": mx, "parts": parts, "budget": b, "within_budget": mx <= b}
