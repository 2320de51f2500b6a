"""Sizes and energies of coefficient sequences on tri-tiles and bi-tiles.

Tri-tile functionals take a collection, one complex coefficient per tri-tile
(the number attached to its j-th tile) and j. Tree suprema run over a finite
top-set: every tile of the collection and its grid ancestors up to `depth`
scales. For a fixed top the maximal tree dominates every sub-collection, so
sizes are exact over that top-set.

Energies are maximum-weight antichains: two area-one tiles of one dyadic grid
intersect exactly when they are comparable, so pairwise disjoint families are
antichains of the tile order. The antichain is read off a minimum cut of the
split bipartite graph (weighted Dilworth), with weights scaled to exact
integers so the cut is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .budgets import ConfigurationError, budget
from .grid import CutoffFunction, GridFunction, points
from .tiles import (
    DESK,
    BiTile,
    Dilations,
    PreconditionError,
    Tile,
    Tree,
    order_relate,
    strongly_disjoint,
)
from .wavepackets import PHI, chi_tilde, coefficients, cutoff_mask

DEFAULT_DEPTH = 3
DEFAULT_C = 4


@dataclass(frozen=True)
class SizeEnergyReport:
    functional: str
    value: float
    witness: object = None
    method: str = "exact"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"functional": self.functional, "value": self.value, "witness": _jsonable(self.witness),
                "method": self.method, **{k: _jsonable(v) for k, v in self.extra.items()}}


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (int, float, str, bool)) or x is None:
        return x
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    return repr(x)


def _weights(coeffs) -> np.ndarray:
    return np.abs(np.asarray(coeffs, dtype=complex)) ** 2


# ---------------------------------------------------------------- antichains

def _exact_ints(weights) -> list[int]:
    fr = [Fraction(float(w)) for w in weights]
    den = max((f.denominator for f in fr), default=1)
    return [int(f * den) for f in fr]


def max_weight_antichain(weights, below) -> list[int]:
    """Indices of a maximum-weight antichain; below(a, b) is a strict partial order on indices."""
    n = len(weights)
    ints = _exact_ints(weights)
    g = nx.DiGraph()
    g.add_node("s")
    g.add_node("t")
    for a in range(n):
        if ints[a] > 0:
            g.add_edge("s", ("L", a), capacity=ints[a])
            g.add_edge(("R", a), "t", capacity=ints[a])
    for a in range(n):
        if ints[a] == 0:
            continue
        for b in range(n):
            if a != b and ints[b] > 0 and below(a, b):
                g.add_edge(("L", a), ("R", b))  # no capacity attribute: infinite
    _, (S, _) = nx.minimum_cut(g, "s", "t")
    return [a for a in range(n) if ints[a] > 0 and ("L", a) in S and ("R", a) not in S]


def _tile_below(u: Tile, v: Tile) -> bool:
    return v.I.contains(u.I) and u.omega.contains(v.omega)


def _strict(items, le):
    # strict order with equal items broken by index
    def below(a, b):
        if items[a] == items[b]:
            return a < b
        return le(items[a], items[b])
    return below


# ---------------------------------------------------------------- top-sets and trees

def ancestor_tiles(tile: Tile, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK) -> list[Tile]:
    """Tiles T with tile <=r T and |I_T| up to 2^depth |I_tile|."""
    out = [tile]
    c = tile.omega.center
    for d in range(1, depth + 1):
        m = tile.m - d
        if m < 0:
            break
        kx = tile.kx >> d
        L = Fraction(2) ** m
        off = (1 if m % 2 == 0 else -1) * tile.shift
        reach = (3 * tile.omega.length - 3 * L) / 2 + L
        k0 = math.floor((c - reach) / L - off) - 1
        k1 = math.ceil((c + reach) / L - off) + 1
        for k in range(k0, k1 + 1):
            t = Tile(m, kx, k, tile.shift)
            if order_relate(tile, t, "<r", dil):
                out.append(t)
    return out


@dataclass(frozen=True)
class TopSet:
    """Candidate tops (type i, top tile) with the membership matrix of their maximal trees."""

    tops: tuple
    members: np.ndarray  # bool [n_tops, n_tiles]
    lengths: np.ndarray  # |I_T| per top

    def tree(self, k: int, collection) -> Tree:
        i, top = self.tops[k]
        return Tree(top, tuple(p for p, b in zip(collection, self.members[k]) if b), i)


def top_set(collection, types, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK) -> TopSet:
    tops = []
    seen = set()
    for i in types:
        for p in collection:
            for t in ancestor_tiles(p.tile(i - 1), depth, dil):
                if (i, t) not in seen:
                    seen.add((i, t))
                    tops.append((i, t))
    mem = np.array(
        [[order_relate(p.tile(i - 1), t, "<=r", dil) for p in collection] for i, t in tops], dtype=bool
    ).reshape(len(tops), len(collection))
    lengths = np.array([float(t.I.length) for _, t in tops])
    return TopSet(tuple(tops), mem, lengths)


def _types_except(j: int) -> tuple:
    return tuple(i for i in (1, 2, 3) if i != j)


def _check_collection(collection, coeffs, j: int) -> None:
    if len(collection) != len(coeffs):
        raise ValueError("one coefficient per tri-tile")
    if j not in (1, 2, 3):
        raise ValueError("j must be 1, 2 or 3")
    if len({p.sigma[j - 1] for p in collection}) > 1:
        raise PreconditionError("collection mixes grids in component j")


# ---------------------------------------------------------------- tri-tile functionals

def size_j(collection, coeffs, j: int, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK) -> SizeEnergyReport:
    """sup over i-trees (i != j) of (|I_T|^-1 sum_T |a_{P_j}|^2)^(1/2)."""
    collection = list(collection)
    _check_collection(collection, coeffs, j)
    if not collection:
        return SizeEnergyReport(f"size_{j}", 0.0)
    w = _weights(coeffs)
    ts = top_set(collection, _types_except(j), depth, dil)
    sq = np.array([math.fsum(w[row]) for row in ts.members]) / ts.lengths
    k = int(np.argmax(sq))
    tree = ts.tree(k, collection)
    return SizeEnergyReport(f"size_{j}", math.sqrt(sq[k]), tree)


def energy_j(collection, coeffs, j: int) -> SizeEnergyReport:
    """sup over D with pairwise disjoint tiles P_j of (sum_D |a_{P_j}|^2)^(1/2); equal tiles count as overlapping."""
    collection = list(collection)
    _check_collection(collection, coeffs, j)
    if not collection:
        return SizeEnergyReport(f"energy_{j}", 0.0, ())
    w = _weights(coeffs)
    tiles = [p.tile(j - 1) for p in collection]
    idx = sorted(max_weight_antichain(w, _strict(tiles, _tile_below)))
    return SizeEnergyReport(f"energy_{j}", math.sqrt(math.fsum(w[idx])), tuple(collection[a] for a in idx))


def _n_range(w: np.ndarray, lengths_tiles: np.ndarray, tree_sq_max: float) -> range:
    r = np.sqrt(w / lengths_tiles)
    pos = r[r > 0]
    if pos.size == 0 or tree_sq_max <= 0:
        return range(0)
    lo = math.floor(math.log2(pos.min())) - 1
    hi = math.floor(math.log2(math.sqrt(tree_sq_max)))
    return range(lo, hi + 1)


def _tree_ok(mask: np.ndarray, k: int, n: int, w, ts: TopSet) -> bool:
    total = math.fsum(w[mask])
    if total < 4.0**n * ts.lengths[k]:
        return False
    sub = (ts.members & mask).astype(float) @ w / ts.lengths
    return bool(np.all(sub <= 4.0 ** (n + 1) * (1 + 1e-12)))


def _selection_key(top: Tile):
    # highest frequency center first, then leftmost, then smallest scale
    return (-top.omega.center, top.I.lo, top.I.length)


def modified_energy_j(
    collection, coeffs, j: int, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK
) -> SizeEnergyReport:
    """Greedy lower bound for sup_n sup_T 2^n (sum_T |I_T|)^(1/2).

    For each n, maximal trees (restricted to the tiles still available) that meet
    the lower bound and every sub-tree upper bound are taken in the selection
    order, skipping those not strongly j-disjoint from the trees already taken.
    """
    collection = list(collection)
    _check_collection(collection, coeffs, j)
    name = f"modified_energy_{j}"
    if not collection:
        return SizeEnergyReport(name, 0.0, None, "greedy-lower-bound")
    w = _weights(coeffs)
    # candidate trees are i-trees with i != j; sub-tree bounds are checked against trees of every type
    ts = top_set(collection, (1, 2, 3), depth, dil)
    tree_sq = np.array([math.fsum(w[row]) for row in ts.members]) / ts.lengths
    lens = np.array([float(p.I.length) for p in collection])
    cand = [k for k in range(len(ts.tops)) if ts.tops[k][0] != j]
    order = sorted(cand, key=lambda k: _selection_key(ts.tops[k][1]))
    best, wit = 0.0, None
    for n in _n_range(w, lens, float(tree_sq[cand].max())):
        avail = np.ones(len(collection), dtype=bool)
        chosen: list[Tree] = []
        progress = True
        while progress:
            progress = False
            for k in order:
                mask = ts.members[k] & avail
                if not mask.any() or not _tree_ok(mask, k, n, w, ts):
                    continue
                i, top = ts.tops[k]
                t = Tree(top, tuple(p for p, b in zip(collection, mask) if b), i)
                if all(strongly_disjoint(t, s, j)[0] and strongly_disjoint(s, t, j)[0] for s in chosen):
                    chosen.append(t)
                    avail &= ~mask
                    progress = True
                    break
        if chosen:
            v = 2.0**n * math.sqrt(math.fsum(float(t.I_T.length) for t in chosen))
            if v > best:
                best, wit = v, (n, tuple(chosen))
    rep = SizeEnergyReport(name, best, wit, "greedy-lower-bound")
    e = energy_j(collection, coeffs, j).value
    rep.extra["energy"] = e
    rep.extra["dominated"] = best <= e * (1 + 1e-12)
    return rep


def _grid_range(I, n: int) -> slice:
    lo, hi = I.lo * n, I.hi * n
    return slice(math.ceil(lo), math.ceil(hi))


def square_function(tree_members, coeffs_by_tile, n: int) -> np.ndarray:
    """(sum_P |a_P|^2 chi_{I_P} / |I_P|)^(1/2) on the grid."""
    out = np.zeros(n)
    for p, a in zip(tree_members, coeffs_by_tile):
        out[_grid_range(p.I, n)] += abs(a) ** 2 / float(p.I.length)
    return np.sqrt(out)


def _lp_on(values: np.ndarray, n: int, p) -> float:
    if p == "1,inf":
        v = np.sort(values)[::-1]
        return float(np.max(v * np.arange(1, v.size + 1) / n)) if v.size else 0.0
    return float((np.sum(values**p) / n) ** (1 / p))


def size_jn_variant(
    collection, coeffs, j: int, p, n_grid: int = 256, depth: int = DEFAULT_DEPTH, dil: Dilations = DESK
) -> SizeEnergyReport:
    """sup over trees of |I_T|^(-1/p) ||S_T||_{L^p(I_T)}; p = '1,inf' uses |I_T|^-1 times the weak-L^1 quasinorm."""
    if p != "1,inf" and not (isinstance(p, (int, float)) and 1 < p < math.inf):
        raise ValueError("p must lie in (1, inf) or be '1,inf'")
    collection = list(collection)
    _check_collection(collection, coeffs, j)
    name = f"size_{j}_L{p}"
    if not collection:
        return SizeEnergyReport(name, 0.0)
    coeffs = np.asarray(coeffs, dtype=complex)
    ts = top_set(collection, _types_except(j), depth, dil)
    best, wit = 0.0, None
    for k, row in enumerate(ts.members):
        if not row.any():
            continue
        _, top = ts.tops[k]
        S = square_function([q for q, b in zip(collection, row) if b], coeffs[row], n_grid)[_grid_range(top.I, n_grid)]
        L = float(top.I.length)
        v = _lp_on(S, n_grid, p) / (L if p == "1,inf" else L ** (1 / p))
        if v > best:
            best, wit = v, ts.tree(k, collection)
    return SizeEnergyReport(name, best, wit)


# ---------------------------------------------------------------- bi-tile functionals

@dataclass(frozen=True)
class BiTileHalves:
    """A bi-tile of frame (0, 0) read as the tile triple (P_1, P_2, P_2).

    The halves are area-one tiles over I_P, so size_1 and the modified energy of
    a_{P_1} sequences reuse the tri-tile functionals; 2-trees become i-trees
    with i != 1.
    """

    bitile: BiTile

    def __post_init__(self):
        if self.bitile.frame != (0, 0):
            raise PreconditionError("half tiles need a bi-tile of frame (0, 0)")
        if self.bitile.m < 1:
            raise PreconditionError("bi-tile halves need m >= 1")

    @property
    def m(self) -> int:
        return self.bitile.m - 1

    @property
    def sigma(self) -> tuple:
        return (Fraction(0),) * 3

    def tile(self, i: int) -> Tile:
        b = self.bitile
        return Tile(b.m - 1, b.kx, 2 * b.kf + (0 if i == 0 else 1))

    @property
    def I(self):
        return self.tile(0).I


def as_halves(collection) -> list[BiTileHalves]:
    return [BiTileHalves(p) for p in collection]


def bitile_ancestors(p: BiTile, depth: int = DEFAULT_DEPTH) -> list[BiTile]:
    """P' with P <=c P' and |I_{P'}| up to 2^depth |I_P| (spatial intervals stay inside [0, 1))."""
    out = [p]
    for d in range(1, depth + 1):
        m = p.m - d
        if m < 1:
            break
        for r in range(2**d):
            out.append(BiTile(m, p.kx >> d, p.kf * 2**d + r, p.u, p.v))
    return out


def _bitile_below(a: BiTile, b: BiTile) -> bool:
    return b.I0.contains(a.I0) and a.omega0.contains(b.omega0)


def _same_frame(collection) -> None:
    if len({p.frame for p in collection}) > 1:
        raise PreconditionError("bi-tiles from different grids D_{u,v}")


def bitile_integral(G: GridFunction, cutoff: CutoffFunction, p: BiTile, C: float = DEFAULT_C) -> float:
    """int |G| chi_{N(x) in omega_P} chi~_{I_P}^C dx on the grid."""
    lo, hi = p.I_float()
    chi = chi_tilde(points(G.n), (lo + hi) / 2, hi - lo)
    return float(np.sum(np.abs(G.samples) * cutoff_mask(cutoff, p, 0) * chi**C) / G.n)


def _ancestor_pool(collection, depth: int) -> list[BiTile]:
    pool, seen = [], set()
    for p in collection:
        for q in bitile_ancestors(p, depth):
            if q not in seen:
                seen.add(q)
                pool.append(q)
    return pool


def bitile_size(
    collection, G: GridFunction, cutoff: CutoffFunction, mode: str = "full",
    ambient_depth: int = DEFAULT_DEPTH, C: float = DEFAULT_C,
) -> SizeEnergyReport:
    """full: sup over P and ancestors P' of |I_{P'}|^-1 int |G| chi chi~^C; easy: P' = P only."""
    if mode not in ("full", "easy"):
        raise ValueError("mode is 'full' or 'easy'")
    collection = list(collection)
    _same_frame(collection)
    name = "bsize" if mode == "full" else "bsize_e"
    best, wit = 0.0, None
    for p in collection:
        for q in bitile_ancestors(p, ambient_depth if mode == "full" else 0):
            lo, hi = q.I_float()
            v = bitile_integral(G, cutoff, q, C) / (hi - lo)
            if v > best:
                best, wit = v, (p, q)
    return SizeEnergyReport(name, best, wit)


def bitile_energy(
    collection, G: GridFunction, cutoff: CutoffFunction, mode: str = "plain",
    ambient_depth: int = DEFAULT_DEPTH, C: float = DEFAULT_C,
) -> SizeEnergyReport:
    """plain: max over disjoint ancestor sets D of sum_D int |G| chi chi~^C.

    modified: max over n and disjoint D whose members carry at least 2^n |I_{P'}|
    of 2^n sum_D |I_{P'}|; both are exact antichain maximizations.
    """
    if mode not in ("plain", "modified"):
        raise ValueError("mode is 'plain' or 'modified'")
    collection = list(collection)
    _same_frame(collection)
    name = "benergy" if mode == "plain" else "benergy_modified"
    if not collection:
        return SizeEnergyReport(name, 0.0, ())
    pool = _ancestor_pool(collection, ambient_depth)
    vals = np.array([bitile_integral(G, cutoff, q, C) for q in pool])
    below = _strict(pool, _bitile_below)
    if mode == "plain":
        idx = sorted(max_weight_antichain(vals, below))
        return SizeEnergyReport(name, math.fsum(vals[idx]), tuple(pool[a] for a in idx))
    lens = np.array([float(q.I0.length) * 2.0 ** (-float(q.u)) for q in pool])
    ratio = vals / lens
    best, wit = 0.0, None
    for n in sorted({math.floor(math.log2(r)) for r in ratio if r > 0}):
        ok = ratio >= 2.0**n
        sub = [a for a in range(len(pool)) if ok[a]]
        pick = max_weight_antichain(lens[sub], lambda a, b: below(sub[a], sub[b]))
        idx = sorted(sub[a] for a in pick)
        v = 2.0**n * math.fsum(lens[idx])
        if v > best:
            best, wit = v, (n, tuple(pool[a] for a in idx))
    return SizeEnergyReport(name, best, wit, extra={"n": wit[0] if wit else None})


# ---------------------------------------------------------------- lemma checks

LEMMA_KINDS = ("energy-lemma", "size-lemma", "benergy", "bsize", "carleson-energy", "carleson-size", "restriction")

_REQUIRED = {
    "energy-lemma": ("tritiles", "f", "j"),
    "size-lemma": ("tritiles", "f", "E", "j"),
    "benergy": ("bitiles", "f", "cutoff"),
    "bsize": ("bitiles", "f", "E", "cutoff"),
    "carleson-energy": ("tritiles", "bitiles", "f", "E", "cutoff"),
    "carleson-size": ("tritiles", "bitiles", "f", "E", "cutoff"),
    "restriction": ("tree", "bitiles", "f", "E", "cutoff"),
}


def _check_x(f: GridFunction, E: np.ndarray) -> None:
    if np.any(np.abs(f.samples) > E.astype(float) + 1e-12):
        raise PreconditionError("f must satisfy |f| <= chi_E")


def _chi_int(E: np.ndarray, I, M: float) -> float:
    n = E.shape[0]
    lo, L = float(I.lo), float(I.length)
    return float(np.sum(E * chi_tilde(points(n), lo + L / 2, L) ** M) / n)


def estimate_bounds_check(kind: str, fixture: dict, budget_value: float | None = None) -> dict:
    """LHS, RHS and LHS/RHS for one of the tile-norm lemmas; compared with the calibrated budget."""
    if kind not in _REQUIRED:
        raise ValueError(f"unknown estimate kind {kind!r}")
    missing = [k for k in _REQUIRED[kind] if k not in fixture]
    if missing:
        raise ConfigurationError(f"fixture for {kind} lacks {missing}")
    fx = fixture
    family = fx.get("family", PHI)
    depth = fx.get("depth", DEFAULT_DEPTH)
    M = fx.get("M", 4)
    eps = fx.get("eps", 0.5)
    if kind == "energy-lemma":
        Q = list(fx["tritiles"])
        a = coefficients(fx["f"], Q, fx["j"], family).values
        lhs = modified_energy_j(Q, a, fx["j"], depth).value
        rhs = fx["f"].l2()
    elif kind == "size-lemma":
        _check_x(fx["f"], fx["E"])
        Q = list(fx["tritiles"])
        a = coefficients(fx["f"], Q, fx["j"], family).values
        lhs = size_j(Q, a, fx["j"], depth).value
        rhs = max(_chi_int(fx["E"], q.I, M) / float(q.I.length) for q in Q)
    elif kind == "benergy":
        lhs = bitile_energy(fx["bitiles"], fx["f"], fx["cutoff"], "modified", depth).value
        rhs = fx["f"].l1()
    elif kind == "bsize":
        _check_x(fx["f"], fx["E"])
        lhs = bitile_size(fx["bitiles"], fx["f"], fx["cutoff"], "full", depth).value
        rhs = 0.0
        E = fx["E"]
        for p in fx["bitiles"]:
            for q in bitile_ancestors(p, depth):
                lo, hi = q.I_float()
                chi = chi_tilde(points(E.shape[0]), (lo + hi) / 2, hi - lo)
                rhs = max(rhs, float(np.sum(E * chi**M) / E.shape[0]) / (hi - lo))
    else:
        from .forms import Packets, carleson_adjoint, third_coefficients

        _check_x(fx["f"], fx["E"])
        pk = Packets(family, family, (family,) * 3, family)
        if kind == "restriction":
            T = fx["tree"]
            if T.j == 3:
                raise ValueError("the restriction estimate is stated for i-trees with i != 3")
            from .forms import _q3_in_p1

            P_T = [p for p in fx["bitiles"] if any(_q3_in_p1(q, p) for q in T.members)]
            g = carleson_adjoint(P_T, fx["f"], fx["cutoff"], family, family)
            n = g.n
            lo, L = float(T.I_T.lo), float(T.I_T.length)
            chi = chi_tilde(points(n), lo + L / 2, L)
            lhs = float(np.sum(np.abs(g.samples) ** (1 + eps) * chi**M) / n) ** (1 / (1 + eps))
            rhs = _chi_int(fx["E"], T.I_T, 1) ** (1 / (1 + eps))
        else:
            Q = list(fx["tritiles"])
            a3 = third_coefficients(Q, fx["bitiles"], fx["f"], fx["cutoff"], pk)
            if kind == "carleson-energy":
                lhs = modified_energy_j(Q, a3, 3, depth).value
                rhs = float(np.mean(fx["E"])) ** 0.5
            else:
                lhs = size_j(Q, a3, 3, depth).value
                rhs = max((_chi_int(fx["E"], q.I, 1) / float(q.I.length)) ** (1 / (1 + eps)) for q in Q)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    b = budget(kind) if budget_value is None else budget_value
    return {"kind": kind, "lhs": lhs, "rhs": rhs, "ratio": ratio, "budget": b, "within_budget": ratio <= b}
