"""Shifted dyadic meshes, tiles, tri-tiles, bi-tiles, orderings and trees.

Everything here is exact: endpoints are Fractions and all predicates compare
rationals. Intervals are half-open [lo, hi); "intersects" means an overlap of
positive length, so touching intervals are disjoint.

Bi-tiles live on a grid D_{u,v} = 2^u D + v. Two bi-tiles are only compared
when they share (u, v); since x -> 2^u x + v is monotone, their predicates
reduce to the underlying dyadic intervals. The physical endpoints are used
only for point membership, which compares 2^u against rationals exactly.
"""
from __future__ import annotations

import decimal
import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from fractions import Fraction
from typing import Iterable, Sequence

SHIFTS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))


class PreconditionError(ValueError):
    """Input violates a structural assumption; `witness` says where."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def as_shift(s) -> Fraction:
    """Shift component in {0, 1/3, 2/3}; floats are snapped to the nearest third."""
    f = Fraction(s).limit_denominator(3) if isinstance(s, float) else Fraction(s)
    if f not in SHIFTS:
        raise ValueError(f"shift components must be 0, 1/3 or 2/3, got {s}")
    return f


@dataclass(frozen=True)
class Dilations:
    """Dilation constants of the orderings, rank-1 and sparseness conditions."""

    order: Fraction = Fraction(3)
    rank: Fraction = Fraction(8)
    sparse: Fraction = Fraction(8)
    # "scale": the third rank-1 bullet applies when sparse * |I'| < |I|
    # "literal": it applies when |I'| < sparse * |I|
    third_bullet: str = "scale"

    def __post_init__(self):
        for name in ("order", "rank", "sparse"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.third_bullet not in ("scale", "literal"):
            raise ValueError("third_bullet must be 'scale' or 'literal'")


DESK = Dilations()
PROOF = Dilations(3, 10**7, 10**9)


# ---------------------------------------------------------------- intervals

@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @cached_property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @cached_property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def dilate(self, c) -> Interval:
        return _dilate(self, Fraction(c))

    def contains(self, other: Interval) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x) -> bool:
        return self.lo <= x < self.hi

    def intersects(self, other: Interval) -> bool:
        return self.lo < other.hi and other.lo < self.hi

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    @property
    def left(self) -> Interval:
        return Interval(self.lo, self.center)

    @property
    def right(self) -> Interval:
        return Interval(self.center, self.hi)

    def __repr__(self):
        return f"[{self.lo}, {self.hi})"


@lru_cache(maxsize=65536)
def _dilate(iv: Interval, c: Fraction) -> Interval:
    h = c * iv.length / 2
    return Interval(iv.center - h, iv.center + h)


def dyadic(scale: int, k: int, shift=Fraction(0)) -> Interval:
    """2^scale (k + [0, 1) + (-1)^scale shift)."""
    s = Fraction(2) ** scale
    lo = s * (k + (1 if scale % 2 == 0 else -1) * Fraction(shift))
    return Interval(lo, lo + s)


# ---------------------------------------------------------------- cubes

@dataclass(frozen=True)
class ShiftedDyadicCube:
    dim: int
    scale: int
    position: tuple
    shift: tuple

    def __post_init__(self):
        if len(self.position) != self.dim or len(self.shift) != self.dim:
            raise ValueError("position and shift must match the dimension")
        sh = tuple(as_shift(s) for s in self.shift)
        object.__setattr__(self, "shift", sh)
        object.__setattr__(self, "position", tuple(int(k) for k in self.position))

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.scale

    def side_interval(self, i: int) -> Interval:
        return dyadic(self.scale, self.position[i], self.shift[i])

    @property
    def sides(self) -> tuple:
        return tuple(self.side_interval(i) for i in range(self.dim))

    def contains_point(self, p) -> bool:
        return all(s.contains_point(Fraction(x)) for s, x in zip(self.sides, p))

    def parent(self) -> ShiftedDyadicCube:
        """The unique cube one scale up that contains this one."""
        j = self.scale + 1
        s = Fraction(2) ** j
        pos = []
        for i in range(self.dim):
            lo = self.side_interval(i).lo
            off = (1 if j % 2 == 0 else -1) * self.shift[i]
            pos.append(math.floor(lo / s - off))
        cand = ShiftedDyadicCube(self.dim, j, tuple(pos), self.shift)
        if not all(cand.side_interval(i).contains(self.side_interval(i)) for i in range(self.dim)):
            raise ValueError("shifted mesh is not nested here")
        return cand


def mesh_generate(dim: int, shift, scale_range: Iterable[int], extent: Sequence[tuple]) -> list[ShiftedDyadicCube]:
    """All cubes of D^dim_shift with scale in scale_range meeting the box extent."""
    shift = tuple(Fraction(s) for s in shift)
    box = [Interval(lo, hi) for lo, hi in extent]
    out = []
    for j in scale_range:
        s = Fraction(2) ** j
        ranges = []
        for i in range(dim):
            off = (1 if j % 2 == 0 else -1) * shift[i]
            k0 = math.floor(box[i].lo / s - off) - 1
            k1 = math.ceil(box[i].hi / s - off) + 1
            ranges.append([k for k in range(k0, k1 + 1) if dyadic(j, k, shift[i]).intersects(box[i])])
        for pos in itertools.product(*ranges):
            out.append(ShiftedDyadicCube(dim, j, pos, shift))
    return out


def covering_cube(box: Sequence[tuple], ratio: int = 6, factor=Fraction(7, 10)):
    """A shifted dyadic cube Q' with box inside factor * Q' and side <= ratio * longest side.

    Searches every shift and the admissible scales; returns None if none exists.
    """
    box = [Interval(lo, hi) for lo, hi in box]
    dim = len(box)
    ell = max(b.length for b in box)
    j0 = math.floor(math.log2(ell))
    for j in range(j0, j0 + int(math.log2(ratio)) + 2):
        if Fraction(2) ** j > ratio * ell:
            break
        for sh in itertools.product(SHIFTS, repeat=dim):
            pos = []
            for i in range(dim):
                s = Fraction(2) ** j
                off = (1 if j % 2 == 0 else -1) * sh[i]
                pos.append(math.floor(box[i].center / s - off))
            q = ShiftedDyadicCube(dim, j, tuple(pos), sh)
            if all(q.side_interval(i).dilate(factor).contains(box[i]) for i in range(dim)):
                return q
    return None


# ---------------------------------------------------------------- sparseness and rank 1

def _same_shift(items) -> None:
    shifts = {c.shift for c in items}
    if len(shifts) > 1:
        raise ValueError("collection mixes shifts")


def _sparse_pair_ok(q: ShiftedDyadicCube, r: ShiftedDyadicCube, dil: Dilations) -> bool:
    if q == r:
        return True
    if q.side < r.side:
        return dil.sparse * q.side < r.side
    if r.side < q.side:
        return dil.sparse * r.side < q.side
    return any(not a.dilate(dil.sparse).intersects(b.dilate(dil.sparse)) for a, b in zip(q.sides, r.sides))


def is_sparse(cubes: Sequence[ShiftedDyadicCube], dil: Dilations = DESK):
    """(True, None) or (False, violating pair)."""
    _same_shift(cubes)
    for a, b in itertools.combinations(cubes, 2):
        if not _sparse_pair_ok(a, b, dil):
            return False, (a, b)
    return True, None


def sparsify(cubes: Sequence[ShiftedDyadicCube], dil: Dilations = DESK):
    """Split into sparse parts by scale class mod s and position class mod p.

    2^s > sparse separates different scales; p >= sparse separates equal
    scales in some coordinate. Returns (parts, bound) with bound = s * p^dim.
    """
    if not cubes:
        return [], 0
    _same_shift(cubes)
    dim = cubes[0].dim
    s = 1
    while Fraction(2) ** s <= dil.sparse:
        s += 1
    p = math.ceil(dil.sparse)
    groups: dict = {}
    for c in cubes:
        key = (c.scale % s,) + tuple(k % p for k in c.position)
        groups.setdefault(key, []).append(c)
    return [groups[k] for k in sorted(groups)], s * p**dim


def _cube_rank_pair(q: ShiftedDyadicCube, r: ShiftedDyadicCube, dil: Dilations):
    """Rank-1 bullets for the ordered pair (Q = q, Q' = r); returns failing bullet or 0."""
    if q != r and any(a == b for a, b in zip(q.sides, r.sides)):
        return 1
    for j in range(q.dim):
        if q.side_interval(j).dilate(dil.order).contains(r.side_interval(j).dilate(dil.order)):
            for i in range(q.dim):
                if not q.side_interval(i).dilate(dil.rank).contains(r.side_interval(i).dilate(dil.rank)):
                    return 2
            if _third_applies(r.side, q.side, dil):
                for i in range(q.dim):
                    if i != j and q.side_interval(i).dilate(dil.order).intersects(r.side_interval(i).dilate(dil.order)):
                        return 3
    return 0


def _third_applies(small, big, dil: Dilations) -> bool:
    if dil.third_bullet == "scale":
        return dil.sparse * small < big
    return small < dil.sparse * big


def check_rank1(items: Sequence, dil: Dilations = DESK):
    """Rank-1 check for cubes or tri-tiles; (True, None) or (False, (bullet, a, b))."""
    if not items:
        return True, None
    _same_shift(items)
    pair = _cube_rank_pair if isinstance(items[0], ShiftedDyadicCube) else _tritile_rank_pair
    for a in items:
        for b in items:
            bullet = pair(a, b, dil)
            if bullet:
                return False, (bullet, a, b)
    return True, None


def split_rank1(cubes: Sequence[ShiftedDyadicCube], dil: Dilations = DESK):
    """Greedy split into parts that are both sparse and rank 1 (conditions are pairwise)."""
    if not cubes:
        return []
    _same_shift(cubes)
    parts: list[list] = []
    for c in sorted(cubes, key=lambda q: (-q.scale, q.position)):
        for part in parts:
            if all(
                _sparse_pair_ok(c, o, dil) and not _cube_rank_pair(c, o, dil) and not _cube_rank_pair(o, c, dil)
                for o in part
            ):
                part.append(c)
                break
        else:
            parts.append([c])
    return parts


# ---------------------------------------------------------------- tiles

def _spatial(m: int, kx: int) -> Interval:
    # |I| = 2^-m on the unit torus
    return dyadic(-m, kx)


@dataclass(frozen=True)
class Tile:
    """I x omega with I = 2^-m [kx, kx + 1) and omega in D^1_shift of length 2^m."""

    m: int
    kx: int
    kf: int
    shift: Fraction = Fraction(0)

    def __post_init__(self):
        if self.m < 0 or not 0 <= self.kx < 2**self.m:
            raise ValueError("spatial interval must be a dyadic subinterval of [0, 1)")
        object.__setattr__(self, "shift", as_shift(self.shift))

    @cached_property
    def I(self) -> Interval:
        return _spatial(self.m, self.kx)

    @cached_property
    def omega(self) -> Interval:
        return dyadic(self.m, self.kf, self.shift)

    @property
    def area(self) -> Fraction:
        return self.I.length * self.omega.length


@lru_cache(maxsize=1 << 18)
def order_relate(p, q, mode: str, dil: Dilations = DESK) -> bool:
    """Evaluate p REL q for tiles ('<r', '<=r', '~<r', "~<'r") or bi-tiles ('<=c')."""
    if mode == "<=c":
        if not (isinstance(p, BiTile) and isinstance(q, BiTile)):
            raise TypeError("classical ordering compares bi-tiles")
        _same_frame(p, q)
        return q.I0.contains(p.I0) and p.omega0.contains(q.omega0)
    if not (isinstance(p, Tile) and isinstance(q, Tile)):
        raise TypeError("relaxed orderings compare tiles")
    if mode == "<r":
        return q.I.contains(p.I) and p.I != q.I and p.omega.dilate(dil.order).contains(q.omega.dilate(dil.order))
    if mode == "<=r":
        return p == q or order_relate(p, q, "<r", dil)
    if mode == "~<r":
        return q.I.contains(p.I) and p.omega.dilate(dil.rank).contains(q.omega.dilate(dil.rank))
    if mode == "~<'r":
        return order_relate(p, q, "~<r", dil) and not order_relate(p, q, "<=r", dil)
    raise ValueError(f"unknown ordering {mode!r}")


@dataclass(frozen=True)
class TriTile:
    m: int
    kx: int
    kf: tuple
    sigma: tuple = (Fraction(0),) * 3

    def __post_init__(self):
        object.__setattr__(self, "kf", tuple(int(k) for k in self.kf))
        object.__setattr__(self, "sigma", tuple(as_shift(s) for s in self.sigma))
        if len(self.kf) != 3 or len(self.sigma) != 3:
            raise ValueError("tri-tiles carry three frequency positions and shifts")
        self.tile(0)

    @property
    def shift(self) -> tuple:
        return self.sigma

    @cached_property
    def I(self) -> Interval:
        return _spatial(self.m, self.kx)

    def tile(self, i: int) -> Tile:
        return self.tiles[i]

    @cached_property
    def tiles(self) -> tuple:
        return tuple(Tile(self.m, self.kx, self.kf[i], self.sigma[i]) for i in range(3))

    @property
    def Q(self) -> ShiftedDyadicCube:
        return ShiftedDyadicCube(3, self.m, self.kf, self.sigma)


def _tritile_rank_pair(p: TriTile, q: TriTile, dil: Dilations):
    """Bullets for P = p, P' = q."""
    if p != q and any(a == b for a, b in zip(p.tiles, q.tiles)):
        return 1
    for j in range(3):
        if order_relate(q.tile(j), p.tile(j), "<=r", dil):
            for i in range(3):
                if not order_relate(q.tile(i), p.tile(i), "~<r", dil):
                    return 2
            if _third_applies(q.I.length, p.I.length, dil):
                for i in range(3):
                    if i != j and not order_relate(q.tile(i), p.tile(i), "~<'r", dil):
                        return 3
    return 0


def is_sparse_tritiles(tiles: Sequence[TriTile], dil: Dilations = DESK):
    return is_sparse([t.Q for t in tiles], dil)


# ---------------------------------------------------------------- bi-tiles

def _check_u(u: Fraction) -> None:
    if not -1 <= u <= 1:
        raise ValueError("u must lie in [-1, 1]")
    den = u.denominator
    if den & (den - 1) or den > 16:
        raise ValueError("u must be a dyadic rational with denominator at most 16")


def _cmp_pow2(x: Fraction, u: Fraction) -> int:
    """Sign of x - 2^u, exact for dyadic u."""
    if x <= 0:
        return -1
    p, q = u.numerator, u.denominator
    lhs = x**q
    rhs = Fraction(2) ** p
    return (lhs > rhs) - (lhs < rhs)


def _scaled_le(a: Fraction, u: Fraction, x: Fraction) -> bool:
    """2^u * a <= x, exactly."""
    if a == 0:
        return 0 <= x
    if a > 0:
        return _cmp_pow2(x / a, u) >= 0
    return _cmp_pow2(x / a, u) <= 0


@dataclass(frozen=True)
class BiTile:
    """Bi-tile on D_{u,v}: omega = 2^u [kf 2^m, (kf + 1) 2^m) + v, I = 2^-u [kx, kx + 1) 2^(1 - m).

    I0 and omega0 are the underlying dyadic intervals; |I| |omega| = 2.
    """

    m: int
    kx: int
    kf: int
    u: Fraction = Fraction(0)
    v: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "u", Fraction(self.u))
        object.__setattr__(self, "v", Fraction(self.v))
        _check_u(self.u)

    @property
    def frame(self) -> tuple:
        return (self.u, self.v)

    @property
    def I0(self) -> Interval:
        return dyadic(1 - self.m, self.kx)

    @property
    def omega0(self) -> Interval:
        return dyadic(self.m, self.kf)

    def sub_omega0(self, j: int) -> Interval:
        """Underlying omega^l (j = 1) or omega^r (j = 2)."""
        return self.omega0.left if j == 1 else self.omega0.right

    @property
    def exact(self) -> bool:
        return self.u.denominator == 1

    def I_exact(self) -> Interval:
        if not self.exact:
            raise ValueError("physical endpoints are irrational for non-integer u")
        s = Fraction(2) ** (-int(self.u))
        return Interval(self.I0.lo * s, self.I0.hi * s)

    def omega_exact(self, j: int = 0) -> Interval:
        if not self.exact:
            raise ValueError("physical endpoints are irrational for non-integer u")
        w = self.omega0 if j == 0 else self.sub_omega0(j)
        s = Fraction(2) ** int(self.u)
        return Interval(w.lo * s + self.v, w.hi * s + self.v)

    def I_float(self) -> tuple:
        s = 2.0 ** (-float(self.u))
        return float(self.I0.lo) * s, float(self.I0.hi) * s

    def omega_float(self, j: int = 0) -> tuple:
        w = self.omega0 if j == 0 else self.sub_omega0(j)
        s = 2.0 ** float(self.u)
        return float(w.lo) * s + float(self.v), float(w.hi) * s + float(self.v)

    def in_omega(self, xi, j: int = 0) -> bool:
        """Exact test xi in omega (j = 0) or its half j."""
        w = self.omega0 if j == 0 else self.sub_omega0(j)
        x = Fraction(xi) - self.v
        return _scaled_le(w.lo, self.u, x) and not _scaled_le(w.hi, self.u, x)

    def in_I(self, x) -> bool:
        """Exact test x in I (points of the real line, not reduced mod 1)."""
        x = Fraction(x)
        return _scaled_le(self.I0.lo, -self.u, x) and not _scaled_le(self.I0.hi, -self.u, x)

    @property
    def area(self) -> Fraction:
        return self.I0.length * self.omega0.length

    def sub_tile_key(self, j: int) -> tuple:
        return (self.frame, self.m, self.kx, self.kf, j)


def _same_frame(p: BiTile, q: BiTile) -> None:
    if p.frame != q.frame:
        raise ValueError("bi-tiles from different grids D_{u,v}")


# ---------------------------------------------------------------- mixed frames

_PREC = decimal.Context(prec=80)


def _phys_parts(a: Fraction, u: Fraction, v: Fraction) -> tuple:
    """2^u a + v written in the Q-basis 2^(k/16), k = 0..15, as a sorted tuple of (k, coefficient)."""
    whole = math.floor(u)
    k = int((u - whole) * 16)
    parts = {0: Fraction(v)}
    parts[k] = parts.get(k, Fraction(0)) + Fraction(a) * Fraction(2) ** whole
    return tuple(sorted((kk, c) for kk, c in parts.items() if c != 0))


def _phys_decimal(parts: tuple) -> decimal.Decimal:
    two = decimal.Decimal(2)
    total = decimal.Decimal(0)
    for k, c in parts:
        r = _PREC.divide(decimal.Decimal(c.numerator), decimal.Decimal(c.denominator))
        total = _PREC.add(total, _PREC.multiply(r, _PREC.power(two, _PREC.divide(k, 16))))
    return total


def phys_cmp(x: tuple, y: tuple) -> int:
    """Sign of (2^u a + v) - (2^u' a' + v') for triples (a, u, v); u, u' dyadic with denominator <= 16.

    The numbers 2^(k/16) are linearly independent over Q, so equality is decided
    exactly; otherwise the sign comes from an 80-digit evaluation.
    """
    px, py = _phys_parts(*x), _phys_parts(*y)
    if px == py:
        return 0
    d = _PREC.subtract(_phys_decimal(px), _phys_decimal(py))
    return (d > 0) - (d < 0)


def frequency_ends(item, j: int = 0) -> tuple:
    """Endpoints of omega (or a bi-tile half j) as (a, u, v) triples."""
    if isinstance(item, BiTile):
        w = item.omega0 if j == 0 else item.sub_omega0(j)
        return (w.lo, item.u, item.v), (w.hi, item.u, item.v)
    if isinstance(item, Tile):
        return (item.omega.lo, Fraction(0), Fraction(0)), (item.omega.hi, Fraction(0), Fraction(0))
    if isinstance(item, Interval):
        return (item.lo, Fraction(0), Fraction(0)), (item.hi, Fraction(0), Fraction(0))
    raise TypeError(f"no frequency interval on {type(item).__name__}")


def freq_contains(outer: tuple, inner: tuple) -> bool:
    """Containment of half-open frequency intervals given as endpoint-triple pairs."""
    return phys_cmp(outer[0], inner[0]) <= 0 and phys_cmp(inner[1], outer[1]) <= 0


def freq_intersects(a: tuple, b: tuple) -> bool:
    return phys_cmp(a[0], b[1]) < 0 and phys_cmp(b[0], a[1]) < 0


def freq_shorter(a: tuple, b: tuple) -> bool:
    """|a| < |b| for intervals 2^u [lo, hi) + v."""
    la = (a[1][0] - a[0][0], a[0][1], Fraction(0))
    lb = (b[1][0] - b[0][0], b[0][1], Fraction(0))
    return phys_cmp(la, lb) < 0


def reflect_tile(t: Tile) -> Tile:
    """The tile I x (-omega), written on the dyadic grid with the reflected shift."""
    sigma = t.shift
    if sigma == 0:
        return Tile(t.m, t.kx, -t.kf - 1, 0)
    return Tile(t.m, t.kx, -t.kf - 1 - (-1) ** t.m, 1 - sigma)


def reflect_third(q: TriTile) -> TriTile:
    r = reflect_tile(q.tile(2))
    return TriTile(q.m, q.kx, (q.kf[0], q.kf[1], r.kf), (q.sigma[0], q.sigma[1], r.shift))


# ---------------------------------------------------------------- trees

@dataclass(frozen=True)
class Tree:
    top: object
    members: tuple
    j: int
    mode: str = "relaxed"

    def __post_init__(self):
        if self.mode not in ("relaxed", "classical"):
            raise ValueError("mode is 'relaxed' or 'classical'")

    @property
    def I_T(self) -> Interval:
        return self.top.I if self.mode == "relaxed" else self.top.I0

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def in_tree(p, top, j: int, mode: str, dil: Dilations = DESK) -> bool:
    if mode == "relaxed":
        return order_relate(p.tile(j - 1), top.tile(j - 1), "<=r", dil)
    return order_relate(p, top, "<=c") and p.sub_omega0(j).contains(top.sub_omega0(j))


def tree_members(collection: Iterable, top, j: int, mode: str = "relaxed", dil: Dilations = DESK) -> Tree:
    """All members of the collection forming a j-tree with the given top."""
    if mode == "relaxed" and not isinstance(top, TriTile):
        raise TypeError("relaxed trees have a tri-tile top")
    if mode == "classical" and not isinstance(top, BiTile):
        raise TypeError("classical trees have a bi-tile top")
    if mode == "relaxed" and j not in (1, 2, 3) or mode == "classical" and j not in (1, 2):
        raise ValueError("tree type out of range")
    return Tree(top, tuple(p for p in collection if in_tree(p, top, j, mode, dil)), j, mode)


def strongly_disjoint(t: Tree, s: Tree, i: int):
    """Strong i-disjointness of two tri-tile trees; (True, None) or (False, (reason, P, P'))."""
    for p in t:
        for q in s:
            if p.tile(i - 1) == q.tile(i - 1):
                return False, ("shared tile", p, q)
            if p.tile(i - 1).omega.dilate(2).intersects(q.tile(i - 1).omega.dilate(2)):
                if q.I.intersects(t.I_T):
                    return False, ("spatial overlap with top of first tree", p, q)
                if p.I.intersects(s.I_T):
                    return False, ("spatial overlap with top of second tree", p, q)
    return True, None


def rectangles_disjoint(t: Tree, s: Tree, i: int) -> bool:
    """I_P x 2 omega_{P_i} and I_P' x 2 omega_{P'_i} are disjoint for all member pairs."""
    for p in t:
        for q in s:
            if p.I.intersects(q.I) and p.tile(i - 1).omega.dilate(2).intersects(q.tile(i - 1).omega.dilate(2)):
                return False
    return True


def frequency_dichotomy(tree: Tree, j: int) -> bool:
    """For members of an i-tree: omega_{P_j} equal or 2 omega_{P_j} disjoint, pairwise."""
    for p, q in itertools.combinations(tree.members, 2):
        a, b = p.tile(j - 1).omega, q.tile(j - 1).omega
        if a != b and a.dilate(2).intersects(b.dilate(2)):
            return False
    return True


# ---------------------------------------------------------------- serialization

def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def dumps(items: Iterable) -> str:
    lines = []
    for t in items:
        if isinstance(t, Tile):
            lines.append(f"tile {t.m} {t.kx} {t.kf} {_frac(t.shift)}")
        elif isinstance(t, TriTile):
            lines.append(f"tritile {t.m} {t.kx} " + " ".join(map(str, t.kf)) + " " + " ".join(map(_frac, t.sigma)))
        elif isinstance(t, BiTile):
            lines.append(f"bitile {t.m} {t.kx} {t.kf} {_frac(t.u)} {_frac(t.v)}")
        elif isinstance(t, ShiftedDyadicCube):
            lines.append(
                f"cube {t.dim} {t.scale} " + " ".join(map(str, t.position)) + " " + " ".join(map(_frac, t.shift))
            )
        else:
            raise TypeError(f"cannot serialize {type(t).__name__}")
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str) -> list:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *f = line.split()
        if kind == "tile":
            out.append(Tile(int(f[0]), int(f[1]), int(f[2]), Fraction(f[3])))
        elif kind == "tritile":
            out.append(TriTile(int(f[0]), int(f[1]), tuple(map(int, f[2:5])), tuple(map(Fraction, f[5:8]))))
        elif kind == "bitile":
            out.append(BiTile(int(f[0]), int(f[1]), int(f[2]), Fraction(f[3]), Fraction(f[4])))
        elif kind == "cube":
            d = int(f[0])
            out.append(
                ShiftedDyadicCube(d, int(f[1]), tuple(map(int, f[2:2 + d])), tuple(map(Fraction, f[2 + d:2 + 2 * d])))
            )
        else:
            raise ValueError(f"unknown record kind {kind!r}")
    return out
