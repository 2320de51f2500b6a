"""The frozen fixture battery behind the calibrated budgets.

Every fixture is generated from a fixed seed, so the battery is identical on
every run; `battery_hash` fingerprints its content and is stored next to the
budgets. `measure(kind)` returns the largest LHS / RHS (or counting ratio)
over the battery for one kind.
"""
from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .grid import CutoffFunction, GridFunction
from .harness import (
    exceptional_set,
    random_cutoff,
    random_function,
    random_set,
    standard_bitiles,
    standard_tritiles,
)
from .sizes import LEMMA_KINDS, estimate_bounds_check, top_set
from .tiles import BiTile, Tree, TriTile, in_tree
from .wavepackets import ResolutionError, make_wave_packet

N = 64
THETAS = {
    "trilinear": [(Fraction(1, 3),) * 3, (0.5, 0.25, 0.25), (0, 0.5, 0.5), (0.2, 0.2, 0.6), (0.8, 0.1, 0.1)],
    "bilinear": [(0, 0.5), (Fraction(1, 3), Fraction(1, 3)), (0.5, 0.25), (0.8, 0.1)],
    "eps-bilinear": [(0.4, 0.2), (0.6, 0.1), (0.2, 0.3)],
    "biparameter": [(0.5, 0.5), (0.25, 0.75), (0.75, 0.25), (0.1, 0.9)],
}
EPS_BILINEAR = 0.1
TREE_EPS, TREE_ALPHA = 0.5, 0.25
COUNT_SIZES = (32, 64, 128)
ABSTRACT = ("trilinear", "bilinear", "eps-bilinear", "biparameter")
EXPERIMENT_TRIALS = 100
ESTIMATE_KINDS = LEMMA_KINDS + ABSTRACT + ("tree-estimate",)
COUNT_KINDS = tuple(f"split-count-{n}" for n in COUNT_SIZES) + tuple(f"bitile-split-count-{n}" for n in COUNT_SIZES)
EXPERIMENT_KINDS = ("experiment-carleson", "experiment-prime", "experiment-doubleprime")
KINDS = ESTIMATE_KINDS + COUNT_KINDS + EXPERIMENT_KINDS


def _rng(kind: str, k: int) -> np.random.Generator:
    return np.random.default_rng([sum(map(ord, kind)), k])


def _gauss(n: int, rng) -> GridFunction:
    return GridFunction(rng.normal(size=n) + 1j * rng.normal(size=n))


def packet_tritiles(n: int, count: int, rng) -> list:
    """Random tri-tiles whose three packets are resolvable on the grid."""
    scales = [m for m in range(int(math.log2(n)) + 1) if 8 <= 2**m <= n // 4]
    out: list = []
    while len(out) < count:
        m = int(rng.choice(scales))
        w = n // 2**m
        q = TriTile(m, int(rng.integers(2**m)), tuple(int(k) for k in rng.integers(-w // 2, w // 2, size=3)))
        if q in out:
            continue
        try:
            for j in (1, 2, 3):
                make_wave_packet(q, n, j=j)
        except ResolutionError:
            continue
        out.append(q)
    return out


def random_bitiles(n: int, count: int, rng) -> list:
    pool = standard_bitiles(n)
    idx = sorted(rng.choice(len(pool), size=min(count, len(pool)), replace=False))
    return [pool[i] for i in idx]


def gated_bitiles(n: int, Q, count: int, rng) -> list:
    """Bi-tiles P that some member of Q passes the frequency gate against, so Lambda'' sees them."""
    from .forms import _q2_gate

    pool = [p for p in standard_bitiles(n) if any(_q2_gate(q, p) for q in Q)]
    idx = sorted(rng.choice(len(pool), size=min(count, len(pool)), replace=False))
    return [pool[i] for i in idx]


def classical_tree(n: int, rng, size: int = 6, j: int = 1, max_m: int | None = None) -> Tree:
    """A classical j-tree of resolvable bi-tiles under a random coarsest-scale top."""
    pool = standard_bitiles(n)
    m_top = min(p.m for p in pool)
    if max_m is not None:
        pool = [p for p in pool if p.m <= max_m]
    tops = [p for p in pool if p.m == m_top]
    while True:
        top = tops[int(rng.integers(len(tops)))]
        mem = [p for p in pool if p != top and in_tree(p, top, j, "classical")]
        if mem:
            pick = rng.choice(len(mem), size=min(size - 1, len(mem)), replace=False)
            return Tree(top, (top,) + tuple(mem[i] for i in sorted(pick)), j, "classical")


def tuned_cutoff(n: int, Q, rng, min_len: int = 4) -> CutoffFunction:
    """Piecewise constant cutoff whose values fall in the right halves of the given bi-tiles."""
    freqs = sorted({k for q in Q for k in range(int(q.omega_exact(2).lo), int(q.omega_exact(2).hi))})
    vals = np.zeros(n, dtype=np.int64)
    for lo in range(0, n, min_len):
        vals[lo:lo + min_len] = freqs[int(rng.integers(len(freqs)))]
    return CutoffFunction(vals)


def _tri_tree(Q, rng) -> Tree:
    ts = top_set(Q, (1, 2), 1)
    sizes = ts.members.sum(axis=1)
    k = int(np.argmax(sizes))
    return ts.tree(k, Q)


def _count_tritiles(n: int, count: int, rng) -> list:
    L = int(math.log2(n))
    out: list = []
    while len(out) < count:
        m = int(rng.integers(0, L - 2))
        h = n // 2 ** (m + 1)
        t = TriTile(m, int(rng.integers(2**m)), tuple(int(k) for k in rng.integers(-h, h, size=3)))
        if t not in out:
            out.append(t)
    return out


def _count_bitiles(n: int, count: int, rng) -> list:
    L = int(math.log2(n))
    out: set = set()
    while len(out) < count:
        m = int(rng.integers(1, L - 1))
        h = n // 2 ** (m + 1)
        out.add(BiTile(m, int(rng.integers(2 ** (m - 1))), int(rng.integers(-h, h))))
    return sorted(out, key=repr)


@lru_cache(maxsize=None)
def battery(kind: str) -> tuple:
    """The fixtures of one kind, in a fixed order."""
    out = []
    if kind in ("energy-lemma", "size-lemma"):
        for k in range(6):
            r = _rng(kind, k)
            Q = packet_tritiles(N, 10, r)
            E = random_set(N, r)
            f = random_function(E, r) if kind == "size-lemma" else _gauss(N, r)
            out.append({"tritiles": Q, "f": f, "E": E, "j": 1 + k % 3})
    elif kind in ("benergy", "bsize"):
        for k in range(6):
            r = _rng(kind, k)
            E = random_set(N, r)
            f = random_function(E, r) if kind == "bsize" else _gauss(N, r)
            out.append({"bitiles": random_bitiles(N, 12, r), "f": f, "E": E, "cutoff": random_cutoff(N, r)})
    elif kind in ("carleson-energy", "carleson-size", "restriction"):
        for k in range(4):
            r = _rng(kind, k)
            Q = list(standard_tritiles(N))
            E = random_set(N, r)
            fx = {"tritiles": Q, "bitiles": random_bitiles(N, 24, r), "f": random_function(E, r), "E": E,
                  "cutoff": random_cutoff(N, r)}
            if kind == "restriction":
                fx["tree"] = _tri_tree(Q, r)
            out.append(fx)
    elif kind == "trilinear":
        for k in range(6):
            r = _rng(kind, k)
            Q = packet_tritiles(N, 10, r)
            out.append({"tritiles": Q, "f": [random_function(random_set(N, r), r) for _ in range(3)]})
    elif kind == "bilinear":
        for k in range(10):
            r = _rng(kind, k)
            out.append({"bitiles": random_bitiles(N, 10, r), "f1": _gauss(N, r), "G": _gauss(N, r),
                        "cutoff": random_cutoff(N, r)})
    elif kind == "eps-bilinear":
        for k in range(4):
            r = _rng(kind, k)
            E1, E2 = random_set(N, r), random_set(N, r)
            E3 = np.ones(N, dtype=bool)
            ex = exceptional_set([E1, E2, E3], 8.0, 2)
            Q = [q for q in random_bitiles(N, 20, r) if q.m == 4][:10]
            out.append({"bitiles": Q, "P": gated_bitiles(N, Q, 16, r),
                        "f1": random_function(E1, r), "f2": random_function(E2, r),
                        "f3": random_function(ex.major[2], r), "E1": E1, "cutoff": tuned_cutoff(N, Q, r),
                        "eps": EPS_BILINEAR, "alpha": 0.5 * (1 - EPS_BILINEAR)})
    elif kind == "biparameter":
        for k in range(4):
            r = _rng(kind, k)
            out.append({"tree": classical_tree(128, r, 6, 2), "f": _gauss(128, r), "g": _gauss(128, r)})
    elif kind == "tree-estimate":
        for k in range(20):
            r = _rng(kind, k)
            E1, E2 = random_set(128, r), random_set(128, r)
            ex = exceptional_set([E1, E2, np.ones(128, dtype=bool)], 8.0, 2)
            T = classical_tree(128, r, 6, 1, max_m=5)
            while not gated_bitiles(128, T.members, 1, r):
                T = classical_tree(128, r, 6, 1, max_m=5)
            out.append({"tree": T, "P": gated_bitiles(128, T.members, 12, r),
                        "f1": random_function(E1, r), "f2": random_function(E2, r),
                        "f3": random_function(ex.major[2], r), "E1": E1, "cutoff": tuned_cutoff(128, T.members, r)})
    elif kind.startswith("split-count-"):
        n = int(kind.rsplit("-", 1)[1])
        for k in range(6):
            r = _rng("split-count", k)
            Q = _count_tritiles(n, 14, r)
            out.append({"tritiles": Q, "coeffs": r.normal(size=14) + 1j * r.normal(size=14), "j": 1 + k % 3})
    elif kind.startswith("bitile-split-count-"):
        n = int(kind.rsplit("-", 1)[1])
        for k in range(6):
            r = _rng("bitile-split-count", k)
            out.append({"bitiles": _count_bitiles(n, 14, r), "G": _gauss(n, r), "cutoff": random_cutoff(n, r)})
    elif kind in EXPERIMENT_KINDS:
        out.append({"form": kind.split("-", 1)[1], "trials": EXPERIMENT_TRIALS, "seed": 0, "n": N})
    else:
        raise KeyError(kind)
    return tuple(out)


# ---------------------------------------------------------------- identity fixtures (not calibrated)

def prime_fixtures(count: int = 10) -> tuple:
    """Rank-1 tri-tile collections with bi-tiles that pass the omega_{Q_3} in omega_{P_1} gate."""
    from .forms import Packets, _q3_in_p1
    from .tiles import check_rank1
    from .wavepackets import FAMILIES

    fams = list(FAMILIES.values())
    out = []
    for k in range(count):
        r = _rng("prime-identity", k)
        Q: list = []
        while len(Q) < 6:
            q = TriTile(3, int(r.integers(8)), tuple(int(x) for x in r.integers(-4, 4, size=3)))
            if q not in Q and check_rank1(Q + [q])[0]:
                Q.append(q)
        pool = [p for p in standard_bitiles(N) if p.m == 5 and any(_q3_in_p1(q, p) for q in Q)]
        P = [pool[i] for i in sorted(r.choice(len(pool), size=min(6, len(pool)), replace=False))]
        pk = Packets(fams[k % 4], fams[(k + 1) % 4], (fams[(k + 2) % 4], fams[(k + 3) % 4], fams[k % 4]),
                     fams[(k + 1) % 4])
        out.append({"P": P, "Q": Q, "f1": _gauss(N, r), "f2": _gauss(N, r), "f3": _gauss(N, r),
                    "cutoff": tuned_cutoff(N, P, r), "packets": pk})
    return tuple(out)


SPARSE_N = 8192


def sparse_tree_fixtures(count: int = 10) -> tuple:
    """Sparse rank-1 1-trees on scales 3, 7, 11 with bi-tiles P whose P_T is strictly larger than some P_Q."""
    from .forms import _q3_in_p1
    from .tiles import check_rank1, is_sparse_tritiles, tree_members

    n = SPARSE_N
    out = []
    for k in range(count):
        r = _rng("sparse-tree", k)
        while True:
            kx = int(r.integers(8))
            top = TriTile(3, kx, tuple(int(x) for x in r.integers(-n // 16, n // 16, size=3)))
            mem = [top]
            for m in (7, 11):
                w = 2**m
                k0 = int(top.tile(0).omega.lo // w)
                kf = (k0,) + tuple(int(x) for x in r.integers(-n // (2 * w), n // (2 * w), size=2))
                mem.append(TriTile(m, int(r.integers(kx * 2 ** (m - 3), (kx + 1) * 2 ** (m - 3))), kf))
            T = tree_members(mem, top, 1)
            if len(T.members) < 3 or not is_sparse_tritiles(mem)[0] or not check_rank1(mem)[0]:
                continue
            P = []
            for q in mem:
                lo = q.tile(2).omega.lo
                for mb in range(q.m + 1, min(q.m + 3, 13)):
                    b = BiTile(mb, int(r.integers(2 ** (mb - 1))), int(lo // 2**mb))
                    if _q3_in_p1(q, b):
                        P.append(b)
            P_T = [p for p in P if any(_q3_in_p1(q, p) for q in T.members)]
            if any(sum(_q3_in_p1(q, p) for p in P) < len(P_T) for q in T.members):
                break
        out.append({"tree": T, "P": P, "f": _gauss(n, r),
                    "cutoff": CutoffFunction(r.integers(-n // 2, n // 2 + 1, size=n))})
    return tuple(out)


def _digest(h, v) -> None:
    if isinstance(v, GridFunction):
        h.update(np.ascontiguousarray(v.samples).tobytes())
    elif isinstance(v, CutoffFunction):
        h.update(np.ascontiguousarray(v.values).tobytes())
    elif isinstance(v, np.ndarray):
        h.update(np.ascontiguousarray(v).tobytes())
    elif isinstance(v, dict):
        for k in sorted(v):
            h.update(k.encode())
            _digest(h, v[k])
    elif isinstance(v, (list, tuple)):
        for x in v:
            _digest(h, x)
    else:
        h.update(repr(v).encode())


def battery_hash(kinds=KINDS) -> str:
    h = hashlib.sha256()
    for kind in kinds:
        h.update(kind.encode())
        _digest(h, battery(kind))
        _digest(h, THETAS.get(kind, ()))
    return h.hexdigest()


def evaluate(kind: str, fx: dict) -> float:
    """Largest ratio of one fixture (budget not consulted)."""
    from . import decomp

    if kind in LEMMA_KINDS:
        return estimate_bounds_check(kind, fx, math.inf)["ratio"]
    if kind in ABSTRACT:
        return decomp.abstract_estimate_check(kind, fx, THETAS[kind], math.inf)["max_ratio"]
    if kind == "tree-estimate":
        return decomp.tree_estimate_check(fx["tree"], fx["P"], fx["f1"], fx["f2"], fx["f3"], fx["cutoff"], fx["E1"],
                                          TREE_EPS, TREE_ALPHA, budget_value=math.inf)["ratio"]
    if kind.startswith("split-count-"):
        return decomp.partition_levels(fx["tritiles"], fx["coeffs"], fx["j"]).max_counting_ratio
    if kind.startswith("bitile-split-count-"):
        return decomp.partition_bitile_levels(fx["bitiles"], fx["G"], fx["cutoff"]).max_counting_ratio
    if kind in EXPERIMENT_KINDS:
        return max(r.max for r in experiment_reports(fx))
    raise KeyError(kind)


def experiment_reports(fx: dict) -> list:
    from .harness import segment_sweep, vertex_sweep

    kw = {"trials": fx["trials"], "seed": fx["seed"], "n": fx["n"]}
    return segment_sweep(9, **kw) if fx["form"] == "carleson" else vertex_sweep(fx["form"], **kw)


def measure(kind: str) -> float:
    return max(evaluate(kind, fx) for fx in battery(kind))
