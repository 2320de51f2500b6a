"""Independent brute-force evaluations used as test oracles."""
from __future__ import annotations

import itertools
import math

import numpy as np

from bicarleson.tiles import order_relate, strongly_disjoint, Tree


def tiles_disjoint(a, b) -> bool:
    return not (a.I.intersects(b.I) and a.omega.intersects(b.omega))


def bitiles_disjoint(a, b) -> bool:
    return not (a.I0.intersects(b.I0) and a.omega0.intersects(b.omega0))


def brute_energy(tiles, weights, disjoint) -> float:
    """max over pairwise-disjoint index subsets of the summed weight, by full subset search."""
    n = len(tiles)
    ok = [[a == b or disjoint(tiles[a], tiles[b]) for b in range(n)] for a in range(n)]
    best = 0.0
    for mask in range(1 << n):
        idx = [a for a in range(n) if mask >> a & 1]
        if all(ok[a][b] for a, b in itertools.combinations(idx, 2)):
            best = max(best, math.fsum(sorted(weights[idx])) if idx else 0.0)
    return best


def brute_antichain_value(items, weights, disjoint) -> float:
    """Exact branch-and-bound search over pairwise-disjoint families, one conflict component at a time."""
    n = len(items)
    w = np.asarray(weights, dtype=float)
    conflict = [{b for b in range(n) if a != b and not disjoint(items[a], items[b])} for a in range(n)]
    seen, picked = set(), []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in conflict[a] - seen:
                seen.add(b)
                stack.append(b)
        comp.sort(key=lambda a: -w[a])
        tail = np.concatenate([np.cumsum(w[comp][::-1])[::-1], [0.0]])
        best = [0.0, frozenset()]

        def rec(k, chosen, acc):
            if acc > best[0]:
                best[0], best[1] = acc, chosen
            if k == len(comp) or acc + tail[k] <= best[0]:
                return
            a = comp[k]
            if not conflict[a] & chosen:
                rec(k + 1, chosen | {a}, acc + w[a])
            rec(k + 1, chosen, acc)

        rec(0, frozenset(), 0.0)
        picked += best[1]
    # correctly rounded sum of the winning family
    return math.fsum(w[picked]) if picked else 0.0


def tree_masks(collection, tops, dil):
    """Bitmask of members for each (type, top tile)."""
    out = []
    for i, t in tops:
        m = 0
        for a, p in enumerate(collection):
            if order_relate(p.tile(i - 1), t, "<=r", dil):
                m |= 1 << a
        out.append(m)
    return out


def brute_size(collection, coeffs, j, tops, dil) -> float:
    """max over every nonempty subset that is a tree for some top of type != j."""
    w = np.abs(np.asarray(coeffs)) ** 2
    cand = [(i, t) for i, t in tops if i != j]
    masks = tree_masks(collection, cand, dil)
    inv = [1 / float(t.I.length) for _, t in cand]
    best = 0.0
    n = len(collection)
    for S in range(1, 1 << n):
        scale = max((v for m, v in zip(masks, inv) if S & m == S), default=None)
        if scale is None:
            continue
        tot = math.fsum(w[a] for a in range(n) if S >> a & 1)
        best = max(best, tot * scale)
    return math.sqrt(best)


def brute_modified_energy(collection, coeffs, j, tops, dil, n_values) -> float:
    """sup_n sup over collections of pairwise strongly j-disjoint i-trees (i != j), all enumerated.

    Every subset of every maximal tree is a candidate; sub-tree bounds use trees of all types.
    """
    w = np.abs(np.asarray(coeffs)) ** 2
    masks = tree_masks(collection, tops, dil)
    lens = [float(t.I.length) for _, t in tops]
    size = len(collection)

    def total(S):
        return math.fsum(w[a] for a in range(size) if S >> a & 1)

    best = 0.0
    for n in n_values:
        trees = []
        for (i, t), m, L in zip(tops, masks, lens):
            if i == j:
                continue
            sub = m
            while sub:
                S = sub
                sub = (sub - 1) & m
                if total(S) < 4.0**n * L:
                    continue
                if any(total(S & m2) > 4.0 ** (n + 1) * L2 * (1 + 1e-12) for m2, L2 in zip(masks, lens)):
                    continue
                members = tuple(collection[a] for a in range(size) if S >> a & 1)
                trees.append((S, L, Tree(t, members, i)))
        compat = [[(a == b) or (trees[a][0] & trees[b][0] == 0
                    and strongly_disjoint(trees[a][2], trees[b][2], j)[0]
                    and strongly_disjoint(trees[b][2], trees[a][2], j)[0])
                   for b in range(len(trees))] for a in range(len(trees))]
        top = [0.0]

        def rec(k, chosen, acc):
            if acc > top[0]:
                top[0] = acc
            for b in range(k, len(trees)):
                if all(compat[b][c] for c in chosen):
                    rec(b + 1, chosen + [b], acc + trees[b][1])

        rec(0, [], 0.0)
        if top[0] > 0:
            best = max(best, 2.0**n * math.sqrt(top[0]))
    return best
