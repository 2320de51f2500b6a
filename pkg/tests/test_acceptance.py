"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line."""
import itertools
import math
import time

import numpy as np

from bicarleson import battery
from bicarleson.budgets import budget, load_budgets
from bicarleson.decomp import split_bitiles, split_by_size
from bicarleson.forms import decouple_check, lambda_doubleprime, lambda_doubleprime_rewritten, lambda_prime, lambda_prime_reversed
from bicarleson.grid import CutoffFunction, GridFunction, Spectrum
from bicarleson.harness import random_cutoff
from bicarleson.operators import fft_fast_path, multiplier_apply, multiplier_apply_linearized
from bicarleson.sizes import _n_range, bitile_energy, bitile_integral, bitile_size, energy_j, modified_energy_j, size_j, top_set
from bicarleson.symbols import DEFAULT_QUAD, Symbol2D, check_mmh, cone_indicator, decompose_cone, m_doubleprime_regime, m_prime_regime
from bicarleson.tiles import DESK, BiTile, Tile, TriTile, is_sparse_tritiles, order_relate, strongly_disjoint, tree_members
from bicarleson.wavepackets import FAMILIES, PHI, PHI_TILDE, PHI_TILDE2, coefficients, make_wave_packet, spectral_leakage, tiles_disjoint, verify_decay, walsh_signs, walsh_tiles

from oracles import bitiles_disjoint, brute_antichain_value, brute_energy, brute_modified_energy, brute_size
from oracles import tiles_disjoint as tile_pair_disjoint


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def spec(rng, n):
    return Spectrum(rng.normal(size=n) + 1j * rng.normal(size=n))


# ---------------------------------------------------------------- 1

def test_criterion_1_fast_path_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    count = 0
    for n in (32, 64, 128):
        pieces = []
        for c in (0, n // 8, n // 4):
            d = decompose_cone(n, c)
            pieces += [d.m_prime, d.m_doubleprime, d.m_tripleprime, d.chi]
        for i in range(50):
            f1, f2 = spec(rng, n), spec(rng, n)
            if i % 3 == 0:
                m = Symbol2D(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
                fast, direct = fft_fast_path(m, f1, f2), multiplier_apply(m, f1, f2)
            elif i % 3 == 1:
                m = pieces[i % len(pieces)]
                fast, direct = fft_fast_path(m, f1, f2), multiplier_apply(m, f1, f2)
            else:
                cut = CutoffFunction(rng.integers(-n // 2, n // 2 + 1, size=n))
                fam = lambda c, n=n: cone_indicator(n, c)  # noqa: E731
                fast, direct = fft_fast_path(fam, f1, f2, cut), multiplier_apply_linearized(fam, f1, f2, cut)
            a, b = fast.samples, direct.samples
            worst = max(worst, np.abs(a - b).max() / np.abs(b).max())
            count += 1
    elapsed = time.perf_counter() - t0
    report(capsys, 1, count == 150 and worst <= 1e-9 and elapsed < 300,
           f"{count} instances, max relative error {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 300s)")


# ---------------------------------------------------------------- 2

def test_criterion_2_symbol_decomposition(capsys):
    n = 64
    lines, ok = [], True
    for c in (0, 8, 16):
        d = decompose_cone(n, c)
        r = decompose_cone(n, c, DEFAULT_QUAD.refined())
        exact = np.array_equal(d.m_prime.values + d.m_doubleprime.values + d.m_tripleprime.values, d.chi.values)
        rp, rpp = m_prime_regime(n, c), m_doubleprime_regime(n, c)
        e1 = np.abs(d.m_prime.values[rp] - 1).max()
        e2 = np.abs(d.m_doubleprime.values[rpp] - 1).max()
        f1 = np.abs(r.m_prime.values[rp] - 1).max()
        f2 = np.abs(r.m_doubleprime.values[rpp] - 1).max()
        ok &= bool(exact and rp.any() and rpp.any() and e1 <= 1e-3 and e2 <= 1e-3 and f1 <= e1 / 2 and f2 <= e2 / 2)
        lines.append(f"n={c}: exact={exact} m'={e1:.2e}->{f1:.2e} m''={e2:.2e}->{f2:.2e}")
    report(capsys, 2, ok, "; ".join(lines) + " (tol 1e-3, refinement halves)")


# ---------------------------------------------------------------- 3

def test_criterion_3_mmh_uniformity(capsys):
    n = 64
    cuts = (0, n // 8, n // 4)
    per = [check_mmh(decompose_cone(n, c).m_tripleprime, center=(c, c), max_order=2).per_order for c in cuts]
    spread = [max(p[k] for p in per) / min(p[k] for p in per) for k in (0, 1, 2)]
    report(capsys, 3, all(s <= 2 for s in spread),
           "max/min across n per order " + ", ".join(f"|a|={k}: {s:.3f}" for k, s in enumerate(spread)) + " (limit 2)")


# ---------------------------------------------------------------- 4

def test_criterion_4_wave_packets(capsys):
    leak = max(spectral_leakage(make_wave_packet(Tile(m, k, f), 256, fam))
               for fam in FAMILIES.values() for m, k, f in [(3, 2, 1), (4, 9, -2), (5, 0, 0)])
    finite, spread = True, 0.0
    for fam in (PHI, PHI_TILDE, PHI_TILDE2):
        consts = np.array([[verify_decay(make_wave_packet(Tile(m, 1, 1), 256, fam), M) for M in range(6)]
                           for m in (3, 4, 5)])
        finite &= bool(np.all(np.isfinite(consts)))
        spread = max(spread, float((consts.max(axis=0) / consts.min(axis=0)).max() - 1))
    n = 32
    tiles = walsh_tiles(n)
    signs = np.array([walsh_signs(t, n) for t in tiles], dtype=np.int64)
    dots = signs @ signs.T
    pairs = bad = 0
    for a, b in itertools.combinations(range(len(tiles)), 2):
        if tiles_disjoint(tiles[a], tiles[b]):
            pairs += 1
            bad += int(dots[a, b] != 0)
    ok = leak <= 1e-10 and finite and spread <= 0.05 and pairs > 0 and bad == 0
    report(capsys, 4, ok, f"leakage {leak:.1e} (tol 1e-10), C_M finite={finite}, scale spread {spread:.2%} (limit 5%), "
                          f"Walsh {pairs} disjoint pairs with {bad} nonzero inner products")


# ---------------------------------------------------------------- 5

def test_criterion_5_rearrangements(capsys):
    d1 = 0.0
    nonzero = 0
    for fx in battery.prime_fixtures():
        a = lambda_prime(fx["P"], fx["Q"], fx["f1"], fx["f2"], fx["f3"], fx["cutoff"], fx["packets"])
        b = lambda_prime_reversed(fx["Q"], fx["P"], fx["f1"], fx["f2"], fx["f3"], fx["cutoff"], fx["packets"])
        d1 = max(d1, abs(a - b))
        nonzero += a != 0
    d2 = 0.0
    cases = [(fx["P"], fx["bitiles"], fx) for fx in battery.battery("eps-bilinear")]
    cases += [(fx["P"], list(fx["tree"].members), fx) for fx in battery.battery("tree-estimate")]
    for P, Q, fx in cases:
        a = lambda_doubleprime(P, Q, fx["f1"], fx["f2"], fx["f3"], fx["cutoff"])
        b = lambda_doubleprime_rewritten(Q, P, fx["f1"], fx["f2"], fx["f3"], fx["cutoff"])
        d2 = max(d2, abs(a - b))
        nonzero += a != 0
    res = 0.0
    fixtures = list(battery.sparse_tree_fixtures())
    Q = [TriTile(3, 0, (119, 276, -278)), TriTile(7, 0, (7, 15, -16)), TriTile(11, 0, (0, -1, 0))]
    rng = np.random.default_rng(7)
    fixtures.append({"tree": tree_members(Q, Q[0], 1),
                     "P": [BiTile(4, 3, -139), BiTile(4, 5, -139), BiTile(8, 1, -8), BiTile(12, 7, 0), BiTile(9, 2, -5)],
                     "f": GridFunction(rng.normal(size=8192) + 1j * rng.normal(size=8192)),
                     "cutoff": CutoffFunction(rng.integers(-4096, 4097, size=8192))})
    ok3 = True
    for fx in fixtures:
        r = decouple_check(fx["tree"], fx["P"], fx["f"], fx["cutoff"])
        ok3 &= r.ok
        res = max(res, r.residue)
    total = len(cases) + 10
    ok = d1 <= 1e-10 and d2 <= 1e-10 and res <= 1e-8 and ok3 and nonzero == total
    report(capsys, 5, ok, f"Lambda' vs reversed {d1:.1e}, Lambda'' rewrite {d2:.1e} (tol 1e-10, {nonzero}/{total} nonzero); "
                          f"decoupling residue {res:.1e} on {len(fixtures)} sparse trees (tol 1e-8)")


# ---------------------------------------------------------------- 6

def _tri_cases():
    for kind in ("energy-lemma", "size-lemma"):
        for fx in battery.battery(kind):
            yield fx["tritiles"], coefficients(fx["f"], fx["tritiles"], fx["j"]).values, fx["j"]
    for fx in battery.battery("trilinear"):
        for j in (1, 2, 3):
            yield fx["tritiles"], coefficients(fx["f"][j - 1], fx["tritiles"], j).values, j
    for n in battery.COUNT_SIZES:
        for fx in battery.battery(f"split-count-{n}"):
            yield fx["tritiles"], fx["coeffs"], fx["j"]


def _ancestors_by_search(p, depth, span=64):
    # scan every position at each coarser scale, then every frequency under the containing positions
    out = []
    for m in range(max(1, p.m - depth), p.m + 1):
        for kx in range(2 ** (m - 1)):
            if not BiTile(m, kx, 0).I0.contains(p.I0):
                continue
            out += [q for kf in range(-span, span) for q in [BiTile(m, kx, kf)] if p.omega0.contains(q.omega0)]
    return out


def test_criterion_6_size_energy_oracles(capsys):
    tri = mism = brack = 0
    for Q, a, j in _tri_cases():
        assert len(Q) <= 15
        tri += 1
        e = energy_j(Q, a, j).value
        be = math.sqrt(brute_energy([p.tile(j - 1) for p in Q], np.abs(a) ** 2, tile_pair_disjoint))
        ts = top_set(Q, (1, 2, 3))
        s = size_j(Q, a, j).value
        mism += (e != be) + (s != brute_size(Q, a, j, list(ts.tops), DESK))
        # greedy sparse sub-collection for the modified energy bracket
        sub, idx = [], []
        for k, q in enumerate(Q):
            if is_sparse_tritiles(sub + [q])[0]:
                sub.append(q)
                idx.append(k)
        g = modified_energy_j(sub, a[idx], j, depth=1)
        ts1 = top_set(sub, (1, 2, 3), depth=1)
        w = np.abs(a[idx]) ** 2
        cand = [k for k in range(len(ts1.tops)) if ts1.tops[k][0] != j]
        sq = np.array([w[r].sum() for r in ts1.members]) / ts1.lengths
        nr = _n_range(w, np.array([float(p.I.length) for p in sub]), sq[cand].max()) if cand else []
        ex = brute_modified_energy(sub, a[idx], j, list(ts1.tops), DESK, nr)
        brack += not (g.value <= ex * (1 + 1e-12) + 1e-15 and ex <= g.extra["energy"] * (1 + 1e-12) + 1e-15)
    bi = bad_bi = 0
    depth = 1
    for kind in ("benergy", "bsize"):
        for fx in battery.battery(kind):
            P, G, cut = fx["bitiles"], fx["f"], fx["cutoff"]
            assert len(P) <= 15
            bi += 1
            pool = sorted({q for p in P for q in _ancestors_by_search(p, depth)}, key=repr)
            vals = np.array([bitile_integral(G, cut, q) for q in pool])
            plain = bitile_energy(P, G, cut, "plain", depth).value
            bad_bi += plain != brute_antichain_value(pool, vals, bitiles_disjoint)
            lens = np.array([float(q.I0.length) for q in pool])
            best = 0.0
            for nn in {math.floor(math.log2(v / L)) for v, L in zip(vals, lens) if v > 0}:
                ok = vals / lens >= 2.0**nn
                best = max(best, 2.0**nn * brute_antichain_value([q for q, b in zip(pool, ok) if b], lens[ok], bitiles_disjoint))
            mod = bitile_energy(P, G, cut, "modified", depth).value
            bad_bi += not (abs(mod - best) <= 1e-12 * best and mod <= plain * (1 + 1e-12))
    ok = mism == 0 and brack == 0 and bad_bi == 0
    report(capsys, 6, ok, f"{tri} tri-tile fixtures: {mism} energy/size mismatches, {brack} bracket failures; "
                          f"{bi} bi-tile fixtures: {bad_bi} energy mismatches")


# ---------------------------------------------------------------- 7

def _rand_tritiles(n, rng, mmax=4, spread=4):
    out = []
    while len(out) < n:
        m = int(rng.integers(0, mmax + 1))
        t = TriTile(m, int(rng.integers(2**m)), tuple(int(k) for k in rng.integers(-spread, spread, size=3)))
        if t not in out:
            out.append(t)
    return out


def _bitile_size_loop(P, G, cut, depth=3, C=4.0):
    # sup over ancestors within depth of |I|^-1 int |G| chi chi~^C, by direct search
    best = 0.0
    for q in {q for p in P for q in _ancestors_by_search(p, depth, G.n)}:
        lo, hi = q.I_float()
        best = max(best, bitile_integral(G, cut, q, C) / (hi - lo))
    return best


def test_criterion_7_split_postconditions(capsys):
    rng = np.random.default_rng(77)
    tri_fail = tri_runs = companions = 0
    for t in range(100):
        j = 1 + t % 3
        Q = _rand_tritiles(14, rng)
        a = rng.normal(size=14) + 1j * rng.normal(size=14)
        S, E = size_j(Q, a, j).value, modified_energy_j(Q, a, j).value
        n = math.floor(math.log2(E / S))
        res = split_by_size(Q, a, j, n, E)
        tri_runs += 1
        rem = list(res.remainder)
        rem_a = np.array([a[Q.index(p)] for p in rem])
        rs = brute_size(rem, rem_a, j, list(top_set(rem, (1, 2, 3)).tops), DESK) if rem else 0.0
        ok = rs <= 2.0 ** (-n - 1) * E * (1 + 1e-12)
        # the selected trees carry the strong disjointness; companions are singleton covers of the conflicts
        trees = res.trees
        ok &= all(strongly_disjoint(trees[x], trees[y], j)[0] for x in range(len(trees)) for y in range(len(trees)) if x != y)
        ok &= all(len(c.members) == 1 for c in res.companions)
        ok &= sorted(map(repr, rem + list(res.extracted))) == sorted(map(repr, Q))
        ok &= len(set(res.extracted)) == len(res.extracted)
        companions += len(res.companions)
        tri_fail += not ok
    bi_fail = bi_runs = 0
    n_grid = 64
    for t in range(100):
        S = 0.0
        while S == 0:
            # a collection that no cutoff reaches has nothing to split; draw again
            P = battery.random_bitiles(n_grid, 14, rng)
            G = GridFunction(rng.normal(size=n_grid))
            cut = random_cutoff(n_grid, rng)
            S = bitile_size(P, G, cut).value
        E = bitile_energy(P, G, cut, "modified").value
        n = math.floor(math.log2(E / S))
        res = split_bitiles(P, G, cut, n, E)
        bi_runs += 1
        rem = list(res.remainder)
        ok = (_bitile_size_loop(rem, G, cut) if rem else 0.0) <= 2.0 ** (-n - 1) * E * (1 + 1e-12)
        mem = [p for tr in res.trees for p in tr.members]
        ok &= len(mem) == len(set(mem))
        ok &= all(order_relate(p, tr.top, "<=c") for tr in res.trees for p in tr.members)
        ok &= sorted(map(repr, rem + mem)) == sorted(map(repr, P))
        bi_fail += not ok
    report(capsys, 7, tri_fail == 0 and bi_fail == 0 and tri_runs == bi_runs == 100,
           f"split_by_size {tri_runs - tri_fail}/{tri_runs} ({companions} singleton companions), split_bitiles {bi_runs - bi_fail}/{bi_runs} pass recomputation")


# ---------------------------------------------------------------- 8

def test_criterion_8_counting_growth(capsys):
    stored = load_budgets()["measured"]
    drift = max(abs(battery.measure(k) - stored[k]) for k in battery.COUNT_KINDS)
    lines, ok = [], drift <= 1e-12
    for stem in ("split-count", "bitile-split-count"):
        b = [budget(f"{stem}-{n}") for n in battery.COUNT_SIZES]
        ok &= all(b[i + 1] <= 2 * b[i] for i in range(len(b) - 1))
        lines.append(f"{stem}: " + " -> ".join(f"{x:.3f}" for x in b))
    report(capsys, 8, ok, "; ".join(lines) + f" (each step <= 2x), remeasure drift {drift:.1e}")


# ---------------------------------------------------------------- 9

def test_criterion_9_estimate_regression(capsys):
    stored = load_budgets()
    h = battery.battery_hash()
    rows = {k: (battery.measure(k), budget(k)) for k in battery.ESTIMATE_KINDS}
    over = [k for k, (m, b) in rows.items() if not m <= b]
    endpoint = any(tuple(float(x) for x in th) == (0.0, 0.5) for th in battery.THETAS["bilinear"])
    ok = h == stored["battery_hash"] and not over and endpoint
    report(capsys, 9, ok, f"battery hash {'matches' if h == stored['battery_hash'] else 'CHANGED'}, "
                          f"{len(rows) - len(over)}/{len(rows)} kinds within budget, theta1=0 endpoint included={endpoint}")


# ---------------------------------------------------------------- 10

def test_criterion_10_restricted_type(capsys):
    t0 = time.perf_counter()
    lines, ok = [], True
    for kind in battery.EXPERIMENT_KINDS:
        (fx,) = battery.battery(kind)
        assert fx["trials"] == 100 and fx["n"] == 64
        reps = battery.experiment_reports(fx)
        worst = max(r.max for r in reps)
        maj = all(r.majority for r in reps)
        ok &= worst <= budget(kind) and maj
        lines.append(f"{kind} max {worst:.4f} <= {budget(kind):.4f} majority={maj}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 900
    report(capsys, 10, ok, "; ".join(lines) + f"; {elapsed:.1f}s (limit 900s)")
