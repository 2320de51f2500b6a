"""Bilinear and linear frequency-cutoff operators on the discrete torus.

Every operator has a direct-summation form that costs O(N^2) per output
point. `fft_fast_path` evaluates a cutoff family one slice at a time: an
anti-diagonal reduction of the symbol, then a single inverse transform.
"""
from __future__ import annotations

import csv
import time
from typing import Callable, Union

import numpy as np

from .grid import CutoffFunction, GridFunction, Spectrum, frequencies, points
from .symbols import Symbol2D

Cutoff = Union[CutoffFunction, str]
SymbolFamily = Union[Symbol2D, Callable[[int], Symbol2D]]


def _phases(n: int) -> np.ndarray:
    # E[k, i] = exp(2 pi i x_k xi_i)
    return np.exp(2j * np.pi * np.outer(points(n), frequencies(n)))


def _exclusive_prefix(terms: np.ndarray) -> np.ndarray:
    # column j holds the sum of columns < j; j runs over 0..N so every cutoff is covered
    out = np.zeros((terms.shape[0], terms.shape[1] + 1), dtype=complex)
    np.cumsum(terms, axis=1, out=out[:, 1:])
    return out


def _select(prefix: np.ndarray, cutoff: Cutoff) -> GridFunction:
    n = prefix.shape[0]
    if isinstance(cutoff, str):
        if cutoff != "maximal":
            raise ValueError(f"unknown cutoff mode {cutoff!r}")
        return GridFunction(np.abs(prefix).max(axis=1))
    if cutoff.n != n:
        raise ValueError("cutoff and function sizes differ")
    return GridFunction(prefix[np.arange(n), cutoff.values + n // 2])


def carleson_apply(f: Spectrum, cutoff: Cutoff) -> GridFunction:
    """Partial Fourier sums sum_{xi < N(x)} f^(xi) e(x xi); 'maximal' takes the sup of moduli."""
    terms = _phases(f.n) * f.coefficients
    return _select(_exclusive_prefix(terms), cutoff)


def _pair_prefix(f1: Spectrum, f2: Spectrum) -> np.ndarray:
    if f1.n != f2.n:
        raise ValueError("spectra have different sizes")
    e = _phases(f1.n)
    below = _exclusive_prefix(e * f1.coefficients)[:, :-1]
    # pairs xi1 < xi2 grouped by xi2
    return below * (e * f2.coefficients)


def bht_apply(f1: Spectrum, f2: Spectrum) -> GridFunction:
    """sum_{xi1 < xi2} f1^(xi1) f2^(xi2) e(x(xi1 + xi2))."""
    # same accumulation as the cutoff N/2 slice of the Bi-Carleson prefix, so the two agree bit for bit
    return GridFunction(_exclusive_prefix(_pair_prefix(f1, f2))[:, -1])


def bicarleson_apply(f1: Spectrum, f2: Spectrum, cutoff: Cutoff) -> GridFunction:
    """sum_{xi1 < xi2 < N(x)}, strict on integers; 'maximal' takes the sup over cutoffs."""
    return _select(_exclusive_prefix(_pair_prefix(f1, f2)), cutoff)


def multiplier_apply(m: Symbol2D, f1: Spectrum, f2: Spectrum) -> GridFunction:
    """T_m(f1, f2)(x_k) by direct double summation at every grid point."""
    n = f1.n
    if m.n != n or f2.n != n:
        raise ValueError("symbol and spectra sizes differ")
    e = _phases(n)
    g = m.values * np.outer(f1.coefficients, f2.coefficients)
    return GridFunction(np.einsum("ka,ab,kb->k", e, g, e))


def multiplier_apply_linearized(
    family: SymbolFamily, f1: Spectrum, f2: Spectrum, cutoff: CutoffFunction
) -> GridFunction:
    """T_{m_{N(x)}}(f1, f2)(x): the symbol is rebuilt for each point's cutoff and summed directly."""
    n = f1.n
    x = points(n)
    xi = frequencies(n)
    outer = np.outer(f1.coefficients, f2.coefficients)
    out = np.empty(n, dtype=complex)
    cache: dict[int, np.ndarray] = {}
    for k in range(n):
        c = int(cutoff.values[k])
        if c not in cache:
            cache[c] = _resolve(family, c).values * outer
        ek = np.exp(2j * np.pi * x[k] * xi)
        out[k] = ek @ cache[c] @ ek
    return GridFunction(out)


def _resolve(family: SymbolFamily, c: int) -> Symbol2D:
    return family if isinstance(family, Symbol2D) else family(c)


def _slice(values: np.ndarray, f1: Spectrum, f2: Spectrum) -> np.ndarray:
    n = f1.n
    g = values * np.outer(f1.coefficients, f2.coefficients)
    # anti-diagonal a + b = s carries frequency xi1 + xi2 = s - N; fold mod N on the grid
    s = np.add.outer(np.arange(n), np.arange(n)).ravel()
    diag = np.bincount(s, weights=g.real.ravel(), minlength=2 * n - 1) + 1j * np.bincount(
        s, weights=g.imag.ravel(), minlength=2 * n - 1
    )
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, (np.arange(2 * n - 1) - n) % n, diag)
    return np.fft.ifft(folded) * n


def fft_fast_path(
    m: SymbolFamily, f1: Spectrum, f2: Spectrum, cutoffs: CutoffFunction | None = None
) -> GridFunction:
    """Same values as the direct sum; one O(N log N) transform per distinct cutoff slice."""
    n = f1.n
    if cutoffs is None:
        sym = m if isinstance(m, Symbol2D) else None
        if sym is None:
            raise ValueError("a symbol family needs cutoffs")
        if not np.any(sym.values):
            return GridFunction(np.zeros(n))
        return GridFunction(_slice(sym.values, f1, f2))
    out = np.zeros(n, dtype=complex)
    for c in np.unique(cutoffs.values):
        sym = _resolve(m, int(c))
        if not np.any(sym.values):
            continue
        mask = cutoffs.values == c
        out[mask] = _slice(sym.values, f1, f2)[mask]
    return GridFunction(out)


def maximal_modulated_apply(m: Symbol2D, f1: Spectrum, f2: Spectrum) -> GridFunction:
    """max over wrapped translations a, b of |T_{m(. - a, . - b)}(f1, f2)(x_k)|.

    For each x_k the translated sums form a cyclic 2-D correlation of m with
    the rank-one array u_k(xi1) v_k(xi2), computed with a batched FFT.
    """
    n = f1.n
    e = _phases(n)
    u = e * f1.coefficients
    v = e * f2.coefficients
    a = u[:, :, None] * v[:, None, :]
    # reversed symbol: m_rev[i, j] = m[-i, -j] on storage indices
    m_rev = np.roll(m.values[::-1, ::-1], 1, axis=(0, 1))
    corr = np.fft.ifft2(np.fft.fft2(a, axes=(1, 2)) * np.fft.fft2(m_rev)[None], axes=(1, 2))
    return GridFunction(np.abs(corr).reshape(n, -1).max(axis=1))


def translate_symbol(m: Symbol2D, a: int, b: int) -> Symbol2D:
    """tau_{(a,b)} m with wrap-around on the frequency grid."""
    return Symbol2D(np.roll(m.values, (a, b), axis=(0, 1)), singular_set=m.singular_set, cutoff=m.cutoff)


def benchmark(sizes=(32, 64, 128), repeats: int = 3, seed: int = 0, out_csv: str | None = None) -> list[dict]:
    """Wall time of the direct per-point oracle against the fast path on the cone family."""
    from .symbols import cone_indicator

    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        f1 = Spectrum(rng.normal(size=n) + 1j * rng.normal(size=n))
        f2 = Spectrum(rng.normal(size=n) + 1j * rng.normal(size=n))
        cut = CutoffFunction(rng.integers(-n // 2, n // 2 + 1, size=n))
        fam = lambda c, n=n: cone_indicator(n, c)
        for name, fn in (("oracle", multiplier_apply_linearized), ("fast", fft_fast_path)):
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                fn(fam, f1, f2, cut)
                best = min(best, time.perf_counter() - t0)
            rows.append({"N": n, "path": name, "seconds": best})
    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["N", "path", "seconds"])
            w.writeheader()
            w.writerows(rows)
    return rows
