import numpy as np
import pytest
from hypothesis import given, strategies as st

from bicarleson.grid import CutoffFunction, GridFunction, Spectrum, forward_transform, inverse_transform, points
from bicarleson.operators import (
    benchmark,
    bht_apply,
    bicarleson_apply,
    carleson_apply,
    fft_fast_path,
    maximal_modulated_apply,
    multiplier_apply,
    multiplier_apply_linearized,
    translate_symbol,
)
from bicarleson.symbols import Symbol2D, cone_indicator, decompose_cone, half_plane_indicator


def spec(rng, n):
    return Spectrum(rng.normal(size=n) + 1j * rng.normal(size=n))


def mode(n, xi):
    return Spectrum.from_modes(n, {xi: 1})


def test_carleson_examples():
    n = 32
    x = points(n)
    full = carleson_apply(mode(n, -2), CutoffFunction.constant(n, n // 2))
    assert np.allclose(full.samples, np.exp(-4j * np.pi * x), atol=1e-13)
    assert np.allclose(carleson_apply(mode(n, 3), CutoffFunction.constant(n, 0)).samples, 0)


def test_carleson_maximal_oracle(rng):
    n = 64
    f = spec(rng, n)
    sums = np.array([carleson_apply(f, CutoffFunction.constant(n, c)).samples for c in range(-n // 2, n // 2 + 1)])
    assert sums.shape[0] == 65
    assert np.allclose(carleson_apply(f, "maximal").samples.real, np.abs(sums).max(axis=0), atol=1e-12)


def test_bht_examples(rng):
    n = 32
    x = points(n)
    assert np.allclose(bht_apply(mode(n, 1), mode(n, 5)).samples, np.exp(12j * np.pi * x), atol=1e-13)
    assert np.allclose(bht_apply(mode(n, 5), mode(n, 1)).samples, 0)
    f1, f2 = spec(rng, n), spec(rng, n)
    assert np.allclose(bht_apply(f1, f2).samples, multiplier_apply(half_plane_indicator(n), f1, f2).samples, atol=1e-10)


def test_bicarleson_examples(rng):
    n = 32
    x = points(n)
    g = bicarleson_apply(mode(n, 1), mode(n, 3), CutoffFunction.constant(n, 5))
    assert np.allclose(g.samples, np.exp(8j * np.pi * x), atol=1e-13)
    assert np.allclose(bicarleson_apply(mode(n, 1), mode(n, 3), CutoffFunction.constant(n, 3)).samples, 0)
    f1, f2 = spec(rng, n), spec(rng, n)
    top = bicarleson_apply(f1, f2, CutoffFunction.constant(n, n // 2))
    assert np.array_equal(top.samples, bht_apply(f1, f2).samples)
    allc = np.array([bicarleson_apply(f1, f2, CutoffFunction.constant(n, c)).samples for c in range(-n // 2, n // 2 + 1)])
    assert np.allclose(bicarleson_apply(f1, f2, "maximal").samples.real, np.abs(allc).max(axis=0), atol=1e-12)


def test_multiplier_examples(rng):
    n = 32
    f1, f2 = spec(rng, n), spec(rng, n)
    one = multiplier_apply(Symbol2D(np.ones((n, n))), f1, f2)
    prod = inverse_transform(f1).samples * inverse_transform(f2).samples
    assert np.allclose(one.samples, prod, atol=1e-10)
    assert np.allclose(multiplier_apply(Symbol2D(np.zeros((n, n))), f1, f2).samples, 0)
    cone = multiplier_apply(cone_indicator(n, 7), f1, f2)
    assert np.allclose(cone.samples, bicarleson_apply(f1, f2, CutoffFunction.constant(n, 7)).samples, atol=1e-10)


def test_maximal_modulated_examples(rng):
    n = 16
    f1, f2 = spec(rng, n), spec(rng, n)
    one = Symbol2D(np.ones((n, n)))
    assert np.allclose(maximal_modulated_apply(one, f1, f2).samples.real,
                       np.abs(multiplier_apply(one, f1, f2).samples), atol=1e-10)
    delta = np.zeros((n, n))
    delta[n // 2, n // 2] = 1
    flat = Spectrum(np.ones(n))
    assert np.allclose(maximal_modulated_apply(Symbol2D(delta), flat, flat).samples.real, 1, atol=1e-12)


def test_maximal_modulated_exhaustive(rng):
    n = 16
    m = decompose_cone(n, 0).m_tripleprime
    f1, f2 = spec(rng, n), spec(rng, n)
    brute = np.max([np.abs(multiplier_apply(translate_symbol(m, a, b), f1, f2).samples)
                    for a in range(n) for b in range(n)], axis=0)
    assert np.allclose(maximal_modulated_apply(m, f1, f2).samples.real, brute, atol=1e-10)


@pytest.mark.parametrize("n", [32, 64])
def test_fast_path_matches_oracle(rng, n):
    for _ in range(5):
        f1, f2 = spec(rng, n), spec(rng, n)
        cut = CutoffFunction(rng.integers(-n // 2, n // 2 + 1, size=n))
        fam = lambda c: cone_indicator(n, c)  # noqa: E731
        a = fft_fast_path(fam, f1, f2, cut).samples
        b = multiplier_apply_linearized(fam, f1, f2, cut).samples
        assert np.linalg.norm(a - b) <= 1e-9 * np.linalg.norm(b)
        c = bicarleson_apply(f1, f2, cut).samples
        assert np.linalg.norm(a - c) <= 1e-9 * np.linalg.norm(c)


def test_fast_path_zero_symbol(rng):
    f1, f2 = spec(rng, 32), spec(rng, 32)
    assert not np.any(fft_fast_path(Symbol2D(np.zeros((32, 32))), f1, f2).samples)


def test_symbol_split_consistency(rng):
    n, c = 32, 4
    d = decompose_cone(n, c)
    f1, f2 = spec(rng, n), spec(rng, n)
    parts = sum(multiplier_apply(s, f1, f2).samples for s in (d.m_prime, d.m_doubleprime, d.m_tripleprime))
    assert np.allclose(parts, multiplier_apply(cone_indicator(n, c), f1, f2).samples, atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_bilinear_scaling(seed, a):
    rng = np.random.default_rng(seed)
    n = 16
    f1, f2 = spec(rng, n), spec(rng, n)
    m = Symbol2D(rng.normal(size=(n, n)))
    lhs = multiplier_apply(m, Spectrum(a * f1.coefficients), f2).samples
    rhs = a * multiplier_apply(m, f1, f2).samples
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(st.integers(0, 2**32 - 1))
def test_linearized_below_maximal(seed):
    rng = np.random.default_rng(seed)
    n = 16
    f1, f2 = spec(rng, n), spec(rng, n)
    cut = CutoffFunction(rng.integers(-n // 2, n // 2 + 1, size=n))
    lin = np.abs(bicarleson_apply(f1, f2, cut).samples)
    assert np.all(lin <= bicarleson_apply(f1, f2, "maximal").samples.real + 1e-12)
    assert np.all(np.abs(carleson_apply(f1, cut).samples) <= carleson_apply(f1, "maximal").samples.real + 1e-12)


def test_benchmark_csv(tmp_path):
    rows = benchmark((32,), 1, 0, str(tmp_path / "bench.csv"))
    assert {r["path"] for r in rows} == {"oracle", "fast"}
    assert (tmp_path / "bench.csv").read_text().startswith("N,path,seconds")


def test_grid_function_roundtrip_helper(rng):
    f = GridFunction(rng.normal(size=32))
    assert np.allclose(inverse_transform(forward_transform(f)).samples, f.samples)
