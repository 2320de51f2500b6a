from fractions import Fraction

import numpy as np
import pytest

from bicarleson.budgets import ConfigurationError
from bicarleson.symbols import (
    DEFAULT_QUAD,
    Quadrature,
    Symbol2D,
    averaged_cutoff,
    check_mmh,
    cone_count,
    cone_indicator,
    decompose_cone,
    exact_average,
    fourier_factorize,
    m_doubleprime_regime,
    m_prime_regime,
    normalization,
    phi_hat,
    whitney_decompose,
    whitney_partition,
    whitney_sum,
)
from bicarleson.tiles import check_rank1, is_sparse, split_rank1

N = 64


@pytest.fixture(scope="module")
def cones():
    return {c: decompose_cone(N, c) for c in (0, 8, 16)}


@pytest.fixture(scope="module")
def refined():
    return {c: decompose_cone(N, c, DEFAULT_QUAD.refined()) for c in (0, 8, 16)}


def test_cone_indicator_examples():
    assert not np.any(cone_indicator(32, -16).values)
    assert cone_indicator(32, 5).at(1, 3) == 1
    assert cone_indicator(32, 3).at(1, 3) == 0
    for c in range(-16, 17):
        count = sum(1 for a in range(-16, 16) for b in range(-16, 16) if a < b < c)
        assert cone_indicator(32, c).values.real.sum() == count == cone_count(32, c)
    with pytest.raises(ValueError):
        cone_indicator(32, 17)


def test_symbol_rejects_unknown_tag():
    with pytest.raises(ValueError):
        Symbol2D(np.zeros((4, 4)), "diagonal")


def test_whitney_excludes_diagonal_and_sums_to_one():
    assert whitney_sum(np.array([[3.0, 3.0, -6.0]]))[0] == 0
    far = np.array([[-20.0, 20.0, 0.0], [-5.0, 30.0, -25.0], [1.0, 9.0, -10.0]])
    assert np.allclose(whitney_sum(far), 1, atol=1e-6)


def test_whitney_cubes_admissible():
    cubes = whitney_decompose((0, 0, 0), n_grid=32)
    assert cubes
    for q in cubes:
        assert q.whitney_ok()
        assert q.intersects_plane()


def test_whitney_infeasible_constants():
    with pytest.raises(ConfigurationError):
        whitney_partition(32, (4, 5))
    with pytest.raises(ConfigurationError):
        whitney_partition(32, (2, 1))


def test_whitney_rank1_refinement():
    cubes = [c.as_cube() for c in whitney_decompose((0, Fraction(1, 3), Fraction(2, 3)), n_grid=32)]
    parts = split_rank1(cubes)
    assert sum(len(p) for p in parts) == len(cubes)
    for p in parts:
        assert is_sparse(p)[0]
        assert check_rank1(p)[0]


def test_fourier_factorization_tail():
    cube = whitney_decompose((0, 0, 0), n_grid=32)[0]
    c, tail, err = fourier_factorize(cube)
    assert np.isfinite(tail) and tail < 1
    assert err < 1


def test_averaged_cutoff_limits():
    far_below = averaged_cutoff(0, [-200.0, -50.0])
    assert np.all(np.abs(far_below - 1) < 1e-3)
    assert np.all(averaged_cutoff(0, [0.0, 3.0, 40.0]) == 0)


def test_averaged_cutoff_refinement():
    xi = np.array([-3.0, -10.0, -17.5])
    q = Quadrature(16, 4)
    vals = [averaged_cutoff(0, xi, q), averaged_cutoff(0, xi, q.refined()), averaged_cutoff(0, xi, q.refined().refined())]
    d1, d2 = np.abs(vals[1] - vals[0]).max(), np.abs(vals[2] - vals[1]).max()
    assert d2 <= 0.5 * d1 + 1e-12
    assert abs(1 / normalization(q.refined().refined().refined()) - exact_average()) < 1e-3 * exact_average()


def test_phi_hat_support():
    x = np.linspace(-0.3, 0.3, 601)
    v = phi_hat(x)
    assert np.all(v[np.abs(x) > 1 / 8] == 0)
    assert np.all(v[np.abs(x) <= 1 / 16] == 1)


@pytest.mark.parametrize("c", [0, 8, 16])
def test_exact_identity(cones, c):
    d = cones[c]
    total = d.m_prime.values + d.m_doubleprime.values + d.m_tripleprime.values
    assert np.array_equal(total, d.chi.values)


@pytest.mark.parametrize("c", [0, 8, 16])
def test_supports_and_bounds(cones, c):
    d = cones[c]
    h = N // 2
    a, b = np.meshgrid(np.arange(-h, h), np.arange(-h, h), indexing="ij")
    assert np.abs(d.m_prime.values[a >= b]).max() <= 1e-8
    assert np.abs(d.m_prime.values[(a + b) / 2 > c + 4]).max() <= 1e-8
    assert np.abs(d.m_doubleprime.values[b >= c]).max() <= 1e-8
    assert np.abs(d.m_doubleprime.values[a > c]).max() <= 1e-8
    for s in (d.m_prime, d.m_doubleprime, d.m_tripleprime):
        assert s.sup() <= 1 + 1e-6


@pytest.mark.parametrize("c", [0, 8, 16])
def test_regimes_and_refinement(cones, refined, c):
    rp, rpp = m_prime_regime(N, c), m_doubleprime_regime(N, c)
    assert rp.any() and rpp.any()
    e1 = np.abs(cones[c].m_prime.values[rp] - 1).max()
    e2 = np.abs(cones[c].m_doubleprime.values[rpp] - 1).max()
    f1 = np.abs(refined[c].m_prime.values[rp] - 1).max()
    f2 = np.abs(refined[c].m_doubleprime.values[rpp] - 1).max()
    assert e1 <= 1e-3 and e2 <= 1e-3
    assert f1 <= e1 / 2 and f2 <= e2 / 2


def test_mmh_trivial_and_bump():
    one = check_mmh(Symbol2D(np.ones((32, 32))))
    assert one.per_order[0] == 1 and one.per_order[1] == 0 and one.per_order[2] == 0
    h = 16
    a, b = np.meshgrid(np.arange(-h, h), np.arange(-h, h), indexing="ij")
    bump = Symbol2D(np.exp(-(a**2 + b**2) / 20.0))
    near = check_mmh(bump, exclude_radius=0)
    far = check_mmh(bump, exclude_radius=8)
    for k in (0, 1, 2):
        assert np.isfinite(near.per_order[k])
        assert far.per_order[k] <= near.per_order[k]
    with pytest.raises(IndexError):
        check_mmh(bump, center=(16, 0))
    with pytest.raises(ValueError):
        check_mmh(bump, max_order=4)


def test_mmh_uniform_in_cutoff(cones):
    per = [check_mmh(cones[c].m_tripleprime, center=(c, c), max_order=2).per_order for c in (0, 8, 16)]
    for k in (0, 1, 2):
        vals = [p[k] for p in per]
        assert max(vals) <= 2 * min(vals)


def test_csv_export(tmp_path):
    s = cone_indicator(8, 2)
    s.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "xi1,xi2,re,im" and len(lines) == 65
