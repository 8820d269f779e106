from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsedom.czop import hilbert_kernel
from sparsedom.domination import (PositiveShift, build_shifts, default_kmax, dominate, prop_s_ratio, rho_map,
                                  shift_apply, shift_norm_check)
from sparsedom.grid import Box, ShiftedDyadicCube, ancestor
from sparsedom.lerner import SparseFamily, build_sparse
from sparsedom.signal import GridFunction
from sparsedom.weights import power_weight, shifted_family

UNIT = Box((0.0,), 1.0)
WIDE = Box((-8.0,), 16.0)


def noise_family(seed=0, n=64):
    return build_sparse(GridFunction(UNIT, np.random.default_rng(seed).normal(size=n)))


def multiplicity_oracle(S, f):
    """Cellwise sum of exact overlap fractions of the cubes R."""
    h = Fraction(f.h)
    a0 = Fraction(f.domain.corner[0])
    out = np.zeros(f.n)
    for R, _ in S.pairs:
        (lo,), (hi,) = R.lower(), R.upper()
        for i in range(f.n):
            c0, c1 = a0 + i * h, a0 + (i + 1) * h
            out[i] += float(max(Fraction(0), min(c1, hi) - max(c0, lo)) / h)
    return out


def test_rho_single_cube():
    fam = SparseFamily(UNIT, 16, [(0, (0,))])
    rho = rho_map(fam, 0)
    assert sum(len(v) for v in rho.values()) == 1


@pytest.mark.parametrize("k", [0, 3, 6])
def test_rho_on_random_families(k):
    for seed in range(5):
        fam = noise_family(seed)
        rho = rho_map(fam, k)
        assigned = [Q for lst in rho.values() for Q, _ in lst]
        assert sorted(assigned) == sorted(fam.cubes)
        for lst in rho.values():
            for Q, R in lst:
                assert R.side == 4 * Fraction(fam.box(Q).side)


def test_rho_two_dimensional():
    g = GridFunction(Box((0.0, 0.0), 1.0), np.random.default_rng(1).normal(size=(16, 16)))
    fam = build_sparse(g)
    for k in (0, 2, 5):
        rho_map(fam, k)


def test_pairs_must_be_ancestors():
    R = ShiftedDyadicCube((0,), 0, (0,))
    with pytest.raises(ValueError):
        PositiveShift((0,), 1, ((R, R),))
    PositiveShift((0,), 1, ((R, ancestor(R, 1)),))


def test_ones_give_multiplicity():
    fam = noise_family()
    phi = GridFunction(WIDE, np.ones(1024))
    for S in build_shifts(fam, 0):
        assert np.allclose(shift_apply(S, phi).values, multiplicity_oracle(S, phi), atol=1e-12)


def test_zero_extension_fraction():
    R = ShiftedDyadicCube((0,), 0, (0,))
    S = PositiveShift((0,), 2, ((R, ancestor(R, 2)),))
    phi = GridFunction(UNIT, np.ones(8))
    out = shift_apply(S, phi).values
    # R = [0, 1) and its second ancestor has side 4, so the average of 1_[0,1) is 1/4
    assert np.allclose(out, 0.25)


def test_empty_shift_is_zero():
    S = PositiveShift((0,), 0, ())
    assert not shift_apply(S, GridFunction(UNIT, np.ones(4))).values.any()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 6))
def test_positive_monotone_linear(seed, k):
    rng = np.random.default_rng(seed)
    fam = noise_family(seed % 7)
    psi = GridFunction(WIDE, rng.uniform(0, 1, 1024))
    phi = psi.with_values(psi.values + rng.uniform(0, 1, 1024))
    for S in build_shifts(fam, k):
        a, b = shift_apply(S, phi).values, shift_apply(S, psi).values
        assert np.all(a >= b - 1e-12)
        assert np.allclose(shift_apply(S, phi.with_values(2 * phi.values - psi.values)).values, 2 * a - b,
                           atol=1e-12)


def test_norm_check():
    fam = noise_family()
    S = build_shifts(fam, 0)[0]
    phi = GridFunction(WIDE, np.ones(1024))
    r = shift_norm_check(S, 2.0, [phi])
    assert r == pytest.approx(shift_norm_check(S, 2.0, [phi.with_values(5 * phi.values)]))
    assert 0 < r <= 4
    for p in (1.0, np.inf):
        with pytest.raises(ValueError):
            shift_norm_check(S, p, [phi])


def indicator(n, Q0=Box((-1.0,), 2.0)):
    return GridFunction.from_callable(lambda x: ((x >= 0) & (x < 0.5)).astype(float), Q0, n)


def test_dominate_zero():
    f = GridFunction(Box((-1.0,), 2.0), np.zeros(64))
    r = dominate(hilbert_kernel(), f)
    assert r.fitted_C == 0.0


def test_dominate_indicator_refinement():
    K = hilbert_kernel()
    a = dominate(K, indicator(256))
    b = dominate(K, indicator(512))
    assert 0 < a.fitted_C < 10
    assert abs(b.fitted_C / a.fitted_C - 1) < 0.25
    assert np.all(a.lhs.values <= a.fitted_C * (a.mf.values + a.shift_sum.values) + 1e-12)
    assert a.fitted_C_at(a.K_max) == a.fitted_C
    assert abs(a.fitted_C_at(8) / a.fitted_C - 1) < 0.01
    data = a.to_json()
    assert data["K_max"] == a.K_max and len(data["contribution_norms"]) == a.K_max + 1


def test_dominate_variation_mode_and_errors():
    K = hilbert_kernel()
    f = indicator(256)
    r = dominate(K, f, mode="variation", q=3.0)
    assert 0 < r.fitted_C < 10
    with pytest.raises(ValueError):
        dominate(K, f, mode="bogus")
    with pytest.raises(ValueError):
        dominate(K, f, Q0=Box((-1.0,), 1.0))
    with pytest.raises(ValueError):
        r.fitted_C_at(r.K_max + 1)


def test_default_kmax():
    # 2^k h >= 4 diam with h = 1/128, diam = 2: k = 10, plus 2
    assert default_kmax(Box((-1.0,), 2.0), 1 / 128) == 12


def test_prop_s_ratio_fields():
    n = 256
    D = Box((-1.0,), 2.0)
    f = indicator(n)
    fam = build_sparse(f)
    S = build_shifts(fam, 1)[0]
    w = power_weight(0.5, D, n)
    r = prop_s_ratio(S, w, w.sigma(2.0), f, 2.0, shifted_family(D, n))
    assert r["k"] == 1 and r["bound"] > 0 and r["ratio"] > 0
    with pytest.raises(ValueError):
        prop_s_ratio(S, w, w.sigma(2.0), f, 2.0)
