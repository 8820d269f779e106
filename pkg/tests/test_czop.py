import math

import numpy as np
import pytest

from sparsedom.czop import (SHARP, SMOOTH, CutoffSpec, KernelSpec, TruncationCurve, audit_kernel, averaged_sharp,
                            dini_sums, eps_grid, hilbert_kernel, kernel_by_name, maximal_truncation,
                            riesz_kernel, smooth_sharp_gap, truncated_apply, truncated_kernel, truncations)
from sparsedom.grid import Box
from sparsedom.signal import GridFunction

LINE = Box((-1.0,), 2.0)


def indicator(a, b, n=1024, domain=LINE):
    return GridFunction.from_callable(lambda x: ((x >= a) & (x < b)).astype(float), domain, n)


def test_hilbert_sharp_truncation_closed_form():
    f = indicator(0.0, 0.5, 4096)
    eps = 0.1
    x = f.centers()
    Tf = truncated_apply(hilbert_kernel(), SHARP, eps, f).values
    # far to the left of the support the truncation is the full integral
    i = np.searchsorted(x, -0.3)
    exact = -math.log((0.5 - x[i]) / (0.0 - x[i])) / math.pi
    assert Tf[i] == pytest.approx(exact, abs=2e-3)


def test_hilbert_odd_symmetry():
    f = GridFunction.from_callable(lambda x: np.exp(-x * x), LINE, 512)
    Tf = truncated_apply(hilbert_kernel(), SMOOTH, 0.2, f).values
    assert np.allclose(Tf, -Tf[::-1], atol=1e-13)


def test_small_epsilon_rejected():
    f = indicator(0, 0.5, 64)
    with pytest.raises(ValueError):
        truncations(hilbert_kernel(), SMOOTH, f, [f.h])


def test_zero_function():
    f = GridFunction(LINE, np.zeros(64))
    assert not truncations(hilbert_kernel(), SMOOTH, f, eps_grid(f)).any()


def test_eps_grid_shape():
    f = indicator(0, 0.5, 256)
    e = eps_grid(f)
    assert e[0] == pytest.approx(4 * f.h)
    assert e[-1] <= 2 * f.domain.side * (1 + 1e-12)
    assert np.allclose(e[1:] / e[:-1], math.sqrt(2))


def _matrix_only(K):
    return KernelSpec(K.d, K.evaluate, K.size_constant, K.omega, None, K.name)


@pytest.mark.parametrize("cut", [SHARP, SMOOTH])
def test_fft_path_matches_matrix_path_1d(cut):
    f = GridFunction(LINE, np.random.default_rng(1).normal(size=128))
    K = hilbert_kernel()
    eps = eps_grid(f)
    assert np.allclose(truncations(K, cut, f, eps), truncations(_matrix_only(K), cut, f, eps), atol=1e-12)


def test_fft_path_matches_matrix_path_2d():
    f = GridFunction(Box((0.0, 0.0), 1.0), np.random.default_rng(2).normal(size=(12, 12)))
    K = riesz_kernel(1)
    eps = eps_grid(f)
    assert np.allclose(truncations(K, SMOOTH, f, eps), truncations(_matrix_only(K), SMOOTH, f, eps), atol=1e-12)


def test_kernel_registry():
    assert kernel_by_name("hilbert").name == "hilbert"
    assert kernel_by_name("riesz", component=1).d == 2
    with pytest.raises(ValueError):
        kernel_by_name("nope")
    with pytest.raises(ValueError):
        riesz_kernel(2)


def test_cutoff_profile():
    r = np.linspace(0, 2, 401)
    phi = SMOOTH(r)
    assert np.all(phi[r <= 0.5] == 0) and np.all(phi[r >= 1] == 1)
    assert np.all(np.diff(phi) >= 0)
    assert np.all((r >= 1) <= phi) and np.all(phi <= (r >= 0.5))
    # derivative integrates to one
    t = np.linspace(0.5, 1, 20001)
    assert np.trapezoid(SMOOTH.derivative(t), t) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        SHARP.derivative(r)
    with pytest.raises(ValueError):
        CutoffSpec("soft")


def test_truncated_kernel_agrees():
    K = hilbert_kernel()
    Ke = truncated_kernel(K, SMOOTH, 0.3)
    x, y = np.array([[0.1]]), np.array([[0.35]])
    assert Ke.evaluate(x, y) == pytest.approx(SMOOTH(0.25 / 0.3) * K.evaluate(x, y))


def test_audit_constants():
    a = audit_kernel(hilbert_kernel(), samples=4000)
    assert a["size"] == pytest.approx(1 / math.pi, rel=1e-9)
    assert 0 < a["smooth"] < 5
    b = audit_kernel(truncated_kernel(hilbert_kernel(), SMOOTH, 0.1), samples=4000, scale=0.1)
    c = audit_kernel(truncated_kernel(hilbert_kernel(), SMOOTH, 10.0), samples=4000, scale=10.0)
    assert b["smooth"] == pytest.approx(c["smooth"], rel=1e-6)


def test_dini_lipschitz():
    r = dini_sums(lambda t: t)
    assert r["I0"] == pytest.approx(1.0, abs=1e-10)
    assert r["I1"] == pytest.approx(1.0, abs=1e-10)
    assert r["S0"] == pytest.approx(2.0, abs=1e-12)
    assert r["S1"] == pytest.approx(2.0, abs=1e-12)


def test_dini_sqrt():
    r = dini_sums(np.sqrt)
    assert r["I0"] == pytest.approx(2.0, rel=1e-8)
    assert r["I1"] == pytest.approx(4.0, rel=1e-8)
    with pytest.raises(ValueError):
        dini_sums(lambda t: np.inf)


def test_averaged_sharp_reproduces_smooth():
    f = GridFunction(LINE, np.random.default_rng(3).normal(size=256))
    eps = eps_grid(f)
    eps = eps[eps >= 8 * f.h]
    K = hilbert_kernel()
    a = truncations(K, SMOOTH, f, eps)
    assert np.allclose(averaged_sharp(K, SMOOTH, f, eps), a, atol=1e-10)
    g = averaged_sharp(K, SMOOTH, f, eps, nodes=256)
    assert np.abs(g - a).max() < 0.1 * np.abs(a).max()


def test_smooth_sharp_gap_finite():
    f = indicator(0, 0.5, 512)
    C = smooth_sharp_gap(hilbert_kernel(), f)
    assert 0 < C < 10


def test_maximal_truncation_at_least_each():
    f = indicator(-0.2, 0.3, 256)
    eps = eps_grid(f)
    m = maximal_truncation(hilbert_kernel(), SMOOTH, f, eps).values
    assert np.all(m >= np.abs(truncations(hilbert_kernel(), SMOOTH, f, eps)).max(axis=0) - 1e-15)


def test_truncation_curve_validation():
    with pytest.raises(ValueError):
        TruncationCurve((0.0,), np.array([1.0, 1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        TruncationCurve((0.0,), np.array([1.0, 2.0]), np.array([0.0, np.nan]))
