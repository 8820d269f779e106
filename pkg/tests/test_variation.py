import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsedom.czop import SMOOTH, eps_grid, hilbert_kernel, truncations
from sparsedom.grid import Box
from sparsedom.signal import GridFunction
from sparsedom.variation import max_pairwise_gap, truncation_derivative, vq_many, vq_operator, vq_sequence


def brute(y, q):
    best = 0.0
    for m in range(2, len(y) + 1):
        for idx in itertools.combinations(range(len(y)), m):
            best = max(best, sum(abs(y[b] - y[a]) ** q for a, b in zip(idx, idx[1:])))
    return best ** (1 / q)


def test_examples():
    assert vq_sequence([0, 1, 2], 2).value == pytest.approx(2.0)
    assert vq_sequence([0, 1, 0, 1], 2).value == pytest.approx(math.sqrt(3))
    assert vq_sequence([5.0], 3).value == 0.0


def test_witness_realizes_value():
    y = np.array([0.0, 3, -1, 2, 2, -4])
    r = vq_sequence(y, 2.5)
    assert list(r.witness) == sorted(r.witness)
    assert sum(abs(y[b] - y[a]) ** 2.5 for a, b in zip(r.witness, r.witness[1:])) ** 0.4 == pytest.approx(r.value)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        vq_sequence([1, 2], 0.5)
    with pytest.raises(ValueError):
        vq_sequence([], 2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.sampled_from([1.0, 2.0, 2.5, 3.0, 4.0]))
def test_matches_subset_search(y, q):
    assert vq_sequence(y, q).value == pytest.approx(brute(y, q), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12))
def test_monotone_in_q_and_bounds(y):
    v = [vq_sequence(y, q).value for q in (1.0, 2.5, 3.0, 4.0)]
    assert all(b <= a + 1e-12 for a, b in zip(v, v[1:]))
    assert v[-1] >= max(y) - min(y) - 1e-12


def test_vq_many_matches_rows():
    c = np.random.default_rng(0).normal(size=(7, 11))
    assert np.allclose(vq_many(c, 3.0), [vq_sequence(r, 3.0).value for r in c])
    assert np.allclose(max_pairwise_gap(c), c.max(1) - c.min(1))


def test_operator_and_derivative():
    f = GridFunction.from_callable(lambda x: ((x > 0) & (x < 0.5)).astype(float), Box((-1.0,), 2.0), 256)
    K = hilbert_kernel()
    eps = eps_grid(f)
    v = vq_operator(K, SMOOTH, f, 3.0, eps).values
    tr = truncations(K, SMOOTH, f, eps)
    assert np.all(v >= tr.max(0) - tr.min(0) - 1e-12)
    e = np.array([0.2, 0.4])
    dt = 1e-6
    fd = (truncations(K, SMOOTH, f, e + dt) - truncations(K, SMOOTH, f, e - dt)) / (2 * dt)
    assert np.allclose(truncation_derivative(K, SMOOTH, f, e), fd, atol=1e-5)
    zero = f.with_values(np.zeros(256))
    assert not vq_operator(K, SMOOTH, zero, 3.0).values.any()
