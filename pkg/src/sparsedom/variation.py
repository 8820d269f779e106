"""q-variation of sequences and of the smooth truncation family."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .czop import CutoffSpec, KernelSpec, convolve_family, eps_grid, truncations
from .signal import GridFunction


@dataclass(frozen=True)
class VariationResult:
    value: float
    witness: tuple


def _check_q(q):
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")


def vq_sequence(y, q: float) -> VariationResult:
    """``sup (Σ |y_{i_{k+1}} - y_{i_k}|^q)^{1/q}`` over increasing index chains.

    Dynamic programme ``best[j] = max_{i<j} best[i] + |y_j - y_i|^q``.
    """
    _check_q(q)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("need a non-empty 1-d sequence")
    n = y.size
    best = np.zeros(n)
    prev = np.full(n, -1)
    for j in range(1, n):
        cand = best[:j] + np.abs(y[j] - y[:j]) ** q
        i = int(np.argmax(cand))
        best[j], prev[j] = cand[i], i
    j = int(np.argmax(best))
    chain = [j]
    while prev[chain[-1]] >= 0:
        chain.append(int(prev[chain[-1]]))
    return VariationResult(float(best[j] ** (1.0 / q)), tuple(reversed(chain)))


def vq_many(curves: np.ndarray, q: float) -> np.ndarray:
    """Row-wise q-variation of ``curves`` (last axis is the sequence)."""
    _check_q(q)
    c = np.asarray(curves, dtype=float)
    n = c.shape[-1]
    best = np.zeros(c.shape)
    for j in range(1, n):
        best[..., j] = (best[..., :j] + np.abs(c[..., j:j + 1] - c[..., :j]) ** q).max(axis=-1)
    return best.max(axis=-1) ** (1.0 / q)


def vq_operator(K: KernelSpec, cut: CutoffSpec, f: GridFunction, q: float, eps=None) -> GridFunction:
    """``V_q^φ T f`` at every cell: q-variation of the sampled truncation curve."""
    _check_q(q)
    if eps is None:
        eps = eps_grid(f)
    tr = truncations(K, cut, f, eps)
    return f.with_values(vq_many(np.moveaxis(tr, 0, -1), q))


def max_pairwise_gap(curves: np.ndarray) -> np.ndarray:
    c = np.asarray(curves, dtype=float)
    return c.max(axis=-1) - c.min(axis=-1)


def truncation_derivative(K: KernelSpec, cut: CutoffSpec, f: GridFunction, eps) -> np.ndarray:
    """``∂_ε T_ε^φ f`` at cell centers for smooth cutoffs.

    Uses ``∂_ε φ(r/ε) = -(r/ε²) φ'(r/ε)``, the same midpoint rule as
    :func:`truncations`.
    """
    if K.difference is None:
        raise ValueError("the derivative path needs a convolution kernel")
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    return convolve_family(f, lambda r, e: -(r / e ** 2) * cut.derivative(r / e), eps, K)
