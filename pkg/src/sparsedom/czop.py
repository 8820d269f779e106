"""Calderón–Zygmund kernels, truncations, and Dini functionals.

Truncated operators are evaluated by midpoint quadrature at cell centers:
``T_ε^φ f(x_i) = h^d Σ_j φ(|x_i - y_j|/ε) K(x_i, y_j) f_j``.  For convolution
kernels the sum is a discrete convolution and is carried out with FFTs for
all ε of a grid at once; other kernels go through an explicit kernel matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft
from scipy import integrate

from .signal import GridFunction


@dataclass(frozen=True)
class KernelSpec:
    """A kernel ``K(x, y)`` with ``|K| <= size_constant |x-y|^{-d}`` and modulus ``omega``.

    ``evaluate`` takes two arrays of shape ``(..., d)``.  Convolution kernels
    may also supply ``difference`` acting on ``z = x - y`` which enables the
    fast path.
    """

    d: int
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    size_constant: float
    omega: Callable[[float], float]
    difference: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "kernel"
    params: dict = field(default_factory=dict)


def _omega_lipschitz(t):
    return np.asarray(t, dtype=float)


def hilbert_kernel() -> KernelSpec:
    """``K(x, y) = 1/(π(x-y))`` with ``ω(t) = t``."""

    def diff(z):
        z = np.asarray(z, dtype=float)[..., 0]
        with np.errstate(divide="ignore"):
            return np.where(z == 0, 0.0, 1.0 / (np.pi * np.where(z == 0, 1.0, z)))

    return KernelSpec(1, lambda x, y: diff(np.asarray(x) - np.asarray(y)), 1.0 / np.pi,
                      _omega_lipschitz, diff, "hilbert")


def riesz_kernel(component: int = 0) -> KernelSpec:
    """Planar Riesz kernel ``(x_j - y_j) / (2π |x-y|^3)``."""
    if component not in (0, 1):
        raise ValueError("component must be 0 or 1")
    c = 1.0 / (2.0 * np.pi)

    def diff(z):
        z = np.asarray(z, dtype=float)
        r = np.sqrt((z ** 2).sum(-1))
        safe = np.where(r == 0, 1.0, r)
        return np.where(r == 0, 0.0, c * z[..., component] / safe ** 3)

    return KernelSpec(2, lambda x, y: diff(np.asarray(x) - np.asarray(y)), c,
                      _omega_lipschitz, diff, "riesz", {"component": component})


KERNELS = {"hilbert": hilbert_kernel, "riesz": riesz_kernel}


def kernel_by_name(name: str, **params) -> KernelSpec:
    try:
        return KERNELS[name](**params)
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


# --- cutoffs -------------------------------------------------------------

def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_prime(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    """Radial cutoff ``φ(r)`` with ``1_{r>=1} <= φ <= 1_{r>=1/2}``."""

    kind: str = "smooth"

    def __post_init__(self):
        if self.kind not in ("sharp", "smooth"):
            raise ValueError(f"cutoff kind must be 'sharp' or 'smooth', got {self.kind!r}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "sharp":
            return (r >= 1.0).astype(float)
        return smoothstep(2.0 * r - 1.0)

    def derivative(self, r):
        """``φ'(r)``; only defined for the smooth profile."""
        if self.kind == "sharp":
            raise ValueError("the sharp cutoff has no derivative")
        return 2.0 * _smoothstep_prime(2.0 * np.asarray(r, dtype=float) - 1.0)


SHARP = CutoffSpec("sharp")
SMOOTH = CutoffSpec("smooth")


@dataclass(frozen=True)
class TruncationCurve:
    """Sampled map ``ε ↦ T_ε^φ f(x)`` at one point."""

    point: tuple
    epsilons: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float)
        if np.any(np.diff(eps) <= 0):
            raise ValueError("epsilons must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")


def eps_grid(f: GridFunction, base: float = 4.0, per_octave: int = 2,
             top: Optional[float] = None) -> np.ndarray:
    """Geometric grid ``base·h·2^{j/per_octave}`` up to ``2·diam(domain)``."""
    h = f.h
    if top is None:
        top = 2.0 * f.domain.side * math.sqrt(f.d)
    count = int(math.floor(per_octave * math.log2(top / (base * h)) + 1e-9)) + 1
    return base * h * 2.0 ** (np.arange(count) / per_octave)


def _check_eps(f: GridFunction, eps) -> np.ndarray:
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.size == 0:
        raise ValueError("empty epsilon grid")
    if np.any(eps < 4.0 * f.h * (1 - 1e-12)):
        raise ValueError(f"epsilon below 4h = {4 * f.h:g} is not resolved by the grid")
    return eps


def _offsets(f: GridFunction) -> np.ndarray:
    """Displacement vectors ``x_i - y_j`` over the full offset range, shape ``(2n-1,)*d + (d,)``."""
    m = f.h * np.arange(-(f.n - 1), f.n)
    mesh = np.meshgrid(*([m] * f.d), indexing="ij")
    return np.stack(mesh, axis=-1)


def convolve_family(f: GridFunction, weights: Callable, eps: np.ndarray, K: KernelSpec) -> np.ndarray:
    """``h^d Σ_j W_ε(x_i - y_j) K(x_i - y_j) f_j`` for every ε, by FFT.

    ``weights(r, e)`` gives the radial factor for distances ``r`` and a column
    of ε values ``e``.
    """
    n, d = f.n, f.d
    z = _offsets(f)
    r = np.sqrt((z ** 2).sum(-1))
    base = K.difference(z) * f.cell_volume
    fshape = [sfft.next_fast_len(3 * n - 2, real=True)] * d
    axes = tuple(range(1, d + 1))
    F = sfft.rfftn(f.values, fshape)
    out = np.empty((len(eps),) + (n,) * d)
    sl = (slice(None),) + tuple(slice(n - 1, 2 * n - 1) for _ in range(d))
    chunk = max(1, int(2e7 // base.size))
    for s in range(0, len(eps), chunk):
        e = eps[s:s + chunk].reshape((-1,) + (1,) * d)
        kern = weights(r[None], e) * base[None]
        full = sfft.irfftn(sfft.rfftn(kern, fshape, axes=axes) * F[None], fshape, axes=axes)
        out[s:s + chunk] = full[sl]
    return out


def _truncations_matrix(K: KernelSpec, cut: CutoffSpec, eps: np.ndarray, f: GridFunction) -> np.ndarray:
    pts = f.center_points().reshape(-1, f.d)
    fv = f.values.ravel() * f.cell_volume
    out = np.empty((len(eps), pts.shape[0]))
    rows = max(1, int(4e6 // pts.shape[0]))
    for s in range(0, pts.shape[0], rows):
        x = pts[s:s + rows, None, :]
        y = pts[None, :, :]
        r = np.sqrt(((x - y) ** 2).sum(-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            kxy = np.where(r > 0, K.evaluate(x, y), 0.0)
        for e_i, e in enumerate(eps):
            out[e_i, s:s + rows] = (cut(r / e) * kxy) @ fv
    return out.reshape((len(eps),) + f.values.shape)


def truncations(K: KernelSpec, cut: CutoffSpec, f: GridFunction, eps) -> np.ndarray:
    """All truncations ``T_ε^φ f`` for ``ε`` in ``eps``; shape ``(len(eps),) + (n,)*d``."""
    if K.d != f.d:
        raise ValueError(f"kernel dimension {K.d} does not match function dimension {f.d}")
    eps = _check_eps(f, eps)
    if not np.any(f.values):
        return np.zeros((len(eps),) + f.values.shape)
    if K.difference is not None:
        return convolve_family(f, lambda r, e: cut(r / e), eps, K)
    return _truncations_matrix(K, cut, eps, f)


def truncated_apply(K: KernelSpec, cut: CutoffSpec, eps: float, f: GridFunction) -> GridFunction:
    """``T_ε^φ f`` at cell centers."""
    return f.with_values(truncations(K, cut, f, [eps])[0])


def truncation_curve(K: KernelSpec, cut: CutoffSpec, f: GridFunction, eps, index) -> TruncationCurve:
    vals = truncations(K, cut, f, eps)[(slice(None),) + tuple(index)]
    point = tuple(f.centers(a)[i] for a, i in enumerate(index))
    return TruncationCurve(point, np.asarray(eps, dtype=float), vals)


def maximal_truncation(K: KernelSpec, cut: CutoffSpec, f: GridFunction, eps=None) -> GridFunction:
    """``sup_ε |T_ε^φ f|`` over the ε-grid."""
    if eps is None:
        eps = eps_grid(f)
    return f.with_values(np.abs(truncations(K, cut, f, eps)).max(axis=0))


def averaged_sharp(K: KernelSpec, cut: CutoffSpec, f: GridFunction, eps, nodes: Optional[int] = None) -> np.ndarray:
    """``∫ φ'(t) T_{εt} f dt`` assembled from sharp truncations.

    On the grid ``t ↦ T_{εt} f`` is piecewise constant with jumps where ``εt``
    meets a cell distance, so by default the integral is taken piece by piece
    (one sharp truncation per piece, weight ``φ(t_{i+1}) - φ(t_i)``).  With
    ``nodes`` a Gauss–Legendre rule on ``[1/2, 1]`` is used instead.  Each
    ``εt`` must be resolvable, so ``ε >= 8h``.
    """
    if cut.kind == "sharp":
        raise ValueError("needs a smooth cutoff")
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    out = np.empty((len(eps),) + f.values.shape)
    if nodes is not None:
        x, wts = np.polynomial.legendre.leggauss(nodes)
        t = 0.75 + 0.25 * x
        wts = 0.25 * wts * cut.derivative(t)
        tr = truncations(K, SHARP, f, (eps[:, None] * t[None, :]).ravel())
        return np.tensordot(wts, tr.reshape((len(eps), nodes) + f.values.shape), axes=([0], [1]))
    radii = np.unique(np.sqrt((_offsets(f) ** 2).sum(-1)))
    for i, e in enumerate(eps):
        inner = radii[(radii > e / 2) & (radii < e)] / e
        knots = np.concatenate([[0.5], inner, [1.0]])
        mids = 0.5 * (knots[1:] + knots[:-1])
        wts = np.diff(cut(knots))
        out[i] = np.tensordot(wts, truncations(K, SHARP, f, e * mids), axes=([0], [0]))
    return out


def truncated_kernel(K: KernelSpec, cut: CutoffSpec, eps: float) -> KernelSpec:
    """The truncated kernel ``φ(|x-y|/ε) K(x, y)`` as a kernel in its own right."""

    def evaluate(x, y):
        r = np.sqrt(((np.asarray(x) - np.asarray(y)) ** 2).sum(-1))
        return cut(r / eps) * K.evaluate(x, y)

    def difference(z):
        r = np.sqrt((np.asarray(z) ** 2).sum(-1))
        return cut(r / eps) * K.difference(z)

    return KernelSpec(K.d, evaluate, K.size_constant, K.omega, difference if K.difference else None,
                      f"{K.name}_trunc", dict(K.params, eps=eps, cutoff=cut.kind))


# --- audits and functionals -------------------------------------------

def audit_kernel(K: KernelSpec, samples: int = 20000, seed: int = 0, scale: float = 1.0) -> dict:
    """Fitted size and smoothness constants of ``K`` on random point triples.

    Distances are drawn log-uniformly in ``scale·[2^-6, 2^6]`` so that the
    reported constants reflect the scale invariance of the estimates.
    """
    rng = np.random.default_rng(seed)
    d = K.d
    x = rng.uniform(-1, 1, (samples, d)) * scale

    def direction(k):
        v = rng.normal(size=(k, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    r = scale * 2.0 ** rng.uniform(-6, 6, samples)
    y = x + r[:, None] * direction(samples)
    t = rng.uniform(0.0, 0.5, samples) * r
    xp = x + t[:, None] * direction(samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        size = np.abs(K.evaluate(x, y)) * r ** d
        dist = np.linalg.norm(x - y, axis=1)
        keep = dist > 2 * np.linalg.norm(x - xp, axis=1)
        om = np.asarray(K.omega(np.linalg.norm(x - xp, axis=1) / dist))
        diffs = np.abs(K.evaluate(x, y) - K.evaluate(xp, y)) + np.abs(K.evaluate(y, x) - K.evaluate(y, xp))
        smooth = np.where(keep & (om > 0), diffs * dist ** d / np.where(om > 0, om, 1.0), 0.0)
    return {"size": float(np.max(size)), "smooth": float(np.max(smooth))}


def dini_sums(omega: Callable, K_max: int = 60) -> dict:
    """Dyadic sums of ``ω(2^{-k})`` and the matching integrals.

    The integrals are computed after substituting ``t = e^{-s}``, which turns
    both into smooth integrals over ``[0, ∞)``.
    """
    w1 = float(np.asarray(omega(1.0)))
    if not math.isfinite(w1):
        raise ValueError("omega(1) must be finite")
    k = np.arange(K_max + 1)
    om = np.array([float(np.asarray(omega(2.0 ** -int(i)))) for i in k])
    S0 = float(om.sum())
    S1 = float((k * om).sum())
    g = lambda s: float(np.asarray(omega(math.exp(-s))))
    I0, _ = integrate.quad(g, 0, np.inf, epsabs=0, epsrel=1e-12, limit=500)
    I1, _ = integrate.quad(lambda s: s * g(s), 0, np.inf, epsabs=0, epsrel=1e-12, limit=500)
    return {"S0": S0, "S1": S1, "I0": float(I0), "I1": float(I1)}


def smooth_sharp_gap(K: KernelSpec, f: GridFunction, eps=None, mf: Optional[GridFunction] = None) -> float:
    """Fitted ``C`` in ``|T_* f - T_*^φ f| <= C·Mf`` on the grid."""
    from .signal import maximal

    if eps is None:
        eps = eps_grid(f)
    gap = np.abs(maximal_truncation(K, SHARP, f, eps).values - maximal_truncation(K, SMOOTH, f, eps).values)
    if mf is None:
        mf = maximal(f)
    floor = 1e-14 * max(np.abs(f.values).max(), 1e-300)
    return float(np.max(gap / np.maximum(mf.values, floor)))
