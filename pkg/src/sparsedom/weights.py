"""Muckenhoupt characteristics over a finite family of shifted dyadic cubes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .grid import THIRDS, Box
from .signal import GridFunction, maximal


@dataclass(frozen=True, eq=False)
class CubeFamily:
    """Axis-parallel boxes ``[lo, hi)`` stored as arrays of shape ``(N, d)``."""

    lo: np.ndarray
    hi: np.ndarray
    key: str = ""

    def __len__(self):
        return self.lo.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.hi - self.lo, axis=1)


def shifted_family(domain: Box, n: int, shifts=(0, 1, 2), include_domain: bool = True) -> CubeFamily:
    """Cubes of the grids ``D^u`` with side in ``[h, domain side]``, clipped to the domain.

    ``u`` runs over ``shifts^d`` (indices into ``{0, 1/3, 2/3}``).  With
    ``shifts=(0,)`` only the standard dyadic grid is used.
    """
    d = domain.d
    h = domain.side / n
    dlo, dhi = domain.bounds()
    j_min = -math.floor(math.log2(domain.side) + 1e-12)
    j_max = -math.ceil(math.log2(h) - 1e-12)
    los, his = [], []
    for j in range(j_min, j_max + 1):
        s = 2.0 ** -j
        sign = -1 if j % 2 else 1
        for u in np.ndindex(*([len(shifts)] * d)):
            per_axis = []
            for a in range(d):
                off = sign * float(THIRDS[shifts[u[a]]])
                m = np.arange(math.floor(dlo[a] / s - off) - 1, math.ceil(dhi[a] / s - off) + 1)
                lo = np.maximum((m + off) * s, dlo[a])
                hi = np.minimum((m + off + 1) * s, dhi[a])
                keep = hi - lo > 1e-12 * h
                per_axis.append((lo[keep], hi[keep]))
            mesh_lo = np.meshgrid(*[p[0] for p in per_axis], indexing="ij")
            mesh_hi = np.meshgrid(*[p[1] for p in per_axis], indexing="ij")
            los.append(np.stack([g.ravel() for g in mesh_lo], axis=1))
            his.append(np.stack([g.ravel() for g in mesh_hi], axis=1))
    if include_domain:
        los.append(dlo[None, :])
        his.append(dhi[None, :])
    lo, hi = np.concatenate(los), np.concatenate(his)
    # clipping produces repeated boxes; keep one of each
    _, idx = np.unique(np.round(np.concatenate([lo, hi], axis=1) / h, 9), axis=0, return_index=True)
    idx = np.sort(idx)
    key = f"shifted{tuple(shifts)}:{domain.corner}:{domain.side}:{n}"
    return CubeFamily(lo[idx], hi[idx], key)


def box_integrals(f: GridFunction, fam: CubeFamily) -> np.ndarray:
    """``∫_Q f`` for every box of the family (exact for cell-constant ``f``)."""
    d = f.d
    C = f.values * f.cell_volume
    for a in range(d):
        C = np.cumsum(C, axis=a)
    C = np.pad(C, [(1, 0)] * d)
    if d == 1:
        e = f.edges(0)
        return np.interp(fam.hi[:, 0], e, C) - np.interp(fam.lo[:, 0], e, C)
    interp = RegularGridInterpolator([f.edges(a) for a in range(d)], C)
    total = np.zeros(len(fam))
    for corner in np.ndindex(*([2] * d)):
        pts = np.where(np.array(corner)[None, :] == 1, fam.hi, fam.lo)
        sign = (-1) ** (d - sum(corner))
        total += sign * interp(pts)
    return total


def box_averages(f: GridFunction, fam: CubeFamily) -> np.ndarray:
    return box_integrals(f, fam) / fam.volumes


@dataclass(eq=False)
class Weight:
    """Strictly positive weight with an optional exact dual ``σ_p``.

    ``dual`` maps ``p`` to the cell averages of ``w^{1/(1-p)}`` when they are
    known analytically (power weights); otherwise the dual is taken cellwise.
    """

    w: GridFunction
    dual: Optional[Callable[[float], GridFunction]] = None
    name: str = "weight"
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not np.all(self.w.values > 0):
            raise ValueError("weights must be strictly positive")

    @property
    def values(self) -> np.ndarray:
        return self.w.values

    def sigma(self, p: float) -> GridFunction:
        _check_p(p)
        if self.dual is not None:
            return self.dual(p)
        return self.w.with_values(self.w.values ** (1.0 / (1.0 - p)))

    def scaled(self, c: float) -> "Weight":
        if not c > 0:
            raise ValueError("scale must be positive")
        dual = None
        if self.dual is not None:
            base = self.dual
            dual = lambda p: base(p).with_values(base(p).values * c ** (1.0 / (1.0 - p)))
        return Weight(self.w.with_values(self.w.values * c), dual, f"{c}*{self.name}")


def _check_p(p):
    if not (p > 1 and math.isfinite(p)):
        raise ValueError(f"p must lie in (1, inf), got {p}")


def joint_ap(w: Weight | GridFunction, sigma: Weight | GridFunction, p: float, fam: CubeFamily) -> float:
    """``sup_Q ⟨w⟩_Q ⟨σ⟩_Q^{p-1}`` over the family."""
    _check_p(p)
    wv = w.w if isinstance(w, Weight) else w
    sv = sigma.w if isinstance(sigma, Weight) else sigma
    if np.any(wv.values <= 0) or np.any(sv.values <= 0):
        raise ValueError("weights must be strictly positive")
    return float(np.max(box_averages(wv, fam) * box_averages(sv, fam) ** (p - 1.0)))


def ap_char(w: Weight, p: float, fam: CubeFamily) -> float:
    """``[w]_{A_p} = sup_Q ⟨w⟩_Q ⟨w^{1/(1-p)}⟩_Q^{p-1}`` over the family."""
    _check_p(p)
    key = ("ap", p, fam.key)
    if fam.key and key in w.cache:
        return w.cache[key]
    val = joint_ap(w.w, w.sigma(p), p, fam)
    if fam.key:
        w.cache[key] = val
    return val


def ainfty(w: Weight | GridFunction, fam: CubeFamily) -> float:
    """Fujii–Wilson ``sup_Q w(Q)^{-1} ∫_Q M(1_Q w)`` with ``M`` over subcubes of ``Q``."""
    g = w.w if isinstance(w, Weight) else w
    if np.any(g.values <= 0):
        raise ValueError("weights must be strictly positive")
    if isinstance(w, Weight) and fam.key and ("ainf", fam.key) in w.cache:
        return w.cache[("ainf", fam.key)]
    d, h = g.d, g.h
    origin = np.asarray(g.domain.corner)
    best = 0.0
    for lo, hi in zip(fam.lo, fam.hi):
        i0 = np.floor((lo - origin) / h + 1e-9).astype(int)
        i1 = np.ceil((hi - origin) / h - 1e-9).astype(int)
        sl = tuple(slice(a, b) for a, b in zip(i0, i1))
        frac = None
        for a in range(d):
            e = origin[a] + h * np.arange(i0[a], i1[a] + 1)
            ov = (np.minimum(e[1:], hi[a]) - np.maximum(e[:-1], lo[a])) / h
            frac = ov if frac is None else np.multiply.outer(frac, ov)
        sub = g.values[sl] * frac
        side = int(max(i1 - i0))
        pad = [(0, side - (b - a)) for a, b in zip(i0, i1)]
        local = GridFunction(Box(tuple(origin + i0 * h), side * h), np.pad(sub, pad))
        M = maximal(local).values[sl_from(pad)]
        val = float((M * frac).sum() / sub.sum())
        best = max(best, val)
    if isinstance(w, Weight) and fam.key:
        w.cache[("ainf", fam.key)] = best
    return best


def sl_from(pad):
    return tuple(slice(0, -p[1] if p[1] else None) for p in pad)


# --- constructors ---------------------------------------------------------

def _power_cell_averages_1d(alpha: float, edges: np.ndarray) -> np.ndarray:
    G = np.sign(edges) * np.abs(edges) ** (alpha + 1.0) / (alpha + 1.0)
    return np.diff(G) / np.diff(edges)


def _quarter_integral(alpha: float, A: float, B: float) -> float:
    """``∫_0^A ∫_0^B (x²+y²)^{α/2} dy dx`` in polar coordinates."""
    if A <= 0 or B <= 0:
        return 0.0
    c = alpha + 2.0
    th = math.atan2(B, A)
    f1 = lambda t: (A / math.cos(t)) ** c / c
    f2 = lambda t: (B / math.sin(t)) ** c / c
    a, _ = integrate.quad(f1, 0.0, th, epsabs=0, epsrel=1e-13)
    b, _ = integrate.quad(f2, th, math.pi / 2, epsabs=0, epsrel=1e-13)
    return a + b


def _power_cell_averages_2d(alpha: float, edges: np.ndarray) -> np.ndarray:
    h = edges[1] - edges[0]
    # Gauss-Legendre on cells away from the origin, polar quadrature on the rest
    xg, wg = np.polynomial.legendre.leggauss(8)
    mids = 0.5 * (edges[1:] + edges[:-1])
    pts = mids[:, None] + 0.5 * h * xg[None, :]
    X = pts[:, None, :, None]
    Y = pts[None, :, None, :]
    r2 = X ** 2 + Y ** 2
    with np.errstate(divide="ignore"):
        vals = np.where(r2 > 0, r2 ** (alpha / 2.0), 0.0)
    out = 0.25 * np.einsum("ijkl,k,l->ij", vals, wg, wg)
    near = np.nonzero((edges[:-1] <= 0) & (edges[1:] >= 0))[0]
    for i in near:
        for j in near:
            tot = 0.0
            for xs, ys in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                xa, xb = sorted((max(xs * edges[i], 0), max(xs * edges[i + 1], 0)))
                ya, yb = sorted((max(ys * edges[j], 0), max(ys * edges[j + 1], 0)))
                tot += (_quarter_integral(alpha, xb, yb) - _quarter_integral(alpha, xa, yb)
                        - _quarter_integral(alpha, xb, ya) + _quarter_integral(alpha, xa, ya))
            out[i, j] = tot / h ** 2
    return out


def power_weight(alpha: float, domain: Box, n: int) -> Weight:
    """``|x|^α`` as exact cell averages, with the exact dual ``|x|^{α/(1-p)}``."""
    d = domain.d
    if not alpha > -d:
        raise ValueError(f"|x|^alpha is not locally integrable for alpha={alpha} <= -{d}")
    edges = domain.corner[0] + (domain.side / n) * np.arange(n + 1)
    if any(c != domain.corner[0] for c in domain.corner):
        raise ValueError("power weights need a domain with equal corner coordinates")

    def averages(a):
        if a == 0:
            return np.ones((n,) * d)
        if d == 1:
            return _power_cell_averages_1d(a, edges)
        if d == 2:
            return _power_cell_averages_2d(a, edges)
        raise ValueError("only d in {1, 2} is supported")

    cache = {}

    def dual(p):
        _check_p(p)
        beta = alpha / (1.0 - p)
        if not beta > -d:
            raise ValueError(f"dual exponent {beta} is not locally integrable")
        if p not in cache:
            cache[p] = GridFunction(domain, averages(beta))
        return cache[p]

    return Weight(GridFunction(domain, averages(alpha)), dual, f"power({alpha:g})")


def step_weight(breakpoints, values, domain: Box, n: int) -> Weight:
    """Piecewise constant weight on ``d = 1`` with the given breakpoints."""
    if domain.d != 1:
        raise ValueError("step weights are one-dimensional")
    values = np.asarray(values, dtype=float)
    bps = np.asarray(breakpoints, dtype=float)
    if len(values) != len(bps) + 1:
        raise ValueError("need one more value than breakpoints")
    if np.any(values <= 0):
        raise ValueError("weights must be strictly positive")
    edges = domain.corner[0] + (domain.side / n) * np.arange(n + 1)
    knots = np.concatenate([[min(edges[0], bps.min(initial=edges[0])) - 1], bps,
                            [max(edges[-1], bps.max(initial=edges[-1])) + 1]])
    cum = np.concatenate([[0.0], np.cumsum(values * np.diff(knots))])
    G = np.interp(edges, knots, cum)
    return Weight(GridFunction(domain, np.diff(G) / np.diff(edges)), None, "step")


def weight_by_spec(spec: dict, domain: Box, n: int) -> Weight:
    """Weight from a config entry such as ``{"power": {"alpha": 0.5}}``."""
    if "power" in spec:
        return power_weight(float(spec["power"]["alpha"]), domain, n)
    if "step" in spec:
        s = spec["step"]
        return step_weight(s["breakpoints"], s["values"], domain, n)
    raise ValueError(f"unknown weight spec {spec}")


def weighted_norm(g: GridFunction, w: GridFunction | Weight, p: float) -> float:
    """``(h^d Σ |g|^p w)^{1/p}``."""
    wv = w.w if isinstance(w, Weight) else w
    return g.lp_norm(p, wv)


def prop_m_ratio(w: Weight, sigma: Weight, f: GridFunction, p: float, fam: CubeFamily) -> dict:
    """``‖M(fσ)‖_{L^p(w)} / (([w,σ]_{A_p}[σ]_{A_∞})^{1/p} ‖f‖_{L^p(σ)})``."""
    fs = f.with_values(f.values * sigma.values)
    lhs = weighted_norm(maximal(fs), w, p) / weighted_norm(f, sigma, p)
    jap = joint_ap(w, sigma, p, fam)
    ainf = ainfty(sigma, fam)
    bound = (jap * ainf) ** (1.0 / p)
    return {"lhs": lhs, "joint_ap": jap, "ainfty_sigma": ainf, "bound": bound, "ratio": lhs / bound}
