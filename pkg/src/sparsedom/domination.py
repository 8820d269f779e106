"""Positive dyadic shifts built from a sparse family, and the pointwise domination run."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from .czop import CutoffSpec, KernelSpec, SMOOTH, eps_grid, maximal_truncation
from .grid import Box, ancestor, cover_cube, dilate
from .lerner import SparseFamily, build_sparse, default_lambda, subgrid
from .signal import GridFunction, maximal
from .variation import vq_operator
from .weights import CubeFamily, ainfty, box_integrals, joint_ap, weighted_norm


@dataclass(frozen=True)
class PositiveShift:
    """``S φ = Σ_R 1_R ⨍_{R^{(k)}} φ`` over distinct cubes ``R`` of one grid ``D^u``."""

    u: tuple
    k: int
    pairs: tuple  # ((R, R^{(k)}), ...)

    def __post_init__(self):
        for R, A in self.pairs:
            if A != ancestor(R, self.k):
                raise ValueError("second entry of every pair must be the k-th ancestor")


def rho_map(fam: SparseFamily, k: int) -> dict:
    """Split the family by the shift of its covering cube.

    Returns ``{u: [(Q, R), ...]}`` with ``Q ⊆ R``, ``2^k Q ⊆ R^{(k)}`` and
    ``ℓ(R) = 4ℓ(Q)``; raises ``AssertionError`` if any of that fails.
    """
    out: dict = {}
    for Q in fam.cubes:
        box = fam.box(Q)
        _, R = cover_cube(box, k)
        assert R.contains(box), f"{R} does not contain {box}"
        assert ancestor(R, k).contains(dilate(box, 2.0 ** k)), "dilate(Q, 2^k) escapes R^(k)"
        assert R.side == 4 * Fraction(box.side), "cover side must be 4 l(Q) for dyadic Q"
        out.setdefault(R.u, []).append((Q, R))
    for u, lst in out.items():
        counts: dict = {}
        for _, R in lst:
            counts[R] = counts.get(R, 0) + 1
        assert max(counts.values()) <= 4 ** fam.d, "a cover cube has more than 4^d preimages"
    return out


def build_shifts(fam: SparseFamily, k: int, rho: Optional[dict] = None) -> list:
    """The ``3^d`` (at most) positive shifts ``S^u_k`` of the family."""
    if rho is None:
        rho = rho_map(fam, k)
    shifts = []
    for u in sorted(rho):
        Rs = sorted({R for _, R in rho[u]}, key=lambda R: (R.j, R.m))
        shifts.append(PositiveShift(u, k, tuple((R, ancestor(R, k)) for R in Rs)))
    return shifts


def _bounds(cubes) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([[float(a) for a in c.lower()] for c in cubes], dtype=float)
    hi = np.array([[float(a) for a in c.upper()] for c in cubes], dtype=float)
    return lo, hi


def _axis_fractions(edges: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> sparse.csr_matrix:
    """Sparse ``(N, n)`` matrix of ``|cell ∩ [lo, hi)| / h``."""
    n = len(edges) - 1
    h = edges[1] - edges[0]
    i0 = np.clip(np.floor((lo - edges[0]) / h).astype(int), 0, n)
    i1 = np.clip(np.ceil((hi - edges[0]) / h).astype(int), 0, n)
    counts = np.maximum(i1 - i0, 0)
    rows = np.repeat(np.arange(len(lo)), counts)
    cols = np.concatenate([np.arange(a, b) for a, b in zip(i0, i1)]) if len(lo) else np.zeros(0, int)
    ov = (np.minimum(edges[cols + 1], hi[rows]) - np.maximum(edges[cols], lo[rows])) / h
    keep = ov > 0
    return sparse.csr_matrix((ov[keep], (rows[keep], cols[keep])), shape=(len(lo), n))


def shift_apply(S: PositiveShift, phi: GridFunction) -> GridFunction:
    """Cellwise ``Σ_R frac(cell ∩ R) ⨍_{R^{(k)}} φ`` with ``φ`` extended by zero."""
    if not S.pairs:
        return phi.with_values(np.zeros_like(phi.values))
    d = phi.d
    R_lo, R_hi = _bounds([R for R, _ in S.pairs])
    A_lo, A_hi = _bounds([A for _, A in S.pairs])
    vol = np.prod(A_hi - A_lo, axis=1)
    dlo, dhi = phi.domain.bounds()
    c_lo = np.clip(A_lo, dlo, dhi)
    c_hi = np.clip(A_hi, dlo, dhi)
    inside = np.all(c_hi > c_lo, axis=1)
    vals = np.zeros(len(S.pairs))
    if inside.any():
        fam = CubeFamily(c_lo[inside], c_hi[inside])
        vals[inside] = box_integrals(phi, fam) / vol[inside]
    fr = [_axis_fractions(phi.edges(a), R_lo[:, a], R_hi[:, a]) for a in range(d)]
    if d == 1:
        out = fr[0].T @ vals
    elif d == 2:
        out = (fr[0].T @ sparse.diags(vals) @ fr[1]).toarray()
    else:
        raise ValueError("only d in {1, 2} is supported")
    return phi.with_values(np.asarray(out).reshape(phi.values.shape))


def shift_norm_check(S: PositiveShift, p: float, trials) -> float:
    """``max ‖Sφ‖_p / ‖φ‖_p`` over the trial functions."""
    if not (p > 1 and math.isfinite(p)):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    best = 0.0
    for phi in trials:
        den = phi.lp_norm(p)
        if den > 0:
            best = max(best, shift_apply(S, phi).lp_norm(p) / den)
    return best


def weight_constants(w, sigma, p: float, fam: CubeFamily) -> dict:
    """``[w,σ]_{A_p}``, ``[w]_{A_∞}`` and ``[σ]_{A_∞}`` over ``fam``."""
    return {"joint_ap": joint_ap(w, sigma, p, fam), "ainfty_w": ainfty(w, fam),
            "ainfty_sigma": ainfty(sigma, fam)}


def prop_s_ratio(S: PositiveShift, w, sigma, f: GridFunction, p: float,
                 fam: Optional[CubeFamily] = None, consts: Optional[dict] = None) -> dict:
    """``‖S(fσ)‖_{L^p(w)}/‖f‖_{L^p(σ)}`` against ``(1+k)[w,σ]^{1/p}([w]_∞^{1/p'} + [σ]_∞^{1/p})``.

    ``consts`` (from :func:`weight_constants`) skips recomputing the characteristics.
    """
    if consts is None:
        if fam is None:
            raise ValueError("need either a cube family or precomputed constants")
        consts = weight_constants(w, sigma, p, fam)
    pp = p / (p - 1.0)
    fs = f.with_values(f.values * sigma.values)
    lhs = weighted_norm(shift_apply(S, fs), w, p) / weighted_norm(f, sigma, p)
    bound = (1 + S.k) * consts["joint_ap"] ** (1 / p) * (consts["ainfty_w"] ** (1 / pp)
                                                        + consts["ainfty_sigma"] ** (1 / p))
    return {"k": S.k, "lhs": lhs, **consts, "bound": bound, "ratio": lhs / bound}


def default_kmax(Q0: Box, h: float) -> int:
    """Smallest ``k`` with ``2^k h >= 4 diam(Q0)``, plus 2."""
    diam = Q0.side * math.sqrt(Q0.d)
    return max(0, math.ceil(math.log2(4 * diam / h) - 1e-12)) + 2


def fitted_constant(lhs: np.ndarray, dominator: np.ndarray) -> float:
    """``max lhs / dominator`` with the floor ``1e-14 ‖lhs‖_∞`` on the denominator."""
    top = float(np.abs(lhs).max(initial=0.0))
    if top == 0:
        return 0.0
    return float(np.max(lhs / np.maximum(dominator, 1e-14 * top)))


@dataclass
class DominationReport:
    lhs: GridFunction
    mf: GridFunction
    shift_sum: GridFunction
    fitted_C: float
    K_max: int
    contributions: list = field(repr=False)  # cellwise ω(2^-k) Σ_u S^u_k|f| on Q0
    contribution_norms: list = field(default_factory=list)
    family_size: int = 0
    mode: str = "maximal"

    def fitted_C_at(self, K: int) -> float:
        """Fitted constant if the k-sum stopped at ``K``."""
        if K > self.K_max:
            raise ValueError("cannot extend beyond the computed K_max")
        dom = self.mf.values + sum(self.contributions[: K + 1])
        return fitted_constant(self.lhs.values, dom)

    def to_json(self) -> dict:
        return {"mode": self.mode, "fitted_C": self.fitted_C, "K_max": self.K_max,
                "family_size": self.family_size,
                "contribution_norms": [float(x) for x in self.contribution_norms],
                "Q0": self.lhs.domain.to_json(), "n": self.lhs.n}


def dominate(K: KernelSpec, f: GridFunction, Q0: Optional[Box] = None, cut: CutoffSpec = SMOOTH,
             lam: Optional[float] = None, K_max: Optional[int] = None, mode: str = "maximal",
             q: float = 3.0, eps=None, lhs_full: Optional[GridFunction] = None) -> DominationReport:
    """Assemble ``Mf + Σ_u Σ_{k<=K_max} ω(2^{-k}) S^u_k|f|`` and fit it against the operator.

    ``mode`` is ``"maximal"`` (``T_*^φ f``) or ``"variation"`` (``V_q^φ T f``);
    the assembly is identical, only the left-hand side changes.
    """
    if Q0 is None:
        Q0 = f.domain
    f0 = subgrid(f, Q0)
    outside = np.abs(f.values).sum() * f.cell_volume - np.abs(f0.values).sum() * f0.cell_volume
    if outside > 1e-12 * max(np.abs(f.values).sum() * f.cell_volume, 1e-300):
        raise ValueError("supp f must lie in Q0")
    if lam is None:
        lam = default_lambda(f.d)
    if K_max is None:
        K_max = default_kmax(Q0, f.h)
    if eps is None:
        eps = eps_grid(f)
    if lhs_full is None:
        if mode == "maximal":
            lhs_full = maximal_truncation(K, cut, f, eps)
        elif mode == "variation":
            lhs_full = vq_operator(K, cut, f, q, eps)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    lhs = subgrid(lhs_full, Q0)
    mf = subgrid(maximal(f), Q0)
    absf = f.abs()
    zero = np.zeros(lhs.values.shape)
    if not np.any(lhs.values):
        return DominationReport(lhs, mf, lhs.with_values(zero), 0.0, K_max,
                                [zero] * (K_max + 1), [0.0] * (K_max + 1), 1, mode)
    fam = build_sparse(lhs, lam)
    contributions, norms = [], []
    for k in range(K_max + 1):
        total = np.zeros(f.values.shape)
        for S in build_shifts(fam, k):
            total += shift_apply(S, absf).values
        c = float(K.omega(2.0 ** -k)) * subgrid(f.with_values(total), Q0).values
        contributions.append(c)
        norms.append(float(np.sqrt((c ** 2).sum() * f.cell_volume)))
    shift_sum = sum(contributions)
    C = fitted_constant(lhs.values, mf.values + shift_sum)
    return DominationReport(lhs, mf, lhs.with_values(shift_sum), C, K_max, contributions, norms,
                            len(fam.cubes), mode)
