"""Local mean oscillation decomposition on the dyadic grid of a root cube.

The stopping cubes are built by the exceptional-set argument: in an active
cube ``Q`` let ``E = {|g - m_g(Q)| > ((g - m_g(Q)) 1_Q)^*(λ|Q|)}``, so that
``|E| <= λ|Q|``; the children of ``Q`` are the maximal dyadic subcubes on which
``E`` has density above ``2^{-d-1}``.  Their union has measure at most
``2^{d+1}|E| <= |Q|/2`` whenever ``λ <= 2^{-d-2}``, which is exactly the
sparseness requirement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Box
from .signal import GridFunction

# cubes are addressed as (level, index) with level 0 the root and
# index a d-tuple of block coordinates at that level
Cube = tuple


def default_lambda(d: int) -> float:
    return 2.0 ** (-d - 2)


def _check(g: GridFunction, lam: float) -> int:
    n = g.n
    if n & (n - 1):
        raise ValueError(f"the root cube needs 2^k cells per side, got {n}")
    if not 0 < lam <= default_lambda(g.d) * (1 + 1e-12):
        raise ValueError(f"lambda must lie in (0, 2^-(d+2)], got {lam}")
    return int(round(math.log2(n)))


def _blocks(values: np.ndarray, level: int) -> np.ndarray:
    """Values grouped by dyadic block: shape ``(B,)*d + (s^d,)`` with ``B = 2^level``."""
    d = values.ndim
    n = values.shape[0]
    B = 2 ** level
    s = n // B
    v = values.reshape(sum(((B, s) for _ in range(d)), ()))
    order = tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2))
    return v.transpose(order).reshape((B,) * d + (s ** d,))


def block_oscillations(values: np.ndarray, level: int, lam: float) -> np.ndarray:
    """``ω_λ(g, Q)`` for every dyadic block at ``level``."""
    b = np.sort(_blocks(values, level), axis=-1)
    N = b.shape[-1]
    k = math.ceil((1.0 - lam) * N - 1e-9)
    widths = b[..., k - 1:] - b[..., :N - k + 1]
    return widths.min(axis=-1) / 2.0


def block_medians(values: np.ndarray, level: int) -> np.ndarray:
    b = np.sort(_blocks(values, level), axis=-1)
    N = b.shape[-1]
    return b[..., math.ceil(N / 2 - 1e-9) - 1]


@dataclass
class SparseFamily:
    """Stopping cubes inside ``root``, a cube with ``n`` cells per side."""

    root: Box
    n: int
    cubes: list = field(default_factory=list)
    parent: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.root.d

    @property
    def h(self) -> float:
        return self.root.side / self.n

    def side_cells(self, Q: Cube) -> int:
        return self.n >> Q[0]

    def box(self, Q: Cube) -> Box:
        s = self.side_cells(Q)
        corner = tuple(c + i * s * self.h for c, i in zip(self.root.corner, Q[1]))
        return Box(corner, s * self.h)

    def cell_slice(self, Q: Cube) -> tuple:
        s = self.side_cells(Q)
        return tuple(slice(i * s, (i + 1) * s) for i in Q[1])

    def dyadic_parent(self, Q: Cube) -> Cube:
        """``Q^{(1)}`` in the root grid; the root is its own parent."""
        level, idx = Q
        if level == 0:
            return Q
        return (level - 1, tuple(i // 2 for i in idx))

    def indicator(self, Q: Cube) -> np.ndarray:
        a = np.zeros((self.n,) * self.d, dtype=bool)
        a[self.cell_slice(Q)] = True
        return a

    def cores(self) -> dict:
        """``E(Q) = Q`` minus the strictly smaller family cubes inside it, as cell masks."""
        lev = np.array([Q[0] for Q in self.cubes])
        idx = np.array([Q[1] for Q in self.cubes]).reshape(len(self.cubes), self.d)
        out = {}
        for Q in self.cubes:
            shift = lev - Q[0]
            below = shift > 0
            inside = below & np.all((idx >> np.where(below, shift, 0)[:, None]) == np.array(Q[1]), axis=1)
            E = self.indicator(Q)
            for k in np.nonzero(inside)[0]:
                E[self.cell_slice(self.cubes[k])] = False
            out[Q] = E
        return out

    def to_json(self) -> dict:
        cores = self.cores()
        cv = self.h ** self.d
        return {
            "root": self.root.to_json(),
            "n": self.n,
            "cubes": [
                {"level": Q[0], "index": list(Q[1]), "box": self.box(Q).to_json(),
                 "core_measure": float(cores[Q].sum() * cv)}
                for Q in self.cubes
            ],
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def _inside(P: Cube, Q: Cube) -> bool:
    shift = P[0] - Q[0]
    return shift >= 0 and all((i >> shift) == j for i, j in zip(P[1], Q[1]))


def verify_sparse(fam: SparseFamily) -> dict:
    """Direct check of ``|E(Q)| >= |Q|/2`` and pairwise disjointness of the cores."""
    cores = fam.cores()
    half_ok = all(2 * E.sum() >= fam.side_cells(Q) ** fam.d for Q, E in cores.items())
    total = np.zeros((fam.n,) * fam.d, dtype=int)
    for E in cores.values():
        total += E
    inside_root = all(_inside(Q, (0, (0,) * fam.d)) for Q in fam.cubes)
    return {"half": bool(half_ok), "disjoint": bool(total.max(initial=0) <= 1),
            "inside": bool(inside_root), "count": len(fam.cubes)}


def _children(block: np.ndarray, lam: float, d: int) -> list:
    """Maximal dyadic subblocks where the exceptional set has density > 2^{-d-1}."""
    N = block.size
    flat = block.ravel()
    srt = np.sort(flat)
    med = srt[math.ceil(N / 2 - 1e-9) - 1]
    dev = np.abs(block - med)
    k = math.floor(lam * N + 1e-9)
    thr = np.sort(dev.ravel())[::-1][k] if k < N else 0.0
    E = dev > thr
    if not E.any():
        return []
    n = block.shape[0]
    levels = int(round(math.log2(n)))
    chosen = np.zeros((n,) * d, dtype=bool)
    out = []
    for lev in range(1, levels + 1):
        counts = _blocks(E.astype(np.int64), lev).sum(axis=-1)
        size = (n >> lev) ** d
        hit = counts * 2 ** (d + 1) > size
        taken = _blocks(chosen, lev).any(axis=-1)
        for idx in zip(*np.nonzero(hit & ~taken)):
            idx = tuple(int(i) for i in idx)
            out.append((lev, idx))
            s = n >> lev
            chosen[tuple(slice(i * s, (i + 1) * s) for i in idx)] = True
    return out


def build_sparse(g: GridFunction, lam: float | None = None, max_depth: int | None = None) -> SparseFamily:
    """Sparse stopping family for ``g`` on its own domain (the root cube)."""
    if lam is None:
        lam = default_lambda(g.d)
    depth_cap = _check(g, lam)
    if max_depth is not None:
        depth_cap = min(depth_cap, max_depth)
    fam = SparseFamily(g.domain, g.n)
    root = (0, (0,) * g.d)
    fam.cubes.append(root)
    stack = [root]
    while stack:
        Q = stack.pop()
        for lev, idx in _children(g.values[fam.cell_slice(Q)], lam, g.d):
            child = (Q[0] + lev, tuple(q * (1 << lev) + i for q, i in zip(Q[1], idx)))
            if child[0] > depth_cap:
                raise RuntimeError(f"stopping cubes below depth {depth_cap}: g is not resolved at cell scale")
            fam.cubes.append(child)
            fam.parent[child] = Q
            stack.append(child)
    fam.cubes.sort()
    return fam


def all_oscillations(g: GridFunction, lam: float) -> list:
    """``ω_λ(g, Q)`` for all dyadic subcubes, as one array per level."""
    levels = _check(g, lam)
    return [block_oscillations(g.values, lev, lam) for lev in range(levels + 1)]


def _upsample(a: np.ndarray, n: int) -> np.ndarray:
    s = n // a.shape[0]
    for axis in range(a.ndim):
        a = np.repeat(a, s, axis=axis)
    return a


def sharp_max(g: GridFunction, lam: float | None = None, osc=None) -> GridFunction:
    """``M^#_{λ,Q0} g``: at each cell the largest ``ω_λ(g, Q)`` over dyadic ``Q ∋ x``."""
    if lam is None:
        lam = default_lambda(g.d)
    if osc is None:
        osc = all_oscillations(g, lam)
    out = np.zeros(g.values.shape)
    for a in osc:
        out = np.maximum(out, _upsample(a, g.n))
    return g.with_values(out)


@dataclass
class LernerBound:
    rhs: GridFunction
    lhs: GridFunction
    fitted_C: float
    family: SparseFamily


def lerner_bound(g: GridFunction, lam: float | None = None, family: SparseFamily | None = None) -> LernerBound:
    """Right-hand side ``M^#g + Σ_L ω_λ(g, Q^{(1)}) 1_Q`` and the fitted constant."""
    if lam is None:
        lam = default_lambda(g.d)
    osc = all_oscillations(g, lam)
    if family is None:
        family = build_sparse(g, lam)
    rhs = sharp_max(g, lam, osc).values.copy()
    for Q in family.cubes:
        lev, idx = family.dyadic_parent(Q)
        rhs[family.cell_slice(Q)] += osc[lev][idx]
    med = block_medians(g.values, 0).item()
    lhs = np.abs(g.values - med)
    floor = 1e-14 * float(np.abs(g.values).max(initial=0.0))
    C = float(np.max(lhs / np.maximum(rhs, floor))) if floor > 0 else 0.0
    return LernerBound(g.with_values(rhs), g.with_values(lhs), C, family)


def subgrid(f: GridFunction, Q0: Box) -> GridFunction:
    """The cell-aligned piece of ``f`` on ``Q0``."""
    h = f.h
    start = (np.asarray(Q0.corner) - np.asarray(f.domain.corner)) / h
    size = Q0.side / h
    if not (np.allclose(start, np.round(start), atol=1e-9) and abs(size - round(size)) < 1e-9):
        raise ValueError("Q0 must be aligned with the cells of f")
    start = np.round(start).astype(int)
    m = int(round(size))
    if np.any(start < 0) or np.any(start + m > f.n):
        raise ValueError("Q0 must lie inside the domain of f")
    sl = tuple(slice(s, s + m) for s in start)
    return GridFunction(Q0, f.values[sl])
