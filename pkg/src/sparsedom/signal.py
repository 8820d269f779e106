"""Piecewise-constant grid functions and the scalar toolbox built on them.

Everything here treats a function as zero outside its domain box.  Averages
over cubes that stick out of the domain count the outside part with value 0
and full measure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter1d

from .grid import Box

# relative slack for comparing accumulated measures against thresholds
MEASURE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell-constant function on a uniform ``n^d`` grid over ``domain``.

    ``values`` has shape ``(n,) * d``; axis ``i`` runs along coordinate ``i``.
    """

    domain: Box
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = self.domain.d
        if v.ndim != d or len(set(v.shape)) != 1:
            raise ValueError(f"values must have shape (n,)*{d}, got {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return self.domain.side / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def axis_edges(self) -> np.ndarray:
        return self.domain.corner[0] + self.h * np.arange(self.n + 1)

    def edges(self, axis: int) -> np.ndarray:
        return self.domain.corner[axis] + self.h * np.arange(self.n + 1)

    def centers(self, axis: int = 0) -> np.ndarray:
        return self.domain.corner[axis] + self.h * (np.arange(self.n) + 0.5)

    def center_points(self) -> np.ndarray:
        """Cell centers as an array of shape ``(n,)*d + (d,)``."""
        axes = [self.centers(i) for i in range(self.d)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def lp_norm(self, p: float = 2.0, weight: "GridFunction | None" = None) -> float:
        a = np.abs(self.values) ** p
        if weight is not None:
            a = a * weight.values
        return float((a.sum() * self.cell_volume) ** (1.0 / p))

    def restrict(self, Q: Box) -> "GridFunction":
        """``1_Q f`` with partially covered cells scaled by their overlap fraction."""
        return self.with_values(self.values * overlap_weights(self, Q) / self.cell_volume)

    def cell_box(self, index) -> Box:
        corner = tuple(self.domain.corner[i] + self.h * index[i] for i in range(self.d))
        return Box(corner, self.h)

    @classmethod
    def from_callable(cls, fn, domain: Box, n: int) -> "GridFunction":
        """Sample ``fn`` at cell centers; ``fn`` receives one array per axis."""
        h = domain.side / n
        axes = [domain.corner[i] + h * (np.arange(n) + 0.5) for i in range(domain.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(domain, np.broadcast_to(fn(*mesh), (n,) * domain.d))

    # --- serialization -------------------------------------------------

    def header(self) -> dict:
        return {"domain": self.domain.to_json(), "n": self.n, "d": self.d}

    def to_csv(self, path) -> None:
        path = Path(path)
        idx = np.indices(self.values.shape).reshape(self.d, -1).T
        with open(path, "w") as fh:
            cols = ",".join(f"i{a}" for a in range(self.d))
            fh.write(f"{cols},value\n")
            for row, val in zip(idx, self.values.ravel()):
                fh.write(",".join(str(int(r)) for r in row) + f",{float(val)!r}\n")
        path.with_suffix(".json").write_text(json.dumps(self.header(), indent=2))

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        domain = Box.from_json(header["domain"])
        n, d = int(header["n"]), int(header["d"])
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        values = np.zeros((n,) * d)
        values[tuple(data[:, a].astype(int) for a in range(d))] = data[:, d]
        return cls(domain, values)


def _axis_overlap(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)


def overlap_weights(f: GridFunction, Q: Box) -> np.ndarray:
    """Measure of ``cell ∩ Q`` for every cell, shape ``(n,)*d``."""
    lo, hi = Q.bounds()
    w = None
    for a in range(f.d):
        ov = _axis_overlap(f.edges(a), lo[a], hi[a])
        w = ov if w is None else np.multiply.outer(w, ov)
    return w


def _masses(g: GridFunction, Q: Box) -> tuple[np.ndarray, np.ndarray]:
    """Values of ``g`` on ``Q`` with their measures, the outside part as a 0 atom."""
    if not Q.side > 0:
        raise ValueError("degenerate cube")
    w = overlap_weights(g, Q).ravel()
    mask = w > 0
    vals = g.values.ravel()[mask]
    meas = w[mask]
    outside = Q.volume - meas.sum()
    if outside > MEASURE_RTOL * Q.volume:
        vals = np.append(vals, 0.0)
        meas = np.append(meas, outside)
    return vals, meas


def average(f: GridFunction, Q: Box) -> float:
    """``|Q|^{-1} ∫_Q f`` with ``f`` extended by zero."""
    if not Q.side > 0:
        raise ValueError("degenerate cube")
    return float((overlap_weights(f, Q) * f.values).sum() / Q.volume)


def _rearrangement(absvals: np.ndarray, meas: np.ndarray, t: float, total: float) -> float:
    order = np.argsort(-absvals, kind="stable")
    v, m = absvals[order], meas[order]
    # merge equal values so the distribution function jumps once per value
    uniq, start = np.unique(-v, return_index=True)
    v_u = -uniq
    m_u = np.add.reduceat(m, start)
    cum = np.cumsum(m_u)
    tol = MEASURE_RTOL * total
    # largest i with cum[i] <= t; answer is the next value (or 0)
    i = np.searchsorted(cum, t + tol, side="right")
    if i >= len(v_u):
        return 0.0
    return float(max(v_u[i], 0.0))


def rearrangement_value(g: GridFunction, Q: Box, t: float) -> float:
    """Non-increasing rearrangement ``(1_Q g)^*(t)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    vals, meas = _masses(g, Q)
    return _rearrangement(np.abs(vals), meas, t, Q.volume)


def median(g: GridFunction, Q: Box) -> float:
    """Lower median of ``g`` on ``Q``: the smallest value ``m`` with both halves ≤ ½|Q|."""
    vals, meas = _masses(g, Q)
    return _lower_median(vals, meas, Q.volume)


def _lower_median(vals, meas, total) -> float:
    order = np.argsort(vals, kind="stable")
    v, m = vals[order], meas[order]
    cum = np.cumsum(m)
    i = np.searchsorted(cum, 0.5 * total - MEASURE_RTOL * total, side="left")
    return float(v[min(i, len(v) - 1)])


def _shortest_window(vals, meas, need) -> float:
    """Half-length of the shortest value interval carrying mass ``>= need``."""
    order = np.argsort(vals, kind="stable")
    v, m = vals[order], meas[order]
    cum = np.concatenate([[0.0], np.cumsum(m)])
    # for each left end i, smallest right end r with cum[r+1]-cum[i] >= need
    r = np.searchsorted(cum, cum[:-1] + need, side="left") - 1
    ok = r < len(v)
    if not ok.any():
        return float((v[-1] - v[0]) / 2)
    i = np.nonzero(ok)[0]
    return float(np.min(v[r[ok]] - v[i]) / 2)


def oscillation(g: GridFunction, Q: Box, lam: float) -> float:
    """Local mean oscillation ``inf_c ((g - c) 1_Q)^*(λ|Q|)``.

    The best constant is the midpoint of the shortest range of values that
    carries mass at least ``(1 - λ)|Q|``, so the infimum is found by a sliding
    window over the sorted values.
    """
    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    vals, meas = _masses(g, Q)
    need = (1.0 - lam) * Q.volume - MEASURE_RTOL * Q.volume
    return _shortest_window(vals, meas, need)


def oscillation_candidates(g: GridFunction, Q: Box, lam: float) -> float:
    """Same quantity as :func:`oscillation` by exhaustive search over values and midpoints."""
    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    vals, meas = _masses(g, Q)
    u = np.unique(vals)
    cands = np.unique(np.concatenate([u, ((u[:, None] + u[None, :]) / 2).ravel()]))
    t = lam * Q.volume
    return min(_rearrangement(np.abs(vals - c), meas, t, Q.volume) for c in cands)


def _window_sums(a: np.ndarray, L: int) -> np.ndarray:
    """Sums of ``a`` over all ``L^d`` windows at valid positions."""
    out = a
    for axis in range(a.ndim):
        c = np.cumsum(out, axis=axis)
        shape = list(c.shape)
        shape[axis] = 1
        c = np.concatenate([np.zeros(shape), c], axis=axis)
        n = c.shape[axis]
        out = np.take(c, np.arange(L, n), axis=axis) - np.take(c, np.arange(0, n - L), axis=axis)
    return out


def maximal(f: GridFunction) -> GridFunction:
    """Uncentered cube maximal function of ``|f|`` at cell centers.

    The supremum runs over cubes of side ``h 2^i`` (up to the domain side)
    whose corners sit on the half-cell lattice and which lie in the domain;
    since ``|f|`` is extended by zero, cubes leaving the domain never win.
    """
    a = np.abs(f.values)
    d, n = f.d, f.n
    up = a
    for axis in range(d):
        up = np.repeat(up, 2, axis=axis)
    out = a.copy()
    centers = 2 * np.arange(n) + 1
    L = 2
    while L <= 2 * n:
        avg = _window_sums(up, L) / L ** d
        # pad so every half-cell start index 0..2n-1 exists; invalid starts never win
        pad = [(0, 2 * n - s) for s in avg.shape]
        avg = np.pad(avg, pad, constant_values=-np.inf)
        # a window starting at s contains the center 2c+1 iff 2c+1-L < s <= 2c+1
        for axis in range(d):
            avg = maximum_filter1d(avg, L, axis=axis, mode="constant", cval=-np.inf,
                                   origin=(L - 1) // 2)
        sel = avg
        for axis in range(d):
            sel = np.take(sel, centers, axis=axis)
        out = np.maximum(out, sel)
        L *= 2
    return f.with_values(out)
