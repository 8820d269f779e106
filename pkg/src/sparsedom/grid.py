"""Shifted dyadic grids and the one-third covering trick.

A shifted dyadic cube in ``D^u`` is ``2^{-j}([0,1)^d + m + (-1)^j u)`` with
``u`` in ``{0, 1/3, 2/3}^d``.  Cubes are stored by the exact triple
``(u-index, j, m)``; real endpoints are produced on demand as
:class:`fractions.Fraction` so that containment tests are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

THIRDS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


@dataclass(frozen=True)
class Box:
    """Axis-parallel cube ``[corner, corner + side)``."""

    corner: tuple
    side: float

    def __post_init__(self):
        corner = tuple(float(c) for c in np.atleast_1d(self.corner))
        object.__setattr__(self, "corner", corner)
        if not self.side > 0:
            raise ValueError(f"box side must be positive, got {self.side}")

    @property
    def d(self) -> int:
        return len(self.corner)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.corner) + 0.5 * self.side

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.corner, dtype=float)
        return lo, lo + self.side

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        lo, hi = self.bounds()
        olo, ohi = other.bounds()
        return bool(np.all(lo <= olo + tol) and np.all(ohi <= hi + tol))

    def to_json(self) -> dict:
        return {"corner": list(self.corner), "side": self.side}

    @classmethod
    def from_json(cls, obj: dict) -> "Box":
        return cls(tuple(obj["corner"]), float(obj["side"]))


def dilate(Q: Box, factor: float) -> Box:
    """Concentric cube with side ``factor * Q.side``."""
    if not factor > 0:
        raise ValueError(f"dilation factor must be positive, got {factor}")
    side = Q.side * factor
    corner = Q.center - 0.5 * side
    return Box(tuple(corner), side)


@dataclass(frozen=True)
class ShiftedDyadicCube:
    """Cube of the grid ``D^u``; ``u`` holds indices into ``THIRDS``."""

    u: tuple
    j: int
    m: tuple

    def __post_init__(self):
        u = tuple(int(x) for x in self.u)
        m = tuple(int(x) for x in self.m)
        if len(u) != len(m):
            raise ValueError("u and m must have the same dimension")
        if any(x not in (0, 1, 2) for x in u):
            raise ValueError(f"u indices must lie in {{0, 1, 2}}, got {u}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "j", int(self.j))

    @property
    def d(self) -> int:
        return len(self.u)

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** (-self.j)

    @property
    def shift(self) -> tuple:
        return tuple(THIRDS[i] for i in self.u)

    def lower(self) -> tuple:
        """Exact lower corner."""
        sign = -1 if self.j % 2 else 1
        s = self.side
        return tuple((mi + sign * THIRDS[ui]) * s for mi, ui in zip(self.m, self.u))

    def upper(self) -> tuple:
        s = self.side
        return tuple(a + s for a in self.lower())

    def to_box(self) -> Box:
        return Box(tuple(float(a) for a in self.lower()), float(self.side))

    def contains(self, other: "ShiftedDyadicCube | Box") -> bool:
        lo, hi = self.lower(), self.upper()
        if isinstance(other, ShiftedDyadicCube):
            olo, ohi = other.lower(), other.upper()
        else:
            olo = tuple(_frac(c) for c in other.corner)
            ohi = tuple(c + _frac(other.side) for c in olo)
        return all(a <= b for a, b in zip(lo, olo)) and all(b <= a for a, b in zip(hi, ohi))

    def disjoint(self, other: "ShiftedDyadicCube") -> bool:
        lo, hi = self.lower(), self.upper()
        olo, ohi = other.lower(), other.upper()
        return any(h <= ol or oh <= l for l, h, ol, oh in zip(lo, hi, olo, ohi))

    def to_json(self) -> dict:
        return {"u": [float(THIRDS[i]) for i in self.u], "j": self.j, "m": list(self.m)}

    @classmethod
    def from_json(cls, obj: dict) -> "ShiftedDyadicCube":
        u = tuple(int(round(3 * float(x))) for x in obj["u"])
        return cls(u, int(obj["j"]), tuple(obj["m"]))


def cube_containing(x: Sequence, u: Sequence[int], j: int) -> ShiftedDyadicCube:
    """The cube of ``D^u`` at scale ``j`` whose closure-open box contains ``x``."""
    s = Fraction(2) ** (-j)
    sign = -1 if j % 2 else 1
    m = tuple(math.floor(_frac(xi) / s - sign * THIRDS[ui]) for xi, ui in zip(x, u))
    return ShiftedDyadicCube(tuple(u), j, m)


def ancestor(R: ShiftedDyadicCube, k: int) -> ShiftedDyadicCube:
    """The k-th dyadic ancestor of ``R`` inside its own grid ``D^u``."""
    if k < 0:
        raise ValueError("ancestor order must be nonnegative")
    if k == 0:
        return R
    return cube_containing(R.lower(), R.u, R.j - k)


def cover_cube(Q: Box, k: int = 0) -> tuple[tuple, ShiftedDyadicCube]:
    """Shifted dyadic cube ``R`` with ``Q ⊆ R``, ``2^k Q ⊆ R^{(k)}``, ``3ℓ(Q) < ℓ(R) ≤ 6ℓ(Q)``.

    Each coordinate is handled separately: among the three shifts, at most one
    puts an endpoint inside the side of ``Q`` and at most one inside the side of
    ``2^k Q``, so some shift avoids both.  The smallest admissible shift index is
    taken.  Returns ``(u, R)`` with ``u`` as exact fractions.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    ell = _frac(Q.side)
    # unique power of two in (3ℓ, 6ℓ]
    j = -math.floor(math.log2(6 * ell))
    while Fraction(2) ** (-j) > 6 * ell:
        j += 1
    while Fraction(2) ** (-(j - 1)) <= 6 * ell:
        j -= 1
    side = Fraction(2) ** (-j)
    assert 3 * ell < side <= 6 * ell

    big = ell * 2 ** k
    u_idx, m = [], []
    for c in Q.corner:
        a = _frac(c)
        b = a + ell
        ja = a + ell / 2 - big / 2
        jb = ja + big
        for ui in range(3):
            K = cube_containing((a,), (ui,), j)
            (klo,), (khi,) = K.lower(), K.upper()
            if not (klo <= a and b <= khi):
                continue
            L = cube_containing((ja,), (ui,), j - k)
            (llo,), (lhi,) = L.lower(), L.upper()
            if llo <= ja and jb <= lhi:
                u_idx.append(ui)
                m.append(K.m[0])
                break
        else:  # pragma: no cover - guaranteed by the covering argument
            raise AssertionError(f"no admissible shift for {Q} at k={k}")
    R = ShiftedDyadicCube(tuple(u_idx), j, tuple(m))
    return tuple(THIRDS[i] for i in u_idx), R


def dyadic_children(R: ShiftedDyadicCube) -> list[ShiftedDyadicCube]:
    """The ``2^d`` children of ``R`` in ``D^u``."""
    s = R.side / 2
    lo = R.lower()
    out = []
    for offs in np.ndindex(*([2] * R.d)):
        x = tuple(a + o * s for a, o in zip(lo, offs))
        out.append(cube_containing(x, R.u, R.j + 1))
    return out
