"""Finite-window geometry of Z^d.

Vertices live in the centered hypercube [-L, L]^d.  A window may carry a box
scale N, in which case it is partitioned into N-boxes

    B_N(i) = i (2N + 1) + [-N, N]^d

and each macroscopic site i also owns the enlarged box

    B'_N(i) = i (2N + 1) + [-(3N + 1), 3N + 1]^d,

the union of the 3^d N-boxes B_N(j) with |i - j|_inf <= 1.

Two macroscopic sites are L1 neighbours when their index differs by one in a
single coordinate, and *-neighbours when their L-infinity distance is one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

Vertex = tuple[int, ...]
Site = tuple[int, ...]


class GeometryError(ValueError):
    """A box or vertex falls outside the window it is used with."""


@dataclass(frozen=True)
class LatticeWindow:
    """Centered window [-L, L]^d, optionally partitioned into N-boxes."""

    d: int
    L: int
    N: int | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.L < 0:
            raise ValueError(f"half-side must be >= 0, got {self.L}")
        if self.N is not None:
            if self.N < 1:
                raise ValueError(f"box scale must be >= 1, got {self.N}")
            if (2 * self.L + 1) % (2 * self.N + 1):
                raise ValueError(
                    f"window side {2 * self.L + 1} is not a multiple of the "
                    f"box side {2 * self.N + 1}"
                )

    @classmethod
    def from_macro(cls, d: int, N: int, radius: int) -> "LatticeWindow":
        """Window holding the (2 radius + 1)^d boxes with |i|_inf <= radius."""
        return cls(d, (2 * N + 1) * radius + N, N)

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def n_vertices(self) -> int:
        return self.side**self.d

    @property
    def n_edges(self) -> int:
        return self.d * self.side ** (self.d - 1) * (self.side - 1)

    @property
    def macro_radius(self) -> int:
        """Largest |i|_inf of a macroscopic site whose N-box is in the window."""
        return (self.side // (2 * self._require_N() + 1) - 1) // 2

    def _require_N(self) -> int:
        if self.N is None:
            raise GeometryError("window has no box scale")
        return self.N

    def contains(self, v: Sequence[int]) -> bool:
        return len(v) == self.d and all(-self.L <= c <= self.L for c in v)

    def vertices(self) -> Iterator[Vertex]:
        return itertools.product(range(-self.L, self.L + 1), repeat=self.d)

    def sites(self, margin: int = 0) -> Iterator[Site]:
        """Macroscopic sites whose N-box lies in the window, minus a margin."""
        r = self.macro_radius - margin
        return itertools.product(range(-r, r + 1), repeat=self.d)

    def interior_sites(self) -> Iterator[Site]:
        """Sites whose enlarged box B'_N(i) lies inside the window."""
        return self.sites(margin=1)

    def site_in_window(self, i: Sequence[int]) -> bool:
        r = self.macro_radius
        return all(-r <= c <= r for c in i)


def l1(x: Sequence[int]) -> int:
    return int(sum(abs(c) for c in x))


def linf(x: Sequence[int]) -> int:
    return int(max(abs(c) for c in x))


def box_of(v: Sequence[int], N: int) -> Site:
    """Index i of the unique N-box with v in i (2N + 1) + [-N, N]^d."""
    s = 2 * N + 1
    return tuple((c + N) // s for c in v)


def box_center(i: Sequence[int], N: int) -> Vertex:
    return tuple(c * (2 * N + 1) for c in i)


def box_bounds(i: Sequence[int], N: int, scale: int = 1) -> tuple[Vertex, Vertex]:
    """Inclusive corners of i (2N + 1) + [-scale N, scale N]^d."""
    c = box_center(i, N)
    return tuple(x - scale * N for x in c), tuple(x + scale * N for x in c)


def big_box_bounds(i: Sequence[int], N: int) -> tuple[Vertex, Vertex]:
    """Inclusive corners of B'_N(i), the union of the 3^d boxes around i."""
    c = box_center(i, N)
    r = 3 * N + 1
    return tuple(x - r for x in c), tuple(x + r for x in c)


def clip_bounds(lo: Sequence[int], hi: Sequence[int], window: LatticeWindow):
    return (
        tuple(max(a, -window.L) for a in lo),
        tuple(min(b, window.L) for b in hi),
    )


def box_vertices(i: Sequence[int], N: int) -> list[Vertex]:
    lo, hi = box_bounds(i, N)
    return list(itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))))


def big_box_vertices(i: Sequence[int], window: LatticeWindow) -> list[Vertex]:
    """Vertices of B'_N(i) intersected with the window."""
    lo, hi = clip_bounds(*big_box_bounds(i, window._require_N()), window)
    return list(itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))))


def subboxes(i: Sequence[int]) -> list[Site]:
    """The 3^d sites whose N-boxes tile B'_N(i)."""
    return [tuple(a + b for a, b in zip(i, off)) for off in _offsets(len(i), star=True, self_=True)]


def _offsets(d: int, star: bool, self_: bool = False) -> list[tuple[int, ...]]:
    if star:
        offs = [o for o in itertools.product((-1, 0, 1), repeat=d) if self_ or any(o)]
    else:
        offs = []
        for k in range(d):
            for s in (-1, 1):
                o = [0] * d
                o[k] = s
                offs.append(tuple(o))
    return offs


def star_neighbors(i: Sequence[int], window: LatticeWindow | None = None) -> list[Site]:
    """Sites at L-infinity distance one, filtered to the window's macro grid."""
    out = [tuple(a + b for a, b in zip(i, o)) for o in _offsets(len(i), star=True)]
    if window is not None:
        out = [j for j in out if window.site_in_window(j)]
    return out


def l1_neighbors(i: Sequence[int], window: LatticeWindow | None = None) -> list[Site]:
    out = [tuple(a + b for a, b in zip(i, o)) for o in _offsets(len(i), star=False)]
    if window is not None:
        out = [j for j in out if window.site_in_window(j)]
    return out


def as_array(v: Sequence[int]) -> np.ndarray:
    return np.asarray(v, dtype=np.int64)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box of vertices [lo, hi] (inclusive) with flat addressing."""

    lo: Vertex
    hi: Vertex

    @classmethod
    def of_window(cls, window: LatticeWindow) -> "Region":
        return cls((-window.L,) * window.d, (window.L,) * window.d)

    @classmethod
    def around(cls, lo, hi, window: LatticeWindow) -> "Region":
        lo, hi = clip_bounds(lo, hi, window)
        return cls(lo, hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def origin_array(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=np.int64)

    @property
    def shape_array(self) -> np.ndarray:
        return np.asarray(self.shape, dtype=np.int64)

    def contains(self, v: Sequence[int]) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, v, self.hi))

    def flat(self, v: Sequence[int]) -> int:
        if not self.contains(v):
            raise GeometryError(f"{tuple(v)} outside region {self.lo}..{self.hi}")
        f = 0
        for c, a, n in zip(v, self.lo, self.shape):
            f = f * n + (c - a)
        return f

    def flat_many(self, verts: np.ndarray) -> np.ndarray:
        verts = np.asarray(verts, dtype=np.int64).reshape(-1, self.d)
        return np.ravel_multi_index(tuple((verts - self.origin_array).T), self.shape)

    def vertex(self, f: int) -> Vertex:
        return tuple(int(c) + a for c, a in zip(np.unravel_index(int(f), self.shape), self.lo))

    def coords(self, flats: np.ndarray) -> np.ndarray:
        """(n, d) absolute coordinates of flat indices."""
        idx = np.unravel_index(np.asarray(flats, dtype=np.int64), self.shape)
        return np.stack(idx, axis=-1).astype(np.int64) + self.origin_array

    def member_mask(self, sub_lo: Sequence[int], sub_hi: Sequence[int]) -> np.ndarray:
        """Boolean mask of the sub-box [sub_lo, sub_hi] within this region."""
        m = np.zeros(self.shape, dtype=bool)
        sl = tuple(slice(max(a, lo) - lo, min(b, hi) - lo + 1)
                   for a, b, lo, hi in zip(sub_lo, sub_hi, self.lo, self.hi))
        m[sl] = True
        return m.ravel()
