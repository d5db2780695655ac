"""Good and bad N-boxes.

A macroscopic site i is p-good when, inside B'_N(i):

  (i)   exactly one open cluster of the open subgraph restricted to B'_N(i)
        has diameter larger than N;
  (ii)  that cluster crosses each of the 3^d N-boxes tiling B'_N(i);
  (iii) any two of its vertices are at chemical distance <= 12 beta N.

Distances in (iii) are taken in the whole open graph, but a path of length
at most T = floor(12 beta N) started in B'_N(i) never leaves B'_N(i)
enlarged by T, so searches are confined to that neighbourhood (clipped to
the window).  This keeps the state of a box a function of nearby edges only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.stats import beta as beta_dist

from . import _kernels as K
from .clusters import BadComponents, bad_components, crossing_from_roots
from .errors import DomainError, GeometryError
from .field import CoupledEdgeField, derive_seed
from .lattice import LatticeWindow, Region, Site, big_box_bounds, box_bounds, subboxes
from .parallel import map_samples

_EMPTY_MASK = np.zeros(0, dtype=np.bool_)


def distance_cap(beta: float, N: int) -> int:
    return int(math.floor(12 * beta * N + 1e-9))


@dataclass
class GoodBoxReport:
    site: Site
    has_unique_big_cluster: bool
    all_subboxes_crossed: bool
    distance_bound_ok: bool
    witness: tuple[int, ...] | None = None
    region: Region | None = dc_field(default=None, repr=False)
    members: np.ndarray | None = dc_field(default=None, repr=False)

    @property
    def good(self) -> bool:
        return self.has_unique_big_cluster and self.all_subboxes_crossed and self.distance_bound_ok

    @property
    def cluster(self) -> np.ndarray | None:
        """(n, d) vertices of the big cluster, lexicographically sorted."""
        return None if self.members is None else self.region.coords(self.members)

    def in_cluster(self, v: Sequence[int]) -> bool:
        if self.members is None or not self.region.contains(v):
            return False
        f = self.region.flat(v)
        k = np.searchsorted(self.members, f)
        return bool(k < len(self.members) and self.members[k] == f)

    def crossing_vertices_in(self, lo, hi) -> np.ndarray:
        """Big-cluster vertices inside the box [lo, hi], lexicographically sorted."""
        pts = self.cluster
        sel = np.all((pts >= np.asarray(lo)) & (pts <= np.asarray(hi)), axis=1)
        return pts[sel]


def _component_spans(roots: np.ndarray, coords: np.ndarray):
    """(labels, diameters) for each component of a labelled region."""
    order = np.argsort(roots, kind="stable")
    r = roots[order]
    starts = np.flatnonzero(np.r_[True, r[1:] != r[:-1]])
    c = coords[order]
    mn = np.minimum.reduceat(c, starts, axis=0)
    mx = np.maximum.reduceat(c, starts, axis=0)
    return r[starts], (mx - mn).max(axis=1)


def _big_region(field: CoupledEdgeField, i: Sequence[int], N: int) -> Region:
    lo, hi = big_box_bounds(i, N)
    w = field.window
    if not (w.contains(lo) and w.contains(hi)):
        raise GeometryError(f"B'_N({tuple(i)}) escapes the window")
    return Region(lo, hi)


def _crosses_all_subboxes(field, p, i, N, big: Region, member_flat: np.ndarray) -> bool:
    args = field.kernel_args(p)
    member = np.zeros(big.size, dtype=np.bool_)
    member[member_flat] = True
    member = member.reshape(big.shape)
    for j in subboxes(i):
        lo, hi = box_bounds(j, N)
        sl = tuple(slice(a - b, c - b + 1) for a, c, b in zip(lo, hi, big.lo))
        sub = np.ascontiguousarray(member[sl]).ravel()
        if not sub.any():
            return False
        box = Region(lo, hi)
        roots = K.label_region(*args, box.origin_array, box.shape_array, sub)
        if not crossing_from_roots(roots.reshape(box.shape)):
            return False
    return True


def distance_bound_holds(field: CoupledEdgeField, p: float, cluster: np.ndarray,
                         region: Region, cap: int) -> bool:
    """Exact test that all pairs of ``cluster`` are within chemical distance ``cap``.

    One search from a central vertex z gives D(z, .) on the cluster; a pair
    (x, y) is certified once D(s, x) + D(s, y) <= cap for some searched
    source s.  Uncertified pairs trigger a search from x; any vertex left
    unreached within ``cap`` is a genuine violation.
    """
    args = field.kernel_args(p)
    origin, shape = region.origin_array, region.shape_array
    targets = region.flat_many(cluster)
    center = cluster.mean(axis=0)
    z = int(np.argmin(np.abs(cluster - center).sum(axis=1)))
    dist, _, missing, _ = K.bfs(*args, origin, shape, _EMPTY_MASK, targets[z], targets, cap, False)
    if missing:
        return False
    rows = [dist[targets].astype(np.int64)]
    ecc = int(rows[0].max())
    if 2 * ecc <= cap:
        return True
    best = rows[0] + ecc  # upper bound on the eccentricity of each vertex
    for x in np.argsort(-rows[0], kind="stable"):
        if best[x] <= cap:
            continue
        stack = np.stack(rows)
        bound = (stack[:, x:x + 1] + stack).min(axis=0)
        pending = targets[bound > cap]
        if pending.size == 0:
            continue
        dist, _, missing, _ = K.bfs(*args, origin, shape, _EMPTY_MASK, targets[x], pending, cap, False)
        if missing:
            return False
        row = dist[targets].astype(np.int64)
        row[row < 0] = cap + 1  # unreached non-pending vertices: already certified
        rows.append(row)
    return True


def classify_box(field: CoupledEdgeField, p: float, i: Sequence[int], N: int,
                 beta: float) -> GoodBoxReport:
    i = tuple(int(c) for c in i)
    big = _big_region(field, i, N)
    args = field.kernel_args(p)
    roots = K.label_region(*args, big.origin_array, big.shape_array, _EMPTY_MASK)
    coords = big.coords(np.arange(big.size))
    labels, diams = _component_spans(roots, coords)
    large = labels[diams > N]

    crossed = [r for r in large if _crosses_all_subboxes(field, p, i, N, big, np.flatnonzero(roots == r))]
    if len(large) != 1:
        return GoodBoxReport(i, False, bool(crossed), False)
    root = int(large[0])
    members = np.flatnonzero(roots == root)
    cluster = coords[members]
    cap = distance_cap(beta, N)
    lo, hi = big_box_bounds(i, N)
    nbhd = Region.around(tuple(a - cap for a in lo), tuple(b + cap for b in hi), field.window)
    ok3 = distance_bound_holds(field, p, cluster, nbhd, cap)
    return GoodBoxReport(
        i, True, bool(crossed), ok3,
        witness=tuple(int(c) for c in cluster[0]) if ok3 and crossed else None, region=big, members=members,
    )


@dataclass
class MacroField:
    """Good/bad flags over the sites whose enlarged box fits the window."""

    field: CoupledEdgeField
    p: float
    N: int
    beta: float
    radius: int
    good: np.ndarray
    reports: dict[Site, GoodBoxReport]
    good_labels: np.ndarray
    spanning_label: int

    @property
    def window(self) -> LatticeWindow:
        return self.field.window

    @property
    def d(self) -> int:
        return self.field.window.d

    def is_good(self, i: Sequence[int]) -> bool:
        return bool(self.good[self.index(i)])

    def index(self, i: Sequence[int]) -> tuple[int, ...]:
        if any(abs(c) > self.radius for c in i):
            raise GeometryError(f"site {tuple(i)} is outside the classified grid")
        return tuple(c + self.radius for c in i)

    def classified(self, i: Sequence[int]) -> bool:
        return all(abs(c) <= self.radius for c in i)

    def in_spanning_component(self, i: Sequence[int]) -> bool:
        return self.classified(i) and self.spanning_label > 0 and int(
            self.good_labels[self.index(i)]) == self.spanning_label

    def bad_components(self) -> BadComponents:
        return bad_components(self.good)

    @property
    def good_fraction(self) -> float:
        return float(self.good.mean())


def build_macro_field(field: CoupledEdgeField, p: float, N: int, beta: float) -> MacroField:
    w = field.window
    if w.N != N:
        raise GeometryError(f"window is partitioned at scale {w.N}, not {N}")
    r = w.macro_radius - 1
    if r < 0:
        raise GeometryError("window too small to hold any enlarged box")
    side = 2 * r + 1
    good = np.zeros((side,) * w.d, dtype=bool)
    reports = {}
    for i in w.interior_sites():
        rep = classify_box(field, p, i, N, beta)
        reports[i] = rep
        good[tuple(c + r for c in i)] = rep.good
    labels, _ = ndimage.label(good, structure=ndimage.generate_binary_structure(w.d, 1))
    return MacroField(field, p, N, beta, r, good, reports, labels, _spanning_label(labels))


def _spanning_label(labels: np.ndarray) -> int:
    """Largest good component touching every face of the grid (0 if none)."""
    ids, sizes = np.unique(labels[labels > 0], return_counts=True)
    for k in np.lexsort((ids, -sizes)):
        mask = labels == ids[k]
        if all(np.take(mask, 0, axis=a).any() and np.take(mask, -1, axis=a).any()
               for a in range(labels.ndim)):
            return int(ids[k])
    return 0


# --- Monte Carlo rates ----------------------------------------------------------


def window_for_box(d: int, N: int, beta: float) -> LatticeWindow:
    """Smallest box-partitioned window holding B'_N(0) plus the search margin."""
    reach = 3 * N + 1 + distance_cap(beta, N)
    radius = max(1, math.ceil((reach - N) / (2 * N + 1)))
    return LatticeWindow.from_macro(d, N, radius)


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = (1 - level) / 2
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - a, k + 1, n - k))
    return lo, hi


def _bad_sample(index: int, d: int, p: float, N: int, beta: float, seed: int) -> bool:
    f = CoupledEdgeField(window_for_box(d, N, beta), derive_seed(seed, index, N))
    return not classify_box(f, p, (0,) * d, N, beta).good


@dataclass
class RateRow:
    d: int
    p: float
    N: int
    beta: float
    samples: int
    bad_count: int
    rate: float
    ci_low: float
    ci_high: float


@dataclass
class RateTable:
    rows: list[RateRow]
    slope: float | None

    def rates(self) -> list[float]:
        return [r.rate for r in self.rows]


def estimate_bad_probability(p: float, N_list: Sequence[int], beta: float, samples: int,
                             d: int = 2, seed: int = 0, workers: int = 1) -> RateTable:
    """Monte Carlo P(B_N(0) is p-bad) for each N, with a log-linear fit."""
    if samples <= 0:
        raise DomainError("at least one sample is required")
    rows = []
    for N in N_list:
        flags = map_samples(_bad_sample, range(samples), workers, d=d, p=p, N=N, beta=beta, seed=seed)
        k = int(sum(flags))
        lo, hi = clopper_pearson(k, samples)
        rows.append(RateRow(d, p, N, beta, samples, k, k / samples, lo, hi))
    pos = [(r.N, math.log(r.rate)) for r in rows if r.rate > 0]
    slope = float(np.polyfit(*zip(*pos), 1)[0]) if len(pos) >= 2 else None
    return RateTable(rows, slope)


def has_T_event(field: CoupledEdgeField, p: float, N: int, m: int) -> bool:
    """B_N(0) has a crossing cluster and another open cluster of diameter >= m."""
    lo, hi = box_bounds((0,) * field.window.d, N)
    box = Region(lo, hi)
    roots = K.label_region(*field.kernel_args(p), box.origin_array, box.shape_array, _EMPTY_MASK)
    coords = box.coords(np.arange(box.size))
    labels, diams = _component_spans(roots, coords)
    grid = roots.reshape(box.shape)
    crossing = set(labels.tolist())
    for k in range(grid.ndim):
        a = np.unique(np.take(grid, 0, axis=k))
        b = np.unique(np.take(grid, -1, axis=k))
        crossing &= set(np.intersect1d(a, b).tolist())
    if not crossing:
        return False
    keep = min(crossing)
    return any(lab != keep and dm >= m for lab, dm in zip(labels.tolist(), diams.tolist()))


def _T_sample(index: int, d: int, p: float, N: int, m: int, seed: int) -> bool:
    f = CoupledEdgeField(LatticeWindow(d, N), derive_seed(seed, index, 7919))
    return has_T_event(f, p, N, m)


def measure_T_mN(p: float, m: int, N: int, samples: int, d: int = 2, seed: int = 0,
                 workers: int = 1) -> float:
    """Monte Carlo frequency of the event T_{m,N}(p)."""
    if m > N:
        raise DomainError(f"m={m} exceeds N={N}")
    if samples <= 0:
        raise DomainError("at least one sample is required")
    hits = map_samples(_T_sample, range(samples), workers, d=d, p=p, N=N, m=m, seed=seed)
    return sum(hits) / samples


def calibrate_beta(p: float, N: int, samples: int = 1000, d: int = 2, seed: int = 0,
                   threshold: float = 1e-3, grid: Sequence[float] | None = None,
                   workers: int = 1) -> float:
    """Smallest grid beta with empirical P(beta |x|_1 <= D(0, x) < inf) below threshold.

    Pairs are (0, x) over the whole L1 sphere |x|_1 = N.
    """
    from .estimation import stretch_ratios

    grid = list(grid) if grid is not None else [1.0 + 0.25 * k for k in range(37)]
    ratios = stretch_ratios(p, N, samples, d=d, seed=seed, max_ratio=max(grid), workers=workers)
    total = len(ratios)
    for b in sorted(grid):
        if np.count_nonzero(ratios >= b) / total < threshold:  # nan compares False
            return float(b)
    return float(max(grid))
