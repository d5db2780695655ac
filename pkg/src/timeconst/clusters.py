"""Connected components of the open subgraph and of bad macroscopic sites."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import _kernels as K
from .errors import DomainError
from .field import CoupledEdgeField
from .lattice import Region, Site, Vertex

_EMPTY_MASK = np.zeros(0, dtype=np.bool_)


@dataclass
class ClusterLabeling:
    """Open clusters of a region at one parameter p.

    ``roots[f]`` is the flat index of the smallest vertex of the component of
    vertex ``f`` (or -1 for vertices excluded from the labelling).
    ``components`` lists root indices by decreasing size, ties broken by the
    smaller root (= lexicographically smaller representative vertex).
    """

    region: Region
    roots: np.ndarray
    components: np.ndarray
    sizes: np.ndarray

    def label_of(self, v: Sequence[int]) -> int:
        return int(self.roots[self.region.flat(v)])

    def members(self, root: int) -> np.ndarray:
        """Sorted flat indices of a component."""
        return np.flatnonzero(self.roots == root)

    def vertices(self, root: int) -> np.ndarray:
        return self.region.coords(self.members(root))

    def size_of(self, root: int) -> int:
        return int(self.sizes[np.flatnonzero(self.components == root)[0]])

    @property
    def largest(self) -> int:
        return int(self.components[0])

    def partition(self) -> set[frozenset[Vertex]]:
        """Components as sets of vertices (for comparisons with oracles)."""
        out = {}
        for f, r in enumerate(self.roots):
            if r >= 0:
                out.setdefault(int(r), []).append(self.region.vertex(f))
        return {frozenset(vs) for vs in out.values()}


def label_clusters(field: CoupledEdgeField, region: Region, p: float,
                   member: np.ndarray | None = None) -> ClusterLabeling:
    roots = K.label_region(
        *field.kernel_args(p), region.origin_array, region.shape_array,
        _EMPTY_MASK if member is None else np.ascontiguousarray(member, dtype=np.bool_),
    )
    valid = roots[roots >= 0]
    labels, sizes = np.unique(valid, return_counts=True)
    order = np.lexsort((labels, -sizes))
    return ClusterLabeling(region, roots, labels[order], sizes[order])


def spanning_cluster(labeling: ClusterLabeling) -> int | None:
    """Root of the largest cluster if it touches all 2d faces of the region.

    This is the finite-window stand-in for the infinite cluster; None means
    the sample should be censored.
    """
    reg = labeling.region
    grid = labeling.roots.reshape(reg.shape)
    touching = None
    for k in range(reg.d):
        for side in (0, reg.shape[k] - 1):
            face = np.unique(np.take(grid, side, axis=k))
            touching = face if touching is None else np.intersect1d(touching, face)
    if len(labeling.components) == 0:
        return None
    r = int(labeling.components[0])
    return r if r in touching else None


def diameter(cluster) -> int:
    """Largest coordinate span over all axes."""
    pts = np.asarray(cluster, dtype=np.int64)
    if pts.size == 0:
        raise DomainError("diameter of an empty cluster")
    pts = pts.reshape(len(pts), -1)
    return int((pts.max(axis=0) - pts.min(axis=0)).max())


def touches_faces(pts: np.ndarray, lo: Sequence[int], hi: Sequence[int]) -> bool:
    """True if the point set meets all 2d faces of the box [lo, hi]."""
    if len(pts) == 0:
        return False
    mn, mx = pts.min(axis=0), pts.max(axis=0)
    return bool(np.all(mn <= np.asarray(lo)) and np.all(mx >= np.asarray(hi)))


def is_crossing(field: CoupledEdgeField, p: float, cluster: np.ndarray,
                box_lo: Sequence[int], box_hi: Sequence[int]) -> bool:
    """Whether open paths inside cluster ∩ box join opposite faces in every axis."""
    pts = np.asarray(cluster, dtype=np.int64).reshape(-1, len(box_lo))
    box = Region(tuple(box_lo), tuple(box_hi))
    inside = pts[np.all((pts >= box.origin_array) & (pts <= np.asarray(box_hi)), axis=1)]
    if len(inside) == 0:
        return False
    member = np.zeros(box.size, dtype=np.bool_)
    member[box.flat_many(inside)] = True
    roots = K.label_region(*field.kernel_args(p), box.origin_array, box.shape_array, member)
    return crossing_from_roots(roots.reshape(box.shape))


def crossing_from_roots(roots: np.ndarray) -> bool:
    """Crossing test on a labelled box: one component meets all 2d faces."""
    common = None
    for k in range(roots.ndim):
        low = np.take(roots, 0, axis=k)
        high = np.take(roots, roots.shape[k] - 1, axis=k)
        both = np.intersect1d(low[low >= 0], high[high >= 0])
        common = both if common is None else np.intersect1d(common, both, assume_unique=True)
        if common.size == 0:
            return False
    return True


# --- macroscopic grid ---------------------------------------------------------


@dataclass
class BadComponent:
    sites: list[Site]
    boundary: list[Site]
    touches_boundary: bool

    @property
    def size(self) -> int:
        return len(self.sites)


@dataclass
class BadComponents:
    """L1 components of bad sites and their exterior vertex boundaries.

    The exterior is the finite-window proxy for infinity: a site belongs to
    the exterior boundary of C when it neighbours C and is joined to the
    ring of sites just outside the classified grid by a path avoiding C.
    """

    d: int
    radius: int
    components: list[BadComponent]
    index: dict[Site, int] = dc_field(default_factory=dict)

    def component_of(self, site: Sequence[int]) -> BadComponent | None:
        k = self.index.get(tuple(site))
        return None if k is None else self.components[k]


def _l1_structure(d: int) -> np.ndarray:
    return ndimage.generate_binary_structure(d, 1)


def bad_components(good: np.ndarray) -> BadComponents:
    """Bad components of a classified grid.

    ``good`` is a boolean array of side 2r + 1 indexed by site + r.
    """
    good = np.asarray(good, dtype=bool)
    d = good.ndim
    r = (good.shape[0] - 1) // 2
    struct = _l1_structure(d)
    lab, n = ndimage.label(~good, structure=struct)
    comps: list[BadComponent] = []
    index: dict[Site, int] = {}
    for c in range(1, n + 1):
        cmask = np.pad(lab == c, 1)
        outside, _ = ndimage.label(~cmask, structure=struct)
        ring_labels = np.unique(_shell(outside))
        ring_labels = ring_labels[ring_labels > 0]
        exterior = np.isin(outside, ring_labels)
        adjacent = ndimage.binary_dilation(cmask, structure=struct) & ~cmask
        adjacent &= np.pad(np.ones_like(good), 1)  # the ring itself is unclassified
        bnd = np.argwhere(adjacent & exterior) - 1 - r
        sites = np.argwhere(cmask) - 1 - r
        touches = bool(np.any(np.abs(sites).max(axis=1) == r))
        comp = BadComponent(
            sites=[tuple(int(x) for x in s) for s in sites],
            boundary=[tuple(int(x) for x in s) for s in bnd],
            touches_boundary=touches,
        )
        for s in comp.sites:
            index[s] = len(comps)
        comps.append(comp)
    return BadComponents(d, r, comps, index)


def _shell(a: np.ndarray) -> np.ndarray:
    parts = []
    for k in range(a.ndim):
        parts.append(np.take(a, 0, axis=k).ravel())
        parts.append(np.take(a, a.shape[k] - 1, axis=k).ravel())
    return np.concatenate(parts)


def star_components(sites: Sequence[Site]) -> list[list[Site]]:
    """*-connected components of a finite site set, in first-seen order."""
    remaining = {tuple(s) for s in sites}
    order = [tuple(s) for s in sites]
    out = []
    seen: set[Site] = set()
    for s in order:
        if s in seen:
            continue
        comp = []
        stack = [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in _star_nbrs(u):
                if w in remaining and w not in seen:
                    seen.add(w)
                    stack.append(w)
        out.append(comp)
    return out


def is_star_connected(sites: Sequence[Site]) -> bool:
    return len(sites) == 0 or len(star_components(sites)) == 1


def _star_nbrs(u: Site):
    for off in itertools.product((-1, 0, 1), repeat=len(u)):
        if any(off):
            yield tuple(a + b for a, b in zip(u, off))
