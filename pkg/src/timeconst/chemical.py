"""Chemical distance, deterministic geodesics and regularized endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .clusters import ClusterLabeling
from .errors import DomainError, GeometryError, NoPathError
from .field import CoupledEdgeField
from .lattice import Region, Vertex

_EMPTY_MASK = np.zeros(0, dtype=np.bool_)
_NO_TARGETS = np.zeros(0, dtype=np.int64)
UNBOUNDED = 1 << 30


@dataclass(frozen=True)
class VertexPath:
    """Ordered vertex sequence with unit L1 steps; ``len`` counts edges."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.int64)
        if v.ndim != 2:
            raise GeometryError("path vertices must be an (n, d) array")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def of(cls, verts: Sequence[Sequence[int]], d: int | None = None) -> "VertexPath":
        arr = np.asarray(verts, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, d or 0)
        return cls(arr)

    def __len__(self) -> int:
        return max(len(self.vertices) - 1, 0)

    @property
    def start(self) -> Vertex:
        return tuple(int(c) for c in self.vertices[0])

    @property
    def end(self) -> Vertex:
        return tuple(int(c) for c in self.vertices[-1])

    def as_tuples(self) -> list[Vertex]:
        return [tuple(int(c) for c in v) for v in self.vertices]

    def edges(self) -> list[frozenset]:
        t = self.as_tuples()
        return [frozenset((t[j], t[j + 1])) for j in range(len(t) - 1)]

    def has_unit_steps(self) -> bool:
        if len(self.vertices) < 2:
            return True
        return bool(np.all(np.abs(np.diff(self.vertices, axis=0)).sum(axis=1) == 1))

    def is_self_avoiding(self) -> bool:
        return len({tuple(v) for v in self.vertices.tolist()}) == len(self.vertices)

    def __add__(self, other: "VertexPath") -> "VertexPath":
        """Concatenate paths sharing the junction vertex."""
        if len(self.vertices) == 0:
            return other
        if len(other.vertices) == 0:
            return self
        if self.end != other.start:
            raise GeometryError(f"cannot join path ending at {self.end} to one starting at {other.start}")
        return VertexPath(np.vstack([self.vertices, other.vertices[1:]]))


def _bfs(field, p, region, src, targets, cap, want_parent=False):
    return K.bfs(
        *field.kernel_args(p), region.origin_array, region.shape_array, _EMPTY_MASK,
        src, targets, cap, want_parent,
    )


def chemical_distance(field: CoupledEdgeField, p: float, x: Sequence[int], y: Sequence[int],
                      cap: int | None = None, region: Region | None = None):
    """Length of the shortest p-open path from x to y.

    Returns an int when found, ``math.inf`` when x and y are disconnected
    (the search exhausted the component of x), and ``None`` when the search
    hit ``cap`` before resolving the question.
    """
    region = region or Region.of_window(field.window)
    fx, fy = region.flat(x), region.flat(y)
    if fx == fy:
        return 0
    dist, _, missing, truncated = _bfs(
        field, p, region, fx, np.array([fy], np.int64), UNBOUNDED if cap is None else cap,
    )
    if missing == 0:
        return int(dist[fy])
    return None if truncated else math.inf


def distances_from(field: CoupledEdgeField, p: float, x: Sequence[int],
                   region: Region | None = None, cap: int | None = None) -> np.ndarray:
    """Distance array over the region (-1 where unreached)."""
    region = region or Region.of_window(field.window)
    dist, *_ = _bfs(field, p, region, region.flat(x), _NO_TARGETS,
                    UNBOUNDED if cap is None else cap)
    return dist


def geodesic(field: CoupledEdgeField, p: float, x: Sequence[int], y: Sequence[int],
             region: Region | None = None, cap: int | None = None) -> VertexPath:
    """Deterministic shortest p-open path from x to y."""
    region = region or Region.of_window(field.window)
    fx, fy = region.flat(x), region.flat(y)
    if fx == fy:
        return VertexPath.of([tuple(x)])
    _, parent, missing, _ = _bfs(
        field, p, region, fx, np.array([fy], np.int64),
        UNBOUNDED if cap is None else cap, True,
    )
    if missing:
        raise NoPathError(f"{tuple(x)} and {tuple(y)} are not joined by a p-open path"
                          + ("" if cap is None else f" of length <= {cap}"))
    chain = [fy]
    while chain[-1] != fx:
        chain.append(int(parent[chain[-1]]))
    return VertexPath(region.coords(np.asarray(chain[::-1], dtype=np.int64)))


def regularize(x: Sequence[int], labeling: ClusterLabeling, root: int) -> Vertex:
    """Cluster vertex closest to x in L1, ties broken lexicographically."""
    pts = labeling.vertices(root)
    if len(pts) == 0:
        raise DomainError("cannot regularize to an empty cluster")
    return closest_l1(x, pts)


def closest_l1(x: Sequence[int], pts: np.ndarray) -> Vertex:
    dist = np.abs(pts - np.asarray(x, dtype=np.int64)).sum(axis=1)
    cand = pts[dist == dist.min()]
    # rows of a labelling are already in lexicographic order; sort anyway for other callers
    best = cand[np.lexsort(cand.T[::-1])[0]]
    return tuple(int(c) for c in best)
