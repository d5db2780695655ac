"""Coupled Bernoulli bond fields.

Each edge carries one uniform (monotone coupling) or two uniforms on
disjoint counter lanes (two-source coupling).  Uniforms are a pure function
of (seed, lane, axis, lower endpoint), so a field is just its seed and mode:
nothing is stored and the same edge has the same state in any window.

monotone:    open_p(e) = U0(e) < p, hence p-open implies q-open for p <= q.
two-source:  V = [U0 < q], Z = [U1 < p/q], open_q = V, open_p = V * Z.
             Z is independent of V, so a path chosen from the q-configuration
             carries p-closed edges that are i.i.d. Bernoulli((q - p)/q).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from . import _kernels as K
from .errors import CapacityError, GeometryError, ParameterError
from .lattice import LatticeWindow, Vertex

MONOTONE = "monotone"
TWO_SOURCE = "two-source"

MAX_REGION_VERTICES = 1 << 28

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def edge_uniform(seed: int, lane: int, axis: int, low: Sequence[int]) -> float:
    """Pure-Python twin of the compiled hash, used for scalar queries."""
    h = _mix64((seed + lane * 0xD1B54A32D192ED03) & _MASK64)
    h = _mix64(h ^ (axis + 1))
    for c in low:
        h = _mix64(h ^ ((c + (1 << 32)) & _MASK64))
    return (h >> 11) * (1.0 / 9007199254740992.0)


def derive_seed(master: int, index: int, tag: int = 0) -> int:
    """Per-sample seed from (master seed, sample index)."""
    return _mix64(_mix64((master ^ (tag * 0x9E3779B97F4A7C15)) & _MASK64) ^ (index & _MASK64))


def canonical_edge(u: Sequence[int], v: Sequence[int]) -> tuple[Vertex, Vertex, int]:
    """Return (low, high, axis) for a nearest-neighbour pair in either order."""
    u, v = tuple(int(c) for c in u), tuple(int(c) for c in v)
    diff = [b - a for a, b in zip(u, v)]
    if sum(abs(x) for x in diff) != 1:
        raise GeometryError(f"{u} and {v} are not nearest neighbours")
    axis = next(k for k, x in enumerate(diff) if x)
    return (u, v, axis) if diff[axis] > 0 else (v, u, axis)


@dataclass(frozen=True)
class CoupledEdgeField:
    window: LatticeWindow
    seed: int
    mode: str = MONOTONE
    q: float = 1.0

    def __post_init__(self):
        if self.mode not in (MONOTONE, TWO_SOURCE):
            raise ParameterError(f"unknown coupling mode {self.mode!r}")
        if not 0.0 < self.q <= 1.0:
            raise ParameterError(f"q must lie in (0, 1], got {self.q}")
        if self.window.n_vertices > MAX_REGION_VERTICES:
            raise CapacityError(
                f"window with {self.window.n_vertices} vertices exceeds the "
                f"{MAX_REGION_VERTICES} vertex budget"
            )
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)

    @property
    def two_source(self) -> bool:
        return self.mode == TWO_SOURCE

    def thresholds(self, p: float) -> tuple[bool, float, float]:
        """(two_source, lane-0 threshold, lane-1 threshold) for level p."""
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {p}")
        if self.two_source:
            if p > self.q:
                raise ParameterError(f"two-source field built for q={self.q} queried at p={p}")
            return True, self.q, p / self.q
        return False, p, 1.0

    def kernel_args(self, p: float):
        ts, t0, t1 = self.thresholds(p)
        return np.uint64(self.seed), ts, t0, t1

    def open_at(self, u: Sequence[int], v: Sequence[int], p: float) -> bool:
        low, high, axis = canonical_edge(u, v)
        if not (self.window.contains(low) and self.window.contains(high)):
            raise GeometryError(f"edge {low}-{high} leaves the window")
        ts, t0, t1 = self.thresholds(p)
        if edge_uniform(self.seed, 0, axis, low) >= t0:
            return False
        return not ts or edge_uniform(self.seed, 1, axis, low) < t1

    def path_states(self, vertices: np.ndarray, p: float) -> np.ndarray:
        """Open flags of the consecutive edges of an (n, d) vertex array."""
        coords = np.ascontiguousarray(vertices, dtype=np.int64).reshape(-1, self.window.d)
        return K.path_edge_states(*self.kernel_args(p), coords)

    def closed_edges_on_path(self, path, p: float) -> list[tuple[Vertex, Vertex]]:
        """p-closed edges of a path, in path order."""
        verts = np.asarray(path.vertices if hasattr(path, "vertices") else path, dtype=np.int64)
        if len(verts) < 2:
            return []
        states = self.path_states(verts, p)
        return [
            (tuple(int(c) for c in verts[j]), tuple(int(c) for c in verts[j + 1]))
            for j in np.flatnonzero(~states)
        ]

    def open_mask(self, p: float) -> np.ndarray:
        """Materialized states: array (d, side, ..., side) of + direction edges."""
        w = self.window
        origin = np.full(w.d, -w.L, np.int64)
        shape = np.full(w.d, w.side, np.int64)
        mask = K.open_mask(*self.kernel_args(p), origin, shape)
        return mask.reshape((w.d,) + w.shape)

    def open_edge_ids(self, p: float) -> np.ndarray:
        """Sorted canonical ids (flat index of low endpoint) * d + axis."""
        m = self.open_mask(p).reshape(self.window.d, -1)
        axis, flat = np.nonzero(m)
        return np.sort(flat.astype(np.uint64) * np.uint64(self.window.d) + axis.astype(np.uint64))


_MAGIC = b"OEF1"
_HEADER = struct.Struct("<4sIqqdQBdQ")


def export_open_edges(field: CoupledEdgeField, p: float, fh: BinaryIO) -> int:
    """Write the p-open edge set as a run-length-encoded binary snapshot.

    Layout (little endian):
      header  magic "OEF1", u32 d, i64 L, i64 N (-1 if none), f64 p,
              u64 seed, u8 mode (0 monotone, 1 two-source), f64 q, u64 n_runs
      runs    n_runs records (u64 first_id, u32 length) covering the sorted
              open edge ids, where id = flat(low endpoint) * d + axis and
              flat is the C-order index in [-L, L]^d.
    Returns the number of runs written.
    """
    ids = field.open_edge_ids(p)
    runs = _runs(ids)
    w = field.window
    fh.write(
        _HEADER.pack(
            _MAGIC, w.d, w.L, -1 if w.N is None else w.N, float(p), field.seed,
            1 if field.two_source else 0, float(field.q), len(runs),
        )
    )
    for start, length in runs:
        fh.write(struct.pack("<QI", start, length))
    return len(runs)


def read_open_edges(fh: BinaryIO) -> tuple[dict, np.ndarray]:
    raw = fh.read(_HEADER.size)
    magic, d, L, N, p, seed, mode, q, n_runs = _HEADER.unpack(raw)
    if magic != _MAGIC:
        raise ValueError("not an open-edge snapshot")
    ids = []
    for _ in range(n_runs):
        start, length = struct.unpack("<QI", fh.read(12))
        ids.append(np.arange(start, start + length, dtype=np.uint64))
    header = dict(d=d, L=L, N=None if N < 0 else N, p=p, seed=seed,
                  mode=TWO_SOURCE if mode else MONOTONE, q=q)
    return header, (np.concatenate(ids) if ids else np.zeros(0, np.uint64))


def _runs(ids: np.ndarray) -> list[tuple[int, int]]:
    if ids.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(ids.astype(np.int64)) != 1) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [ids.size]])
    return [(int(ids[s]), int(e - s)) for s, e in zip(starts, ends)]


def sample_field(window: LatticeWindow, seed: int, mode: str = MONOTONE, q: float = 1.0) -> CoupledEdgeField:
    return CoupledEdgeField(window, seed, mode, q)
