"""Compiled inner loops.

Every kernel works on an axis-aligned region of Z^d given by the absolute
coordinates of its lowest corner (``origin``) and its extent (``shape``).
Vertices are addressed by their C-order flat index inside the region, so
flat order coincides with lexicographic order of coordinates.

Edge states are never stored: they are recomputed from a 64-bit mixing hash
of (seed, lane, axis, lower endpoint).  ``two_source`` selects the coupling;
``t0``/``t1`` are the thresholds on lane 0 and lane 1 (see ``field.py``).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_LANE = np.uint64(0xD1B54A32D192ED03)
_OFFSET = np.int64(1 << 32)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def edge_uniform(seed, lane, axis, coords):
    h = mix64(seed + np.uint64(lane) * _LANE)
    h = mix64(h ^ np.uint64(axis + 1))
    for k in range(coords.shape[0]):
        h = mix64(h ^ np.uint64(coords[k] + _OFFSET))
    return np.float64(h >> _S11) * _INV53


@njit(cache=True, inline="always")
def edge_open(seed, two_source, t0, t1, axis, coords):
    if edge_uniform(seed, 0, axis, coords) >= t0:
        return False
    if two_source:
        return edge_uniform(seed, 1, axis, coords) < t1
    return True


@njit(cache=True)
def _strides(shape):
    d = shape.shape[0]
    st = np.empty(d, np.int64)
    acc = 1
    for k in range(d - 1, -1, -1):
        st[k] = acc
        acc *= shape[k]
    return st


@njit(cache=True)
def _decode(flat, shape, strides, out):
    for k in range(shape.shape[0]):
        out[k] = (flat // strides[k]) % shape[k]


@njit(cache=True)
def open_mask(seed, two_source, t0, t1, origin, shape):
    """State of every edge leaving each vertex in the + direction.

    ``mask[k, v]`` is the edge (v, v + e_k); edges that leave the region are
    reported closed.
    """
    d = shape.shape[0]
    strides = _strides(shape)
    vol = 1
    for k in range(d):
        vol *= shape[k]
    mask = np.zeros((d, vol), np.bool_)
    loc = np.empty(d, np.int64)
    ab = np.empty(d, np.int64)
    for v in range(vol):
        _decode(v, shape, strides, loc)
        for k in range(d):
            ab[k] = origin[k] + loc[k]
        for k in range(d):
            if loc[k] + 1 < shape[k]:
                mask[k, v] = edge_open(seed, two_source, t0, t1, k, ab)
    return mask


@njit(cache=True)
def bfs(seed, two_source, t0, t1, origin, shape, member, src, targets, cap, want_parent):
    """Breadth-first search from ``src`` over open edges inside the region.

    ``member`` (empty for "all vertices") restricts the vertex set.  The
    search stops once every vertex listed in ``targets`` is reached, or when
    the depth reaches ``cap``.  Neighbours are scanned in the fixed order
    -e_0, +e_0, -e_1, +e_1, ... and parents are assigned first-writer, so
    the shortest-path tree is a deterministic function of the inputs.

    Returns (dist, parent, n_missing_targets, truncated) where ``truncated``
    is True when unexplored frontier remained at depth ``cap``.
    """
    d = shape.shape[0]
    strides = _strides(shape)
    vol = 1
    for k in range(d):
        vol *= shape[k]
    use_member = member.shape[0] > 0
    dist = np.full(vol, -1, np.int32)
    parent = np.full(vol if want_parent else 1, -1, np.int64)
    is_target = np.zeros(vol, np.bool_)
    missing = 0
    for t in targets:
        if not is_target[t]:
            is_target[t] = True
            missing += 1
    queue = np.empty(vol, np.int64)
    head = 0
    tail = 0
    dist[src] = 0
    queue[tail] = src
    tail += 1
    if is_target[src]:
        missing -= 1
    track = targets.shape[0] > 0
    if track and missing == 0:
        return dist, parent, 0, False
    loc = np.empty(d, np.int64)
    ab = np.empty(d, np.int64)
    truncated = False
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v]
        if dv >= cap:
            truncated = True
            continue
        _decode(v, shape, strides, loc)
        for k in range(d):
            ab[k] = origin[k] + loc[k]
        for k in range(d):
            for sgn in (-1, 1):
                if sgn < 0:
                    if loc[k] == 0:
                        continue
                    w = v - strides[k]
                    ab[k] -= 1
                    ok = edge_open(seed, two_source, t0, t1, k, ab)
                    ab[k] += 1
                else:
                    if loc[k] + 1 >= shape[k]:
                        continue
                    w = v + strides[k]
                    ok = edge_open(seed, two_source, t0, t1, k, ab)
                if not ok or dist[w] >= 0:
                    continue
                if use_member and not member[w]:
                    continue
                dist[w] = dv + 1
                if want_parent:
                    parent[w] = v
                queue[tail] = w
                tail += 1
                if is_target[w]:
                    missing -= 1
                    if track and missing == 0:
                        return dist, parent, 0, False
    return dist, parent, missing, truncated


@njit(cache=True)
def _find(par, x):
    while par[x] != x:
        par[x] = par[par[x]]
        x = par[x]
    return x


@njit(cache=True)
def label_region(seed, two_source, t0, t1, origin, shape, member):
    """Union-find labelling of the open subgraph induced on the region.

    Each vertex gets the flat index of the smallest vertex of its component
    (lexicographically smallest coordinates); non-members get -1.
    """
    d = shape.shape[0]
    strides = _strides(shape)
    vol = 1
    for k in range(d):
        vol *= shape[k]
    use_member = member.shape[0] > 0
    par = np.arange(vol)
    loc = np.empty(d, np.int64)
    ab = np.empty(d, np.int64)
    for v in range(vol):
        if use_member and not member[v]:
            continue
        _decode(v, shape, strides, loc)
        for k in range(d):
            ab[k] = origin[k] + loc[k]
        for k in range(d):
            if loc[k] + 1 >= shape[k]:
                continue
            w = v + strides[k]
            if use_member and not member[w]:
                continue
            if not edge_open(seed, two_source, t0, t1, k, ab):
                continue
            a = _find(par, v)
            b = _find(par, w)
            if a < b:
                par[b] = a
            elif b < a:
                par[a] = b
    roots = np.empty(vol, np.int64)
    for v in range(vol):
        if use_member and not member[v]:
            roots[v] = -1
        else:
            roots[v] = _find(par, v)
    return roots


@njit(cache=True)
def path_edge_states(seed, two_source, t0, t1, coords):
    """Open/closed flag for each consecutive pair of an (n, d) vertex array."""
    n = coords.shape[0]
    d = coords.shape[1]
    out = np.zeros(max(n - 1, 0), np.bool_)
    low = np.empty(d, np.int64)
    for j in range(n - 1):
        axis = -1
        for k in range(d):
            diff = coords[j + 1, k] - coords[j, k]
            if diff != 0:
                axis = k
                if diff > 0:
                    for m in range(d):
                        low[m] = coords[j, m]
                else:
                    for m in range(d):
                        low[m] = coords[j + 1, m]
        out[j] = edge_open(seed, two_source, t0, t1, axis, low)
    return out
