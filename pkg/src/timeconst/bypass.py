"""Turning a q-open path into a p-open one through good boxes.

The p-closed edges of a q-open path are bypassed at the macroscopic scale:
each closed edge marks its box, bad boxes are replaced by the exterior
boundary of their bad component, and the resulting *-connected sets of good
boxes are crossed with geodesic hops between crossing-cluster
representatives.  Every bound of the construction is re-measured on the
output.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .chemical import VertexPath, geodesic
from .clusters import BadComponents, label_clusters, spanning_cluster, star_components
from .errors import ConsistencyError, HypothesisError, NoPathError, PreconditionError
from .lattice import (
    Region, Site, Vertex, big_box_bounds, box_bounds, box_of, star_neighbors,
)
from .renormalization import MacroField, distance_cap


# --- lattice-animal cover --------------------------------------------------------


@dataclass
class AnimalCover:
    sites: list[Site]           # the covering sequence, repetitions allowed
    times: list[int]            # index in the path where each site was opened
    visited: set[Site]          # every box the path visits

    @property
    def size(self) -> int:
        return len(self.sites)


def animal_cover(path: VertexPath, N: int) -> AnimalCover:
    """Greedy cover of a path by enlarged boxes.

    Starting from the box of the first vertex, a new site is opened at the
    first vertex that leaves the enlarged box of the current one.
    """
    verts = path.as_tuples()
    if not verts:
        return AnimalCover([], [], set())
    cur = box_of(verts[0], N)
    sites, times = [cur], [0]
    lo, hi = big_box_bounds(cur, N)
    for j, v in enumerate(verts):
        if all(a <= c <= b for a, c, b in zip(lo, v, hi)):
            continue
        cur = box_of(v, N)
        sites.append(cur)
        times.append(j)
        lo, hi = big_box_bounds(cur, N)
    return AnimalCover(sites, times, {box_of(v, N) for v in verts})


def cover_violations(path: VertexPath, N: int, cover: AnimalCover) -> list[str]:
    """Checks of the cover statement; an empty list means all hold."""
    out = []
    d = path.vertices.shape[1]
    if cover.size > 1 + (len(path) + 1) / N:
        out.append(f"|cover| = {cover.size} > 1 + (|path| + 1)/N = {1 + (len(path) + 1) / N:.3f}")
    boxes = [big_box_bounds(i, N) for i in set(cover.sites)]
    for v in path.as_tuples():
        if not any(all(a <= c <= b for a, c, b in zip(lo, v, hi)) for lo, hi in boxes):
            out.append(f"vertex {v} not covered")
            break
    if len(cover.visited) > 3**d * cover.size:
        out.append(f"|visited| = {len(cover.visited)} > 3^d |cover| = {3**d * cover.size}")
    return out


# --- links through good boxes ----------------------------------------------------


def star_path(sites: set[Site], a: Site, b: Site) -> list[Site]:
    """Shortest *-path from a to b inside ``sites`` (deterministic BFS)."""
    if a not in sites or b not in sites:
        raise PreconditionError(f"endpoint boxes {a}, {b} are not both in the site set")
    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            break
        for w in star_neighbors(u):
            if w in sites and w not in prev:
                prev[w] = u
                queue.append(w)
    if b not in prev:
        raise PreconditionError("site set is not *-connected between the endpoint boxes")
    chain = [b]
    while chain[-1] != a:
        chain.append(prev[chain[-1]])
    return chain[::-1]


def representative(macro: MacroField, i: Site) -> Vertex:
    """Lexicographically smallest crossing-cluster vertex inside B_N(i)."""
    rep = macro.reports[tuple(i)]
    pts = rep.crossing_vertices_in(*box_bounds(i, macro.N))
    if len(pts) == 0:
        raise ConsistencyError(f"good box {i} has no crossing-cluster vertex in its N-box")
    return tuple(int(c) for c in pts[0])


def _in_crossing_cluster(macro: MacroField, v: Vertex) -> bool:
    i = box_of(v, macro.N)
    rep = macro.reports.get(i)
    return rep is not None and rep.good and rep.in_cluster(v)


def link_through_good_boxes(macro: MacroField, sites: Sequence[Site], x: Sequence[int],
                            y: Sequence[int], p: float) -> tuple[VertexPath, list[Site]]:
    """p-open path from x to y hopping through a *-connected set of good boxes.

    Returns the path and the *-path of boxes it follows.  Each hop joins
    consecutive representatives by a geodesic of length at most 12 beta N.
    """
    x, y = tuple(int(c) for c in x), tuple(int(c) for c in y)
    S = {tuple(s) for s in sites}
    for s in S:
        if not macro.classified(s) or not macro.is_good(s):
            raise PreconditionError(f"site {s} is not a classified good site")
    for v in (x, y):
        if box_of(v, macro.N) not in S or not _in_crossing_cluster(macro, v):
            raise PreconditionError(f"{v} is not in the crossing cluster of a box of the set")
    chain = star_path(S, box_of(x, macro.N), box_of(y, macro.N))
    stops = [x] + [representative(macro, i) for i in chain[1:-1]] + [y] if len(chain) > 1 else [x, y]
    owners = chain[:-1] if len(chain) > 1 else chain
    cap = distance_cap(macro.beta, macro.N)
    out = VertexPath.of([x])
    for a, b, i in zip(stops[:-1], stops[1:], owners):
        lo, hi = big_box_bounds(i, macro.N)
        region = Region.around(tuple(c - cap for c in lo), tuple(c + cap for c in hi), macro.window)
        try:
            seg = geodesic(macro.field, p, a, b, region=region, cap=cap)
        except NoPathError as exc:
            raise ConsistencyError(f"hop {a} -> {b} through good box {i}: {exc}") from exc
        out = out + seg
    return out, chain


# --- path modification -------------------------------------------------------


@dataclass
class BypassResult:
    gamma_prime: VertexPath
    link_segments: list[VertexPath]
    n_closed: int
    bad_mass: int
    boundary_mass: int
    bound_value: float
    extra_length: int
    satisfied: bool
    rho_bound: float = 0.0
    p_open: bool = True
    segments_ok: bool = True
    components: list[list[Site]] = dc_field(default_factory=list, repr=False)
    psi: list[tuple[int, int]] = dc_field(default_factory=list)

    def audit_row(self) -> dict:
        return dict(
            n_closed=self.n_closed, bad_mass=self.bad_mass, boundary_mass=self.boundary_mass,
            extra_length=self.extra_length, bound_value=self.bound_value,
            satisfied=self.satisfied,
        )


def loop_erase(verts: list[Vertex]) -> list[Vertex]:
    """Chronological loop erasure."""
    out: list[Vertex] = []
    pos: dict[Vertex, int] = {}
    for v in verts:
        k = pos.get(v)
        if k is not None:
            for w in out[k + 1:]:
                del pos[w]
            del out[k + 1:]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def _holes(S: set[Site], shape_radius: int, d: int) -> np.ndarray:
    """Label array of the bounded L1 components of the complement of S (0 = exterior or S)."""
    side = 2 * shape_radius + 3
    mask = np.zeros((side,) * d, dtype=bool)
    for s in S:
        mask[tuple(c + shape_radius + 1 for c in s)] = True
    lab, _ = ndimage.label(~mask, structure=ndimage.generate_binary_structure(d, 1))
    outer = lab[(0,) * d]
    lab[lab == outer] = 0
    return lab


def _drop_nested(comps: list[list[Site]], keep_out: Sequence[Site], radius: int, d: int) -> list[list[Site]]:
    """Remove components lying in a hole of another one.

    A hole holding the box of an endpoint is not treated as interior: the
    path starts or ends there, so the inner component must be kept.
    """
    nested = set()
    for k, outer in enumerate(comps):
        lab = _holes(set(outer), radius, d)
        if not lab.any():
            continue
        guarded = {int(lab[tuple(c + radius + 1 for c in s)]) for s in keep_out}
        for j, inner in enumerate(comps):
            if j == k or j in nested:
                continue
            h = int(lab[tuple(c + radius + 1 for c in inner[0])])
            if h and h not in guarded:
                nested.add(j)
    return [c for j, c in enumerate(comps) if j not in nested]


def modify_path(field, macro: MacroField, gamma: VertexPath, p: float, q: float,
                bad: BadComponents | None = None) -> BypassResult:
    """Bypass every p-closed edge of a q-open path through good boxes."""
    N, d = macro.N, macro.d
    verts = gamma.as_tuples()
    if len(verts) == 0 or not gamma.has_unit_steps():
        raise HypothesisError("input is not a nearest-neighbour path")
    if not np.all(field.path_states(gamma.vertices, q)):
        raise HypothesisError("input path is not q-open")
    boxes = [box_of(v, N) for v in verts]
    if not all(macro.classified(b) for b in boxes):
        raise HypothesisError("path leaves the classified macroscopic grid")
    y, z = verts[0], verts[-1]
    for v in (y, z):
        if not macro.in_spanning_component(box_of(v, N)):
            raise HypothesisError(f"box of endpoint {v} is not in the spanning good component")
    lab = label_clusters(field, Region.of_window(field.window), p)
    root = spanning_cluster(lab)
    if root is None or lab.label_of(y) != root or lab.label_of(z) != root:
        raise HypothesisError("endpoints are not in the spanning p-cluster")

    bad = bad if bad is not None else macro.bad_components()
    visited_boxes = set(boxes)
    hit = sorted({bad.index[b] for b in visited_boxes if b in bad.index})
    if any(bad.components[k].touches_boundary for k in hit):
        raise HypothesisError("a bad component met by the path touches the window boundary")
    bad_mass = sum(bad.components[k].size for k in hit)
    boundary_mass = sum(len(bad.components[k].boundary) for k in hit)

    states = field.path_states(gamma.vertices, p)
    closed = np.flatnonzero(~states)
    cap = distance_cap(macro.beta, N)
    bound = 12 * macro.beta * N * (len(closed) + boundary_mass)
    rho = 12 * macro.beta * (1 + 2 * d) * N * (bad_mass + len(closed))
    if len(closed) == 0:
        return BypassResult(gamma, [], 0, bad_mass, boundary_mass, bound, 0, True, rho)

    # boxes marked by closed edges (both endpoints, so straddling edges stay covered)
    phi1: list[Site] = []
    for j in closed:
        for b in (boxes[j], boxes[j + 1]):
            if b not in phi1:
                phi1.append(b)
    E: list[Site] = []
    for b in phi1:
        comp = bad.component_of(b)
        for s in ([b] if comp is None else comp.boundary):
            if s not in E:
                E.append(s)
    comps = star_components(E)
    comps = _drop_nested(comps, [boxes[0], boxes[-1]], macro.radius, d)

    # visit times of each component, then chronological extraction
    member = {}
    for k, c in enumerate(comps):
        for s in c:
            member[s] = k
    visits: list[list[int]] = [[] for _ in comps]
    for t, b in enumerate(boxes):
        k = member.get(b)
        if k is not None:
            visits[k].append(t)
    if any(not v for v in visits):
        raise ConsistencyError("a bypass component is never visited by the path")
    psi: list[tuple[int, int, int]] = []
    t = 0
    while True:
        nxt = None
        for k, v in enumerate(visits):
            later = [u for u in v if u >= t]
            if later and (nxt is None or later[0] < nxt[1]):
                nxt = (k, later[0])
        if nxt is None:
            break
        k, t_in = nxt
        t_out = visits[k][-1]
        psi.append((k, t_in, t_out))
        t = t_out + 1

    covered = np.zeros(len(verts) - 1, dtype=bool)
    for _, a, b in psi:
        covered[a:b] = True
    if not covered[closed].all():
        raise ConsistencyError("a p-closed edge lies outside every bypass window")

    pieces: list[Vertex] = list(verts[: psi[0][1] + 1])
    for n_k, (k, a, b) in enumerate(psi):
        link, _ = link_through_good_boxes(macro, comps[k], verts[a], verts[b], p)
        pieces.extend(link.as_tuples()[1:])
        stop = psi[n_k + 1][1] if n_k + 1 < len(psi) else len(verts) - 1
        pieces.extend(verts[b + 1: stop + 1])
    out = VertexPath.of(loop_erase(pieces))

    p_open = bool(np.all(field.path_states(out.vertices, p)))
    old_edges = set(gamma.edges())
    segs, extra = _new_segments(out, old_edges)
    seg_ok = _segments_disjoint(segs) and out.is_self_avoiding()
    ok = p_open and seg_ok and extra <= bound and out.start == y and out.end == z
    return BypassResult(
        out, segs, int(len(closed)), bad_mass, boundary_mass, bound, extra, ok, rho,
        p_open, seg_ok, [comps[k] for k, _, _ in psi], [(a, b) for _, a, b in psi],
    )


def _new_segments(path: VertexPath, old_edges: set) -> tuple[list[VertexPath], int]:
    """Maximal runs of path edges absent from ``old_edges``."""
    verts = path.as_tuples()
    segs, cur, extra = [], None, 0
    for a, b in zip(verts[:-1], verts[1:]):
        if frozenset((a, b)) in old_edges:
            if cur is not None:
                segs.append(VertexPath.of(cur))
                cur = None
            continue
        extra += 1
        cur = [a, b] if cur is None else cur + [b]
    if cur is not None:
        segs.append(VertexPath.of(cur))
    return segs, extra


def _segments_disjoint(segs: list[VertexPath]) -> bool:
    seen: set[Vertex] = set()
    for s in segs:
        vs = s.as_tuples()
        if len(set(vs)) != len(vs):
            return False
        if seen & set(vs):
            return False
        seen |= set(vs)
    return True
