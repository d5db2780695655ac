import itertools

import numpy as np
import pytest

from timeconst.clusters import (
    bad_components, diameter, is_crossing, is_star_connected, label_clusters, spanning_cluster,
    star_components,
)
from timeconst.errors import DomainError
from timeconst.field import sample_field
from timeconst.lattice import LatticeWindow, Region

from oracles import box_vertices, dfs_components


def test_full_and_empty():
    w = LatticeWindow(2, 4)
    f = sample_field(w, 0)
    reg = Region.of_window(w)
    assert label_clusters(f, reg, 1.0).partition() == {frozenset(w.vertices())}
    parts = label_clusters(f, reg, 0.0).partition()
    assert len(parts) == w.n_vertices and all(len(c) == 1 for c in parts)


def test_matches_dfs_example():
    w = LatticeWindow(2, 2)
    f = sample_field(w, 3)
    reg = Region.of_window(w)
    assert label_clusters(f, reg, 0.6).partition() == dfs_components(f, 0.6, reg.lo, reg.hi)


@pytest.mark.parametrize("seed", range(20))
def test_matches_dfs_sub_region(seed):
    w = LatticeWindow(3, 3)
    f = sample_field(w, seed)
    lo, hi = (-3, -2, 0), (1, 3, 3)
    lab = label_clusters(f, Region(lo, hi), 0.4)
    assert lab.partition() == dfs_components(f, 0.4, lo, hi)


def test_component_order_and_roots():
    w = LatticeWindow(2, 6)
    f = sample_field(w, 9)
    lab = label_clusters(f, Region.of_window(w), 0.55)
    assert list(lab.sizes) == sorted(lab.sizes, reverse=True)
    for r in lab.components[:5]:
        assert lab.members(r)[0] == r  # root is the smallest member


def test_spanning_cluster():
    w = LatticeWindow(2, 5)
    f = sample_field(w, 1)
    reg = Region.of_window(w)
    assert spanning_cluster(label_clusters(f, reg, 1.0)) is not None
    assert spanning_cluster(label_clusters(f, reg, 0.0)) is None


def test_diameter_examples():
    assert diameter([(3, 4)]) == 0
    assert diameter([(0, 0), (0, 1), (1, 1)]) == 1
    with pytest.raises(DomainError):
        diameter([])


def test_diameter_random_vs_pairwise():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = rng.integers(-30, 30, size=(20, 3))
        brute = max(int(np.abs(a - b).max()) for a, b in itertools.product(pts, pts))
        assert diameter(pts) == brute


def _crossing_oracle(f, p, lo, hi, cluster):
    """Per axis: is some face-to-face path inside cluster ∩ box? (plain BFS)"""
    inside = {tuple(v) for v in cluster if all(a <= c <= b for a, c, b in zip(lo, v, hi))}
    d = len(lo)
    for k in range(d):
        start = [v for v in inside if v[k] == lo[k]]
        seen, stack = set(start), list(start)
        while stack:
            u = stack.pop()
            for j in range(d):
                for s in (-1, 1):
                    w = list(u)
                    w[j] += s
                    w = tuple(w)
                    if w in inside and w not in seen and f.open_at(u, w, p):
                        seen.add(w)
                        stack.append(w)
        if not any(v[k] == hi[k] for v in seen):
            return False
    return True


def test_is_crossing_trivial():
    w = LatticeWindow(2, 4)
    f = sample_field(w, 0)
    allv = np.array(box_vertices((-4, -4), (4, 4)))
    assert is_crossing(f, 1.0, allv, (-4, -4), (4, 4))
    assert not is_crossing(f, 1.0, np.zeros((0, 2), int), (-4, -4), (4, 4))


@pytest.mark.parametrize("seed", [11] + list(range(30)))
def test_is_crossing_vs_bfs(seed):
    w = LatticeWindow(2, 4)
    f = sample_field(w, seed)
    lab = label_clusters(f, Region.of_window(w), 0.7)
    for r in lab.components[:3]:
        pts = lab.vertices(r)
        got = is_crossing(f, 0.7, pts, (-4, -4), (4, 4))
        assert got == _crossing_oracle(f, 0.7, (-4, -4), (4, 4), pts)


def _exterior_boundary_oracle(bad: set, r: int, comp: set):
    """Good sites adjacent to comp reachable from outside the grid avoiding comp."""
    def nbrs(u):
        for k in range(2):
            for s in (-1, 1):
                w = list(u)
                w[k] += s
                yield tuple(w)
    ring = [v for v in itertools.product(range(-r - 1, r + 2), repeat=2)
            if max(abs(c) for c in v) == r + 1]
    seen, stack = set(ring), list(ring)
    while stack:
        u = stack.pop()
        for w in nbrs(u):
            if max(abs(c) for c in w) <= r + 1 and w not in comp and w not in seen:
                seen.add(w)
                stack.append(w)
    return {v for v in seen if max(abs(c) for c in v) <= r and any(w in comp for w in nbrs(v))}


def test_bad_components_all_good():
    assert bad_components(np.ones((5, 5), bool)).components == []


def test_singleton_and_domino():
    g = np.ones((7, 7), bool)
    g[3, 3] = False
    (c,) = bad_components(g).components
    assert c.sites == [(0, 0)] and len(c.boundary) == 4
    g[3, 4] = False
    (c,) = bad_components(g).components
    assert c.size == 2 and len(c.boundary) == 6 <= 8


@pytest.mark.parametrize("seed", range(15))
def test_bad_components_vs_oracle(seed):
    rng = np.random.default_rng(seed)
    r = 7
    good = rng.random((15, 15)) >= 0.3
    bc = bad_components(good)
    bad = {(int(a) - r, int(b) - r) for a, b in np.argwhere(~good)}
    assert {s for c in bc.components for s in c.sites} == bad
    for c in bc.components:
        comp = set(c.sites)
        # L1-connected
        assert len(star_components(c.sites)) >= 1
        assert set(c.boundary) == _exterior_boundary_oracle(bad, r, comp)
        assert not (set(c.boundary) & comp)
        if not c.touches_boundary:
            assert is_star_connected(c.boundary)
            assert len(c.boundary) <= 4 * c.size


def test_star_components():
    comps = star_components([(0, 0), (1, 1), (5, 5), (2, 2), (5, 7)])
    assert sorted(map(sorted, comps)) == [[(0, 0), (1, 1), (2, 2)], [(5, 5)], [(5, 7)]]
