import itertools
import math

import numpy as np
import pytest

from timeconst.chemical import (
    VertexPath, chemical_distance, closest_l1, distances_from, geodesic, regularize,
)
from timeconst.clusters import label_clusters
from timeconst.errors import NoPathError
from timeconst.field import sample_field
from timeconst.lattice import LatticeWindow, Region

from oracles import dijkstra_distances


def test_trivial():
    f = sample_field(LatticeWindow(2, 5), 0)
    assert chemical_distance(f, 0.3, (1, 1), (1, 1)) == 0
    assert chemical_distance(f, 1.0, (0, 0), (3, 4)) == 7
    g = geodesic(f, 1.0, (0, 0), (2, 0))
    assert g.as_tuples() == [(0, 0), (1, 0), (2, 0)]
    assert len(geodesic(f, 0.5, (2, 2), (2, 2))) == 0


def test_dijkstra_example():
    w = LatticeWindow(2, 3)
    f = sample_field(w, 5)
    idx, D = dijkstra_distances(f, 0.6, (-3, -3), (3, 3))
    got = chemical_distance(f, 0.6, (0, 0), (3, 3))
    want = D[idx[(0, 0)], idx[(3, 3)]]
    assert got == (math.inf if np.isinf(want) else int(want))


@pytest.mark.parametrize("seed", range(25))
def test_all_pairs_vs_dijkstra(seed):
    w = LatticeWindow(2, 3)
    f = sample_field(w, seed)
    p = 0.55
    idx, D = dijkstra_distances(f, p, (-3, -3), (3, 3))
    reg = Region.of_window(w)
    src = (-1, 0)
    dist = distances_from(f, p, src)
    for v, k in idx.items():
        want = D[idx[src], k]
        assert dist[reg.flat(v)] == (-1 if np.isinf(want) else int(want))
    rng = np.random.default_rng(seed)
    verts = list(idx)
    for _ in range(10):
        x, y = (verts[j] for j in rng.integers(0, len(verts), 2))
        want = D[idx[x], idx[y]]
        got = chemical_distance(f, p, x, y)
        if np.isinf(want):
            assert got == math.inf
            with pytest.raises(NoPathError):
                geodesic(f, p, x, y)
        else:
            assert got == int(want)
            g = geodesic(f, p, x, y)
            assert len(g) == got and g.start == x and g.end == y
            assert g.has_unit_steps() and g.is_self_avoiding()
            assert f.closed_edges_on_path(g, p) == []


def test_cap_semantics():
    f = sample_field(LatticeWindow(2, 8), 0)
    assert chemical_distance(f, 1.0, (0, 0), (5, 5), cap=10) == 10
    assert chemical_distance(f, 1.0, (0, 0), (5, 5), cap=9) is None
    with pytest.raises(NoPathError):
        geodesic(f, 1.0, (0, 0), (5, 5), cap=9)


def test_geodesic_deterministic():
    f = sample_field(LatticeWindow(2, 10), 4)
    a = geodesic(f, 0.7, (-5, -5), (5, 5)) if chemical_distance(f, 0.7, (-5, -5), (5, 5)) < math.inf else None
    if a is not None:
        assert np.array_equal(a.vertices, geodesic(f, 0.7, (-5, -5), (5, 5)).vertices)


def test_regularize_examples():
    assert closest_l1((0, 0), np.array([(1, 0), (0, 1)])) == (0, 1)
    f = sample_field(LatticeWindow(2, 6), 2)
    lab = label_clusters(f, Region.of_window(f.window), 0.7)
    r = lab.largest
    v = tuple(int(c) for c in lab.vertices(r)[3])
    assert regularize(v, lab, r) == v


@pytest.mark.parametrize("seed", range(10))
def test_regularize_vs_scan(seed):
    f = sample_field(LatticeWindow(2, 6), seed)
    lab = label_clusters(f, Region.of_window(f.window), 0.6)
    r = lab.largest
    pts = [tuple(int(c) for c in v) for v in lab.vertices(r)]
    for x in itertools.product(range(-6, 7, 3), repeat=2):
        best = min(pts, key=lambda v: (abs(v[0] - x[0]) + abs(v[1] - x[1]), v))
        assert regularize(x, lab, r) == best


def test_vertex_path_join():
    a = VertexPath.of([(0, 0), (1, 0)])
    b = VertexPath.of([(1, 0), (1, 1)])
    assert (a + b).as_tuples() == [(0, 0), (1, 0), (1, 1)]
