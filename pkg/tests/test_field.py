import io
import math

import numpy as np
import pytest

from timeconst.errors import ParameterError
from timeconst.field import (
    MONOTONE, TWO_SOURCE, CoupledEdgeField, export_open_edges, read_open_edges, sample_field,
)
from timeconst.lattice import LatticeWindow

from oracles import open_edges


def _edge_set(field, p):
    return set(field.open_edge_ids(p).tolist())


def test_determinism_across_instances():
    w = LatticeWindow(2, 10)
    a, b = sample_field(w, 42), sample_field(w, 42)
    for p in (0.2, 0.5, 0.9):
        assert _edge_set(a, p) == _edge_set(b, p)
    assert _edge_set(a, 0.5) != _edge_set(sample_field(w, 43), 0.5)


def test_extremes():
    w = LatticeWindow(2, 5)
    f = sample_field(w, 1)
    assert len(f.open_edge_ids(1.0)) == w.n_edges
    assert len(f.open_edge_ids(0.0)) == 0


def test_open_fraction_binomial():
    w = LatticeWindow(2, 100)
    f = sample_field(w, 7)
    n = w.n_edges
    k = len(f.open_edge_ids(0.5))
    assert abs(k / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_scalar_hash_matches_kernel():
    # the materialized mask and the pure-Python hash agree edge by edge
    w = LatticeWindow(2, 4)
    for mode, q in ((MONOTONE, 1.0), (TWO_SOURCE, 0.9)):
        f = CoupledEdgeField(w, 99, mode, q)
        fast = set()
        d = w.d
        for e in f.open_edge_ids(0.6).tolist():
            flat, axis = divmod(e, d)
            low = tuple(int(c) - w.L for c in np.unravel_index(flat, w.shape))
            high = tuple(c + (k == axis) for k, c in enumerate(low))
            fast.add((low, high))
        assert fast == set(open_edges(f, 0.6, (-w.L,) * d, (w.L,) * d))


def test_monotone_nesting():
    f = sample_field(LatticeWindow(2, 20), 5)
    assert _edge_set(f, 0.6) <= _edge_set(f, 0.8)


def test_two_source_equal_levels():
    f = CoupledEdgeField(LatticeWindow(2, 20), 5, TWO_SOURCE, 0.8)
    assert _edge_set(f, 0.8) == set(f.open_edge_ids(0.8).tolist())
    assert _edge_set(f, 0.5) <= _edge_set(f, 0.8)
    with pytest.raises(ParameterError):
        f.open_edge_ids(0.9)


def test_two_source_thinning_law():
    # among q-open edges, the p-closed ones form Bernoulli((q - p)/q)
    q, p = 0.9, 0.6
    f = CoupledEdgeField(LatticeWindow(2, 120), 11, TWO_SOURCE, q)
    nq = len(f.open_edge_ids(q))
    nc = nq - len(f.open_edge_ids(p))
    target = (q - p) / q
    assert abs(nc / nq - target) <= 3 * math.sqrt(target * (1 - target) / nq)


def test_closed_edges_on_path():
    f = sample_field(LatticeWindow(2, 6), 3)
    path = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]
    assert f.closed_edges_on_path(path, 1.0) == []
    assert len(f.closed_edges_on_path(path, 0.0)) == 4
    expect = [(a, b) for a, b in zip(path, path[1:]) if not f.open_at(a, b, 0.5)]
    assert f.closed_edges_on_path(path, 0.5) == expect


def test_snapshot_roundtrip():
    w = LatticeWindow(3, 4, 1)
    f = CoupledEdgeField(w, 2**63 + 5, TWO_SOURCE, 0.7)
    buf = io.BytesIO()
    export_open_edges(f, 0.5, buf)
    buf.seek(0)
    head, ids = read_open_edges(buf)
    assert head == dict(d=3, L=4, N=1, p=0.5, seed=2**63 + 5, mode=TWO_SOURCE, q=0.7)
    assert np.array_equal(ids, f.open_edge_ids(0.5))


def test_parameter_checks():
    w = LatticeWindow(2, 3)
    with pytest.raises(ParameterError):
        CoupledEdgeField(w, 0, "bogus")
    with pytest.raises(ParameterError):
        sample_field(w, 0).open_edge_ids(1.5)
