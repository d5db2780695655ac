import math

import numpy as np
import pytest

from timeconst.clusters import bad_components
from timeconst.combinatorics import (
    NU, animal_count, boundary_bound_audit, corridor_cover, fixed_animals, sample_site_fields,
    stirling_sum_bound, stirling_sweep,
)
from timeconst.errors import DomainError
from timeconst.experiments import random_walk
from timeconst.lattice import l1_neighbors


def test_nu():
    assert NU == math.e / (2 * math.pi)


def test_stirling_direct_sum():
    c = stirling_sum_bound(0.05, 3, 5, terms=200)
    # independent exact summation with integer binomials
    lhs = math.fsum(0.05**j * math.comb(3 + j - 1, j) for j in range(5, 205))
    assert math.isclose(c.lhs, lhs, rel_tol=1e-12)
    assert c.ok and c.terms == 200


def test_stirling_small_z():
    a = stirling_sum_bound(1e-6, 3, 5)
    assert a.ok and a.lhs < 1e-25 and 0 < a.rhs < 1e-20


def test_stirling_sweep_all_ok():
    checks = stirling_sweep()
    assert len(checks) == 3 * 3 * 12 and all(c.ok for c in checks)


def test_stirling_domain():
    with pytest.raises(DomainError):
        stirling_sum_bound(0.5, 3, 5)
    with pytest.raises(DomainError):
        stirling_sum_bound(0.01, 2, 5)


def _animals_oracle(d, k):
    """Connected site sets of size k containing the origin, grown as frozensets."""
    origin = (0,) * d
    level = {frozenset([origin])}
    for _ in range(k - 1):
        nxt = set()
        for s in level:
            for v in s:
                for w in l1_neighbors(v):
                    if w not in s:
                        nxt.add(s | {w})
        level = nxt
    return len(level)


@pytest.mark.parametrize("d,kmax", [(2, 5), (3, 3)])
def test_animal_count_vs_oracle(d, kmax):
    for k in range(1, kmax + 1):
        n = animal_count(d, k)
        assert n == _animals_oracle(d, k)
        assert n <= (7**d) ** k


def test_animal_known_values():
    assert [fixed_animals(2, k) for k in range(1, 8)] == [1, 2, 6, 19, 63, 216, 760]
    assert animal_count(2, 1) == 1 and animal_count(2, 2) == 4


def test_corridor_trivial_and_straight():
    c = corridor_cover([(0, 0), (1, 0), (1, 1)], 4)
    assert c.tau == 0 and c.ok
    for K in (2, 4, 8):
        c = corridor_cover([(j, 0) for j in range(10 * K + 1)], K)
        assert len(c.centers) <= 11 and c.ok


@pytest.mark.parametrize("K", [2, 4, 8])
def test_corridor_random(K):
    rng = np.random.default_rng(K)
    for _ in range(100):
        path = random_walk(rng, 2, 150, star=True)
        c = corridor_cover(path, K)
        C = np.asarray(c.centers)
        assert all((np.abs(C - v).max(axis=1) <= K - 1).any() for v in path)
        assert len(c.centers) <= 1 + (len(path) - 1) / K


def test_boundary_singleton_domino():
    g = np.ones((9, 9), bool)
    g[4, 4] = False
    a = boundary_bound_audit(bad_components(g))
    assert a.ok and a.components == 1 and a.max_ratio == 4.0
    g[4, 5] = False
    a = boundary_bound_audit(bad_components(g))
    assert a.ok and a.max_ratio == 3.0  # |dC| = 6 <= 8


def test_boundary_audit_sampled():
    a = boundary_bound_audit(sample_site_fields(100, 7, 0.25, seed=1))
    assert a.ok and a.fields == 100 and a.components > 0
    assert a.max_ratio <= 4.0
