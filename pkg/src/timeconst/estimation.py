"""Monte Carlo estimates built on chemical distances.

Every estimator draws one field per sample from ``derive_seed(seed, index,
tag)`` and returns per-sample results in index order, so aggregates do not
depend on how samples were spread over workers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from shapely.geometry import MultiPoint, Point

from . import _kernels as K
from .chemical import UNBOUNDED, closest_l1, geodesic
from .clusters import label_clusters, spanning_cluster
from .errors import DomainError, EstimationError
from .field import MONOTONE, TWO_SOURCE, CoupledEdgeField, derive_seed
from .lattice import LatticeWindow, Region, l1, linf
from .parallel import map_samples
from .renormalization import clopper_pearson

_EMPTY_MASK = np.zeros(0, dtype=np.bool_)
_TAG_MU, _TAG_MOD, _TAG_TAIL, _TAG_STRETCH, _TAG_COUPLE = 11, 13, 17, 19, 23


def _distances(field, p, src, region, targets, cap=UNBOUNDED):
    dist, _, _, truncated = K.bfs(
        *field.kernel_args(p), region.origin_array, region.shape_array, _EMPTY_MASK,
        region.flat(src), region.flat_many(targets), cap, False,
    )
    return dist, truncated


def _regularized_pair(field, p_reg, a, b):
    """Endpoints regularized to the spanning p_reg-cluster, or None if censored."""
    region = Region.of_window(field.window)
    lab = label_clusters(field, region, p_reg)
    root = spanning_cluster(lab)
    if root is None:
        return None
    pts = lab.vertices(root)
    return closest_l1(a, pts), closest_l1(b, pts)


def _window(d: int, reach: int, margin: int | None) -> LatticeWindow:
    margin = max(8, reach // 2) if margin is None else margin
    return LatticeWindow(d, reach + margin)


# --- time constant ----------------------------------------------------------------


@dataclass
class EstimateRecord:
    d: int
    p: float
    x: tuple[int, ...]
    n: int
    samples: int
    censored: int
    mean: float
    stderr: float

    def row(self) -> dict:
        return dict(d=self.d, p=self.p, x=" ".join(map(str, self.x)), n=self.n,
                    samples=self.samples, censored=self.censored,
                    mean=repr(self.mean), stderr=repr(self.stderr))


def _levels_sample(index, d, x, n, levels, p_reg, seed, tag, margin):
    """D at each level between regularized 0 and nx on one shared field."""
    nx = tuple(n * c for c in x)
    field = CoupledEdgeField(_window(d, linf(nx), margin), derive_seed(seed, index, tag))
    pair = _regularized_pair(field, p_reg, (0,) * d, nx)
    if pair is None:
        return None
    a, b = pair
    region = Region.of_window(field.window)
    out = []
    for p in levels:
        dist, _ = _distances(field, p, a, region, np.array([b]))
        out.append(int(dist[region.flat(b)]))
    return out, l1(np.subtract(b, a))


def _summarize(vals: np.ndarray, n: int) -> tuple[float, float]:
    v = vals / n
    mean = float(math.fsum(v) / len(v))
    se = float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return mean, se


def estimate_mu(p: float, x: Sequence[int], n_list: Sequence[int], samples: int, d: int | None = None,
                seed: int = 0, workers: int = 1, margin: int | None = None) -> list[EstimateRecord]:
    """mu_p(x) estimates D(0~, (nx)~)/n with endpoints regularized to the spanning cluster."""
    x = tuple(int(c) for c in x)
    d = d or len(x)
    out = []
    for n in n_list:
        res = map_samples(_levels_sample, range(samples), workers, d=d, x=x, n=n, levels=(p,),
                          p_reg=p, seed=seed, tag=_TAG_MU, margin=margin)
        kept = [r for r in res if r is not None]
        if not kept:
            raise EstimationError(f"all {samples} samples censored at p={p}, n={n}",
                                  diagnostics=dict(p=p, x=x, n=n, samples=samples))
        D = np.array([r[0][0] for r in kept], dtype=float)
        floor = np.array([r[1] for r in kept])
        if np.any(D < floor) or np.any(D < 0):
            raise EstimationError("retained sample violates D >= L1 distance",
                                  diagnostics=dict(p=p, x=x, n=n))
        mean, se = _summarize(D, n)
        out.append(EstimateRecord(d, p, x, n, len(kept), samples - len(kept), mean, se))
    return out


# --- regularity modulus ---------------------------------------------------------


@dataclass
class ModulusRow:
    p: float
    q: float
    sup_diff: float
    reference: float
    ratio: float


@dataclass
class ModulusTable:
    rows: list[ModulusRow]
    estimates: dict[tuple[float, tuple[int, ...]], EstimateRecord]
    pathwise_violations: int
    retained: dict[tuple[int, ...], int]
    censored: dict[tuple[int, ...], int]

    @property
    def kappa_hat(self) -> float:
        return max((r.ratio for r in self.rows if r.reference > 0), default=0.0)

    def dominated(self) -> bool:
        k = self.kappa_hat
        return all(r.sup_diff <= k * r.reference * (1 + 1e-12) for r in self.rows)

    def ratio_bounded(self) -> bool:
        """The ratio at the smallest gap does not exceed the ratios of the other rows."""
        rows = sorted((r for r in self.rows if r.reference > 0), key=lambda r: r.q - r.p)
        if len(rows) < 2:
            return True
        return rows[0].ratio <= max(r.ratio for r in rows[1:])

    def monotone(self) -> bool:
        """mu_p >= mu_q for every estimated (p, direction)."""
        qs = {r.q for r in self.rows}
        for (p, x), rec in self.estimates.items():
            for q in qs:
                if q > p and rec.mean < self.estimates[(q, x)].mean:
                    return False
        return True


def modulus_reference(p: float, q: float) -> float:
    g = q - p
    return 0.0 if g <= 0 else g * abs(math.log(g))


def modulus_experiment(p_grid: Sequence[float], q: float, directions: Sequence[Sequence[int]], n: int,
                       samples: int, seed: int = 0, workers: int = 1,
                       margin: int | None = None) -> ModulusTable:
    """Common-random-number estimates of mu_p and mu_q on monotone-coupled fields.

    Endpoints are regularized to the spanning cluster at the smallest level,
    which is contained in the open graph at every larger level, so all
    distances are finite and D_q <= D_p holds sample by sample.
    """
    if any(p > q for p in p_grid):
        raise DomainError("every p must be <= q")
    levels = sorted(set(p_grid) | {q})
    p_reg = levels[0]
    est: dict = {}
    violations = 0
    retained, censored = {}, {}
    for x in directions:
        x = tuple(int(c) for c in x)
        res = map_samples(_levels_sample, range(samples), workers, d=len(x), x=x, n=n,
                          levels=tuple(levels), p_reg=p_reg, seed=seed, tag=_TAG_MOD, margin=margin)
        kept = [r[0] for r in res if r is not None]
        if not kept:
            raise EstimationError(f"all samples censored for direction {x}", diagnostics=dict(x=x))
        D = np.array(kept, dtype=float)  # (samples, levels)
        violations += int(np.sum(np.diff(D, axis=1) > 0))
        retained[x], censored[x] = len(kept), samples - len(kept)
        for k, p in enumerate(levels):
            mean, se = _summarize(D[:, k], n)
            est[(p, x)] = EstimateRecord(len(x), p, x, n, len(kept), samples - len(kept), mean, se)
    rows = []
    for p in sorted(p_grid, reverse=True):
        sup = max(abs(est[(p, tuple(x))].mean - est[(q, tuple(x))].mean) for x in directions)
        ref = modulus_reference(p, q)
        rows.append(ModulusRow(p, q, sup, ref, sup / ref if ref > 0 else 0.0))
    return ModulusTable(rows, est, violations, retained, censored)


# --- shapes ------------------------------------------------------------------------


DEFAULT_DIRECTIONS = [(1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1),
                      (-1, 0), (-2, -1), (-1, -1), (-1, -2), (0, -1), (1, -2), (1, -1), (2, -1)]


def hausdorff_convex(a, b) -> float:
    """Hausdorff distance between two convex polygons (as filled sets)."""
    da = max(b.distance(Point(c)) for c in a.exterior.coords)
    db = max(a.distance(Point(c)) for c in b.exterior.coords)
    return float(max(da, db))


def shape_polygon(directions, mus):
    pts = [tuple(np.asarray(x, float) / m) for x, m in zip(directions, mus)]
    return MultiPoint(pts).convex_hull


@dataclass
class ShapeReport:
    p: float
    q: float
    hausdorff: float
    kappa_hat: float
    mu_min: float
    bound: float
    mu_p: dict = dc_field(default_factory=dict)
    mu_q: dict = dc_field(default_factory=dict)


def shape_hausdorff(p: float, q: float, directions: Sequence[Sequence[int]] | None, n: int, samples: int,
                    seed: int = 0, workers: int = 1, margin: int | None = None) -> ShapeReport:
    directions = [tuple(x) for x in (directions or DEFAULT_DIRECTIONS)]
    if len(directions) < 8:
        raise DomainError("at least 8 directions are needed to outline a planar shape")
    table = modulus_experiment([p], q, directions, n, samples, seed, workers, margin)
    mp = {x: table.estimates[(p, x)].mean for x in directions}
    mq = {x: table.estimates[(q, x)].mean for x in directions}
    if min(list(mp.values()) + list(mq.values())) <= 0:
        raise EstimationError("non-positive time constant estimate", diagnostics=dict(mu_p=mp, mu_q=mq))
    # mu per unit Euclidean direction, then the boundary point x / mu(x)
    units = [np.asarray(x, float) / np.linalg.norm(x) for x in directions]
    up = [mp[x] / np.linalg.norm(x) for x in directions]
    uq = [mq[x] / np.linalg.norm(x) for x in directions]
    dh = hausdorff_convex(shape_polygon(units, up), shape_polygon(units, uq))
    ref = modulus_reference(p, q)
    kappa = max(abs(a - b) for a, b in zip(up, uq)) / ref if ref > 0 else 0.0
    mu_min = min(up + uq)
    return ShapeReport(p, q, dh, kappa, mu_min, kappa / mu_min**2 * ref, mp, mq)


# --- stretch tails and calibration ---------------------------------------------


def _sphere(d: int, r: int) -> np.ndarray:
    """All integer points with L1 norm exactly r, lexicographic order."""
    pts = [v for v in itertools.product(range(-r, r + 1), repeat=d) if sum(map(abs, v)) == r]
    return np.asarray(pts, dtype=np.int64)


def _stretch_sample(index, d, p, N, radius, seed):
    field = CoupledEdgeField(LatticeWindow(d, radius), derive_seed(seed, index, _TAG_STRETCH))
    region = Region.of_window(field.window)
    pts = _sphere(d, N)
    dist, _ = _distances(field, p, (0,) * d, region, np.zeros((0, d), np.int64))
    D = dist[region.flat_many(pts)].astype(float)
    out = D / N
    out[D < 0] = np.nan  # not connected inside the window
    return out


def stretch_ratios(p: float, N: int, samples: int, d: int = 2, seed: int = 0,
                   max_ratio: float = 10.0, workers: int = 1) -> np.ndarray:
    """D(0, x)/|x|_1 over x on the L1 sphere of radius N, pooled over samples.

    Distances are taken inside [-R, R]^d with R = ceil(max_ratio * N); nan
    marks pairs that are not connected there.
    """
    radius = int(math.ceil(max_ratio * N))
    res = map_samples(_stretch_sample, range(samples), workers, d=d, p=p, N=N, radius=radius, seed=seed)
    return np.concatenate(res)


@dataclass
class TailRow:
    p: float
    beta: float
    l1: int
    samples: int
    hits: int
    freq: float
    ci_low: float
    ci_high: float


def _tail_sample(index, d, p, l, seed):
    field = CoupledEdgeField(LatticeWindow(d, 2 * l), derive_seed(seed, index, _TAG_TAIL + l))
    x = (l,) + (0,) * (d - 1)
    region = Region.of_window(field.window)
    dist, _ = _distances(field, p, (0,) * d, region, np.array([x]))
    D = int(dist[region.flat(x)])
    return math.inf if D < 0 else D


def stretch_tail(p: float, x_l1: Sequence[int], beta: float, samples: int, d: int = 2,
                 seed: int = 0, workers: int = 1) -> list[TailRow]:
    """Frequency of beta |x|_1 <= D(0, x) < inf for x = (l, 0, ..., 0).

    D is measured inside the window [-2l, 2l]^d.
    """
    rows = []
    for l in x_l1:
        D = map_samples(_tail_sample, range(samples), workers, d=d, p=p, l=l, seed=seed)
        hits = sum(1 for v in D if beta * l <= v < math.inf)
        lo, hi = clopper_pearson(hits, samples)
        rows.append(TailRow(p, beta, l, samples, hits, hits / samples, lo, hi))
    return rows


# --- coupling concentration ---------------------------------------------------


@dataclass
class CouplingReport:
    p: float
    q: float
    delta: float
    l1: int
    samples: int
    censored: int
    target: float
    mean: float
    stderr: float
    exceed_freq: float
    exceed_stderr: float
    chernoff: float

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean - self.target) <= 3 * self.stderr

    @property
    def exceed_ok(self) -> bool:
        return self.exceed_freq <= self.chernoff + 3 * self.exceed_stderr


def _coupling_sample(index, x, p, q, seed, margin):
    d = len(x)
    field = CoupledEdgeField(_window(d, linf(x), margin), derive_seed(seed, index, _TAG_COUPLE),
                             TWO_SOURCE, q)
    pair = _regularized_pair(field, q, (0,) * d, x)
    if pair is None:
        return None
    path = geodesic(field, q, *pair)
    if len(path) == 0:
        return None
    closed = int(np.count_nonzero(~field.path_states(path.vertices, p)))
    return closed, len(path)


def geodesic_closed_fraction(p: float, q: float, x: Sequence[int], delta: float, samples: int,
                             seed: int = 0, workers: int = 1, margin: int | None = None) -> CouplingReport:
    """Closed fraction at level p along q-geodesics of a two-source field."""
    if p > q or delta <= 0:
        raise DomainError("need p <= q and delta > 0")
    x = tuple(int(c) for c in x)
    res = map_samples(_coupling_sample, range(samples), workers, x=x, p=p, q=q, seed=seed, margin=margin)
    kept = [r for r in res if r is not None]
    if not kept:
        raise EstimationError("all samples censored", diagnostics=dict(p=p, q=q, x=x))
    c = np.array([r[0] for r in kept], float)
    n = np.array([r[1] for r in kept], float)
    frac = c / n
    target = (q - p) / q
    exceed = (c >= n * (target + delta)).astype(float)
    m = len(kept)
    se = float(np.std(frac, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    ef = float(exceed.mean())
    ese = math.sqrt(ef * (1 - ef) / m)
    return CouplingReport(p, q, delta, l1(x), m, samples - m, target, float(frac.mean()), se,
                          ef, ese, math.exp(-2 * delta**2 * l1(x)))
