"""Numeric and enumerative checks of the combinatorial inputs.

  * the binomial tail bound  sum_{j>=N} z^j C(r+j-1, j) <= nu (ez(1+r/N))^N / (1 - ez(1+r/N))
    with nu = e / (2 pi);
  * counts of lattice animals containing a given site, against (7^d)^k;
  * the corridor covering of a macroscopic path by hypercubes of side 2K;
  * the exterior boundary bound |dC| <= 2d |C| on sampled bad components.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .clusters import BadComponents, bad_components, is_star_connected
from .errors import CapacityError, DomainError
from .field import derive_seed
from .lattice import Site, l1_neighbors

NU = math.e / (2 * math.pi)


# --- binomial tail bound ------------------------------------------------------


@dataclass
class StirlingCheck:
    z: float
    r: int
    N: int
    lhs: float
    rhs: float
    terms: int

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def stirling_sum_bound(z: float, r: int, N: int, terms: int | None = None,
                       rtol: float = 1e-12) -> StirlingCheck:
    """Tail sum versus its closed-form bound.

    Terms follow t_{j+1} = t_j z (r + j) / (j + 1).  With ``terms`` the sum
    is truncated there; otherwise it runs until the geometric remainder
    estimate falls below ``rtol`` relative to the partial sum.
    """
    w = math.e * z * (1 + r / N)
    if not (0 < w < 1) or r < 3 or N < 1:
        raise DomainError(f"need 0 < e z (1 + r/N) < 1, r >= 3, N >= 1 (got z={z}, r={r}, N={N})")
    # first term z^N C(r+N-1, N) in logs to stay finite for large N
    log_t = N * math.log(z) + math.lgamma(r + N) - math.lgamma(N + 1) - math.lgamma(r)
    t = math.exp(log_t)
    parts = [t]
    j = N
    while True:
        ratio = z * (r + j) / (j + 1)
        t *= ratio
        j += 1
        parts.append(t)
        if terms is not None:
            if len(parts) >= terms:
                break
            continue
        # remaining terms decrease at least geometrically once ratio < 1
        if ratio < 1 and t * ratio / (1 - ratio) <= rtol * math.fsum(parts):
            break
        if len(parts) > 10_000_000:
            raise CapacityError("tail sum did not converge within 10^7 terms")
    lhs = math.fsum(parts)
    rhs = NU * w**N / (1 - w)
    return StirlingCheck(z, r, N, lhs, rhs, len(parts))


def stirling_sweep(rs=(3, 5, 10), Ns=(3, 10, 30), points: int = 12) -> list[StirlingCheck]:
    """Grid over the validity region: z runs over fractions of its upper limit."""
    out = []
    for r in rs:
        for N in Ns:
            zmax = 1 / (math.e * (1 + r / N))
            for f in np.linspace(0.02, 0.98, points):
                out.append(stirling_sum_bound(float(f * zmax), r, N))
    return out


# --- lattice animals ------------------------------------------------------------


def _positive(v: Site) -> bool:
    """Sites after the origin in the order that compares the last axis first."""
    for c in reversed(v):
        if c != 0:
            return c > 0
    return False


def fixed_animals(d: int, k: int, budget: int = 5_000_000) -> int:
    """Number of lattice animals of size k up to translation (Redelmeier)."""
    if k < 1:
        raise DomainError("animal size must be >= 1")
    origin = (0,) * d
    counts = [0] * (k + 1)
    steps = [0]

    def grow(untried: list[Site], size: int, seen: set[Site], cells: set[Site]):
        while untried:
            steps[0] += 1
            if steps[0] > budget:
                raise CapacityError(f"animal enumeration exceeded {budget} steps")
            cell = untried.pop()
            counts[size + 1] += 1
            if size + 1 < k:
                cells.add(cell)
                new = []
                for w in l1_neighbors(cell):
                    if w not in seen and _positive(w) and not any(
                        u in cells for u in l1_neighbors(w) if u != cell
                    ):
                        new.append(w)
                seen.update(new)
                grow(untried + new, size + 1, seen, cells)
                seen.difference_update(new)
                cells.discard(cell)

    grow([origin], 0, {origin}, set())
    return counts[k]


def animal_count(d: int, k: int, budget: int = 5_000_000) -> int:
    """Connected site sets of size k containing the origin; asserts <= (7^d)^k."""
    n = k * fixed_animals(d, k, budget)
    assert n <= (7**d) ** k, f"{n} animals exceed (7^{d})^{k}"
    return n


# --- corridors ----------------------------------------------------------------------


@dataclass
class CorridorCover:
    centers: list[Site]
    times: list[int]
    K: int
    path_len: int
    contained: bool

    @property
    def tau(self) -> int:
        return len(self.centers) - 1

    @property
    def count_ok(self) -> bool:
        return len(self.centers) <= 1 + self.path_len / self.K

    @property
    def ok(self) -> bool:
        return self.contained and self.count_ok


def corridor_cover(path: Sequence[Site], K: int) -> CorridorCover:
    """Hypercube centers v(0..tau) along a macroscopic path.

    v(0) is the first site; the next center is the first later site at
    L-infinity distance >= K from the current center (for *-paths this is
    the first visit of the inner boundary of the current cube).
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    sites = [tuple(int(c) for c in s) for s in path]
    if not sites:
        return CorridorCover([], [], K, 0, True)
    centers, times = [sites[0]], [0]
    for i, s in enumerate(sites):
        if max(abs(a - b) for a, b in zip(s, centers[-1])) >= K:
            centers.append(s)
            times.append(i)
    C = np.asarray(centers)
    # every path site and its *-neighbours must fall inside some cube
    contained = all(
        bool(np.any(np.abs(C - np.asarray(s)).max(axis=1) <= K - 1)) for s in sites
    )
    return CorridorCover(centers, times, K, len(sites) - 1, contained)


# --- boundary bound -------------------------------------------------------------


@dataclass
class BoundaryAudit:
    d: int
    fields: int = 0
    components: int = 0
    skipped_boundary: int = 0
    max_ratio: float = 0.0
    violations: list[dict] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ok"] = self.ok
        out["bound"] = "|dC| <= 2d|C| and dC *-connected"
        return out


def boundary_bound_audit(components: BadComponents | Sequence[BadComponents],
                         audit: BoundaryAudit | None = None) -> BoundaryAudit:
    """Check every interior component; components cut by the window are skipped and counted."""
    batch = [components] if isinstance(components, BadComponents) else list(components)
    if audit is None:
        audit = BoundaryAudit(batch[0].d if batch else 2)
    for bc in batch:
        audit.fields += 1
        for comp in bc.components:
            if comp.touches_boundary:
                audit.skipped_boundary += 1
                continue
            audit.components += 1
            limit = 2 * bc.d * comp.size
            audit.max_ratio = max(audit.max_ratio, len(comp.boundary) / comp.size)
            problems = []
            if len(comp.boundary) > limit:
                problems.append("size")
            if not is_star_connected(comp.boundary):
                problems.append("star-connectivity")
            if set(comp.boundary) & set(comp.sites):
                problems.append("overlap")
            if problems:
                audit.violations.append(dict(field=audit.fields, sites=comp.sites,
                                             boundary=comp.boundary, problems=problems))
    return audit


def sample_site_fields(n_fields: int, radius: int, p_bad: float, d: int = 2,
                       seed: int = 0) -> list[BadComponents]:
    """Bad components of i.i.d. Bernoulli(p_bad) site fields on [-radius, radius]^d."""
    out = []
    side = 2 * radius + 1
    for k in range(n_fields):
        rng = np.random.default_rng(derive_seed(seed, k, 29))
        good = rng.random((side,) * d) >= p_bad
        out.append(bad_components(good))
    return out
