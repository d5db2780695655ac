"""Experiment drivers shared by the CLI and the acceptance suite.

Each driver returns an ``Outcome``: tables to persist, a JSON-able summary
and the list of failed deterministic audits (empty on success).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .bypass import modify_path
from .chemical import closest_l1, geodesic
from .clusters import label_clusters, spanning_cluster
from .combinatorics import (
    animal_count, boundary_bound_audit, corridor_cover, sample_site_fields, stirling_sweep,
)
from .errors import HypothesisError, NoPathError
from .estimation import (
    estimate_mu, geodesic_closed_fraction, modulus_experiment, shape_hausdorff, stretch_tail,
)
from .field import MONOTONE, TWO_SOURCE, CoupledEdgeField, derive_seed
from .lattice import LatticeWindow, Region, box_center
from .parallel import map_samples
from .renormalization import build_macro_field, calibrate_beta, estimate_bad_probability


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict]


@dataclass
class Outcome:
    tables: list[Table] = dc_field(default_factory=list)
    summary: dict = dc_field(default_factory=dict)
    failures: list[str] = dc_field(default_factory=list)
    svg: dict = dc_field(default_factory=dict)  # file name -> callable(path)
    documents: dict = dc_field(default_factory=dict)  # file name -> JSON-able object


def _beta(params, N, seed, workers):
    if params["beta"] != "auto":
        return float(params["beta"])
    return calibrate_beta(params["p"], N, params["calibration_samples"], d=params.get("d", 2),
                          seed=seed, workers=workers)


# --- classify: bad-box rates ------------------------------------------------------


def run_classify(params, seed, workers) -> Outcome:
    beta = _beta(params, min(params["N_list"]), seed, workers)
    tab = estimate_bad_probability(params["p"], params["N_list"], beta, params["samples"],
                                   d=params["d"], seed=seed, workers=workers)
    cols = ["d", "p", "N", "beta", "samples", "bad_count", "rate", "ci_low", "ci_high"]
    rows = [{c: getattr(r, c) for c in cols} for r in tab.rows]
    return Outcome([Table("rates", cols, rows)], dict(beta=beta, slope=tab.slope))


# --- bypass audit ---------------------------------------------------------------


BYPASS_COLUMNS = ["sample", "seed", "length", "n_closed", "bad_mass", "boundary_mass",
                  "extra_length", "bound_value", "satisfied", "p_open", "segments_ok"]


def bypass_sample(index, d, N, p, q, beta, grid, offset, coupling, seed, detail=False):
    """One bypass trial; returns an audit row or ('censored', reason).

    With ``detail`` the row comes back as (row, field, gamma, result).
    """
    s = derive_seed(seed, index, 31)
    w = LatticeWindow.from_macro(d, N, (grid - 1) // 2 + 1)
    field = CoupledEdgeField(w, s, coupling, q if coupling == TWO_SOURCE else 1.0)
    lab = label_clusters(field, Region.of_window(w), p)
    root = spanning_cluster(lab)
    if root is None:
        return ("censored", "no spanning p-cluster")
    pts = lab.vertices(root)
    shift = (0,) * (d - 1)
    y = closest_l1(box_center((-offset,) + shift, N), pts)
    z = closest_l1(box_center((offset,) + shift, N), pts)
    try:
        gamma = geodesic(field, q, y, z)
        macro = build_macro_field(field, p, N, beta)
        res = modify_path(field, macro, gamma, p, q)
    except (HypothesisError, NoPathError) as exc:
        return ("censored", str(exc))
    row = dict(sample=index, seed=s, length=len(gamma), n_closed=res.n_closed,
               bad_mass=res.bad_mass, boundary_mass=res.boundary_mass,
               extra_length=res.extra_length, bound_value=res.bound_value,
               satisfied=res.satisfied, p_open=res.p_open, segments_ok=res.segments_ok)
    return (row, field, gamma, res) if detail else row


def run_bypass(params, seed, workers, batch: int = 50) -> Outcome:
    beta = _beta(params, params["N"], seed, workers)
    rows, reasons, start = [], {}, 0
    while len(rows) < params["samples"] and start < params["max_attempts"]:
        idx = range(start, min(start + batch, params["max_attempts"]))
        for r in map_samples(bypass_sample, idx, workers, d=params["d"], N=params["N"], p=params["p"],
                             q=params["q"], beta=beta, grid=params["grid"],
                             offset=params["endpoint_offset"], coupling=params["coupling"], seed=seed):
            if isinstance(r, tuple):
                key = r[1].split(":")[0]
                reasons[key] = reasons.get(key, 0) + 1
            elif len(rows) < params["samples"]:
                rows.append(r)
        start = idx.stop
    fails = [f"sample {r['sample']}: {r}" for r in rows if not r["satisfied"]]
    if len(rows) < params["samples"]:
        fails.append(f"only {len(rows)} admissible samples in {start} attempts")
    summary = dict(beta=beta, admissible=len(rows), attempts=start,
                   censored=sum(reasons.values()), censor_reasons=reasons,
                   violations=sum(not r["satisfied"] for r in rows))
    return Outcome([Table("bypass_audit", BYPASS_COLUMNS, rows)], summary, fails)


# --- estimates ---------------------------------------------------------------------


EST_COLUMNS = ["d", "p", "x", "n", "samples", "censored", "mean", "stderr"]


def run_estimate(params, seed, workers) -> Outcome:
    recs = estimate_mu(params["p"], params["x"], params["n_list"], params["samples"],
                       seed=seed, workers=workers)
    return Outcome([Table("estimates", EST_COLUMNS, [r.row() for r in recs])],
                   dict(censored=sum(r.censored for r in recs)))


def run_modulus(params, seed, workers) -> Outcome:
    t = modulus_experiment(params["p_grid"], params["q"], params["directions"], params["n"],
                           params["samples"], seed=seed, workers=workers)
    cols = ["p", "q", "sup_diff", "reference", "ratio"]
    rows = [dict(p=r.p, q=r.q, sup_diff=r.sup_diff, reference=r.reference, ratio=r.ratio) for r in t.rows]
    est = [rec.row() for _, rec in sorted(t.estimates.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
    fails = []
    if t.pathwise_violations:
        fails.append(f"{t.pathwise_violations} samples with D_q > D_p")
    if not t.monotone():
        fails.append("an estimate has mu_p < mu_q for p < q")
    if not t.dominated():
        fails.append("modulus column not dominated by the fitted constant")
    out = Outcome([Table("modulus", cols, rows), Table("estimates", EST_COLUMNS, est)],
                  dict(kappa_hat=t.kappa_hat, ratio_bounded=t.ratio_bounded(),
                       pathwise_violations=t.pathwise_violations,
                       censored={" ".join(map(str, k)): v for k, v in t.censored.items()}),
                  fails)
    if params.get("svg"):
        out.svg["modulus.svg"] = lambda path: _modulus_svg(t, path)
    return out


def _modulus_svg(t, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    gaps = [r.q - r.p for r in t.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(gaps, [r.sup_diff for r in t.rows], "o", label="sup |mu_p - mu_q|")
    g = np.linspace(min(gaps), max(gaps), 100)
    ax.plot(g, t.kappa_hat * g * np.abs(np.log(g)), "-", label="kappa (q-p)|log(q-p)|")
    ax.set_xlabel("q - p")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run_shape(params, seed, workers) -> Outcome:
    r = shape_hausdorff(params["p"], params["q"], params["directions"] or None, params["n"],
                        params["samples"], seed=seed, workers=workers)
    cols = ["p", "q", "hausdorff", "kappa_hat", "mu_min", "bound"]
    row = {c: getattr(r, c) for c in cols}
    fails = [] if r.hausdorff <= r.bound else [f"Hausdorff distance {r.hausdorff} above {r.bound}"]
    return Outcome([Table("shape", cols, [row])], {}, fails)


def run_tails(params, seed, workers) -> Outcome:
    rows = stretch_tail(params["p"], params["l1_list"], params["beta"], params["samples"],
                        d=params["d"], seed=seed, workers=workers)
    cols = ["p", "beta", "l1", "freq", "ci_low", "ci_high"]
    return Outcome([Table("tails", cols, [{c: getattr(r, c) for c in cols} for r in rows])])


def run_coupling(params, seed, workers) -> Outcome:
    r = geodesic_closed_fraction(params["p"], params["q"], params["x"], params["delta"],
                                 params["samples"], seed=seed, workers=workers)
    cols = ["p", "q", "delta", "l1", "samples", "censored", "target", "mean", "stderr",
            "exceed_freq", "exceed_stderr", "chernoff"]
    return Outcome([Table("coupling", cols, [{c: getattr(r, c) for c in cols}])],
                   dict(mean_ok=r.mean_ok, exceed_ok=r.exceed_ok))


# --- combinatorics ----------------------------------------------------------------


def random_walk(rng: np.random.Generator, d: int, steps: int, star: bool = False) -> np.ndarray:
    """Walk from the origin with uniform nearest-neighbour (or *-neighbour) steps."""
    if star:
        moves = rng.integers(-1, 2, size=(steps, d))
        zero = ~moves.any(axis=1)
        moves[zero, 0] = 1
    else:
        axis = rng.integers(0, d, size=steps)
        sign = rng.choice((-1, 1), size=steps)
        moves = np.zeros((steps, d), np.int64)
        moves[np.arange(steps), axis] = sign
    return np.vstack([np.zeros((1, d), np.int64), np.cumsum(moves, axis=0)])


def run_combinatorics(params, seed, workers) -> Outcome:
    fails = []
    st = stirling_sweep(params["stirling_r"], params["stirling_N"], params["stirling_points"])
    bad = [c for c in st if not c.ok]
    fails += [f"stirling bound fails at z={c.z}, r={c.r}, N={c.N}" for c in bad]
    animals = {}
    for d, kmax in ((2, params["animal_d2_max"]), (3, params["animal_d3_max"])):
        counts = [animal_count(d, k) for k in range(1, kmax + 1)]
        animals[str(d)] = [dict(k=k, count=c, ceiling=(7**d) ** k) for k, c in enumerate(counts, 1)]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            fails.append(f"animal counts not increasing in d={d}")
    corridors = {}
    for K in params["corridor_K"]:
        rng = np.random.default_rng(derive_seed(seed, K, 37))
        n_bad = 0
        worst = 0.0
        for _ in range(params["corridor_paths"]):
            path = random_walk(rng, 2, params["corridor_length"], star=True)
            cov = corridor_cover(path, K)
            n_bad += not cov.ok
            worst = max(worst, len(cov.centers) / (1 + cov.path_len / K))
        corridors[str(K)] = dict(paths=params["corridor_paths"], violations=n_bad, worst_ratio=worst)
        if n_bad:
            fails.append(f"corridor cover fails on {n_bad} paths for K={K}")
    audit = boundary_bound_audit(sample_site_fields(params["audit_fields"], params["audit_radius"],
                                                    params["audit_p_bad"], seed=seed))
    if not audit.ok:
        fails.append(f"{len(audit.violations)} boundary-bound violations")
    report = dict(
        stirling=dict(nu=math.e / (2 * math.pi), checks=len(st), failures=len(bad),
                      min_margin=min(c.rhs / c.lhs for c in st)),
        animals=animals, corridors=corridors,
        boundary_audit={k: v for k, v in audit.to_dict().items() if k != "violations"}
        | dict(violations=len(audit.violations)),
        ok=not fails,
    )
    return Outcome([], dict(ok=report["ok"]), fails, documents={"combinatorics.json": report})


DRIVERS = {
    "classify": run_classify,
    "bypass": run_bypass,
    "estimate": run_estimate,
    "modulus": run_modulus,
    "shape": run_shape,
    "tails": run_tails,
    "coupling": run_coupling,
    "verify-combinatorics": run_combinatorics,
}
