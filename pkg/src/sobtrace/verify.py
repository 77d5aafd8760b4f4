"""Equivalence experiments: intrinsic trace estimates vs comparison norms.

Each experiment sweeps a function family over one catalog set at several
resolutions, records (intrinsic, comparison) value pairs, and summarizes
ratio spread plus refinement stability.  Reports serialize without the
runtime field so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalSpec, generate_canonical, test_function_family
from .cubes import covering_multiplicity
from .grid import GridField
from .measures import DiscreteMeasure, dset_besov_norm
from .norms import (
    TraceEstimateConfig,
    grid_besov_norm,
    grid_sobolev_norms,
    trace_estimate,
)
from .sets import ClosedSet
from .util import ConfigError, NumericalFailure
from .whitney import WhitneyDecomposition, extend_grid, whitney_decomposition

NEAR_ZERO = 1e-10

# theorems whose comparison norm is the homogeneous gradient seminorm
_HOMOGENEOUS = {"T11", "T14i"}
_EPS_REQUIRED = {"T12", "T14ii", "T25", "T26", "T72", "T715", "T723", "decomposed"}
_NEEDS_W = {"T12", "T14ii", "T25", "T26"}

_DIM2_SETS = {"segment-1d-in-2d", "example-726", "solid-disk", "solid-square"}


def default_h_levels(set_name: str) -> list[float]:
    if set_name in _DIM2_SETS:
        return [1 / 64, 1 / 128, 1 / 256]
    return [1 / 256, 1 / 1024]


@dataclass
class EquivalenceReport:
    theorem: str
    set_name: str
    family: str
    comparison: str
    h_levels: list
    entries: list
    ratio_stats: dict
    refinement_deltas: dict
    skipped_near_zero: int
    runtime: float
    report_version: int = 1

    def validate(self) -> bool:
        """Stored summaries must reproduce exactly from the stored pairs."""
        stats, deltas = _summarize(self.entries, self.h_levels)
        return stats == self.ratio_stats and deltas == self.refinement_deltas

    def ratios(self, h) -> dict:
        return {
            e["name"]: e["intrinsic"] / e["comparison"]
            for e in self.entries
            if e["h"] == h
        }

    def divergence_flags(self, threshold: float = 0.08) -> dict:
        """Per function and per side: does the value grow like a power of 1/h?

        The flag is the log-log slope against 1/h exceeding the threshold;
        needs at least two resolutions.
        """
        out = {}
        for name in sorted({e["name"] for e in self.entries}):
            rows = [e for e in self.entries if e["name"] == name]
            flags = {}
            for side in ("intrinsic", "comparison"):
                vals = np.array([r[side] for r in rows])
                hs = np.array([r["h"] for r in rows])
                if len(vals) >= 2 and np.all(vals > NEAR_ZERO):
                    slope = np.polyfit(np.log(1 / hs), np.log(vals), 1)[0]
                    flags[side] = bool(slope > threshold)
                else:
                    flags[side] = False
            out[name] = flags
        return out

    def to_json(self) -> dict:
        return {
            "report_version": self.report_version,
            "theorem": self.theorem,
            "set": self.set_name,
            "family": self.family,
            "comparison": self.comparison,
            "h_levels": list(self.h_levels),
            "entries": self.entries,
            "ratio_stats": self.ratio_stats,
            "refinement_deltas": self.refinement_deltas,
            "skipped_near_zero": self.skipped_near_zero,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, allow_nan=False)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


def _summarize(entries, h_levels):
    stats = {}
    for h in h_levels:
        ratios = [e["intrinsic"] / e["comparison"] for e in entries if e["h"] == h]
        if ratios:
            lo, hi = min(ratios), max(ratios)
            stats[repr(h)] = {
                "min": lo,
                "max": hi,
                "spread": hi / lo,
                "count": len(ratios),
            }
        else:
            stats[repr(h)] = {"min": None, "max": None, "spread": None, "count": 0}
    deltas = {}
    for name in sorted({e["name"] for e in entries}):
        rows = {e["h"]: e["intrinsic"] / e["comparison"]
                for e in entries if e["name"] == name}
        seq = [rows[h] for h in h_levels if h in rows]
        deltas[name] = [abs(b / a - 1.0) for a, b in zip(seq, seq[1:])]
    return stats, deltas


def _make_config(theorem, **kw):
    p = kw.pop("p")
    eps = kw.pop("eps")
    s, q = kw.pop("s"), kw.pop("q")
    if theorem in _EPS_REQUIRED and eps is None:
        eps = 0.25
    if theorem == "T26":
        s = 1 - 1 / p if s is None else s
        q = p if q is None else q
    return TraceEstimateConfig(theorem=theorem, p=p, eps=eps, s=s, q=q, **kw)


def _set_span(S: ClosedSet) -> float:
    if len(S.points) < 2:
        return 1.0
    return float(np.max(S.points.max(0) - S.points.min(0)))


def extension_field(W: WhitneyDecomposition, f_vals, cfg: TraceEstimateConfig) -> GridField:
    """Extend with the parameters the comparison norm calls for: large-delta
    constant far field for homogeneous seminorms, tight delta and zero
    background for inhomogeneous norms."""
    S = W.S
    if cfg.theorem in _HOMOGENEOUS:
        delta = _set_span(S)
        x0 = int(np.lexsort(S.points.T[::-1])[0])
        cbar = float(np.asarray(f_vals, float)[x0])
    else:
        base = cfg.eps if cfg.eps is not None else _set_span(S)
        delta = max(0.001 * base, 2 * S.h)
        cbar = 0.0
    return extend_grid(W, f_vals, delta, cbar)


def _comparison_value(W, S, mu, f, cfg, comparison, d_exponent):
    if comparison == "besov-dset":
        s = cfg.s if cfg.s is not None else 1 - 1 / cfg.p
        return dset_besov_norm(mu, f.values, s=s, p=cfg.p, d=d_exponent)
    F = extension_field(W, f.values, cfg)
    if cfg.theorem in _HOMOGENEOUS:
        return grid_sobolev_norms(F, cfg.p).seminorm
    if cfg.theorem == "T26":
        return grid_besov_norm(F, cfg.s, cfg.p, cfg.q)
    return grid_sobolev_norms(F, cfg.p).total


def _known_value(f, S, cfg):
    F = GridField.from_function(S.bbox, S.h, f.source)
    if cfg.theorem in _HOMOGENEOUS:
        return grid_sobolev_norms(F, cfg.p).seminorm
    if cfg.theorem == "T26":
        return grid_besov_norm(F, cfg.s, cfg.p, cfg.q)
    return grid_sobolev_norms(F, cfg.p).total


def boundary_measure(S: ClosedSet) -> DiscreteMeasure:
    b = S.boundary()
    w = np.full(len(b.points), S.h ** max(S.dim - 1, 0))
    return DiscreteMeasure(b.points, w, name="boundary-cells")


def verify_equivalence(
    theorem: str,
    set_name: str,
    family: str,
    h_levels=None,
    *,
    p: float = 3.0,
    q: float | None = None,
    s: float | None = None,
    eps: float | None = None,
    alpha: float | None = None,
    theta: float | None = None,
    comparison: str = "extension",
    d_exponent: float = 1.0,
    mode: str = "greedy",
    kernel: str = "product",
    pair_budget: int = 4000,
    seed: int = 0,
) -> EquivalenceReport:
    """Sweep the family over h-levels; pair intrinsic estimates with the
    comparison norm (Whitney extension by default, direct d-set Besov when
    comparison="besov-dset").  Functions where both sides are near zero are
    skipped and counted."""
    if comparison not in ("extension", "besov-dset"):
        raise ConfigError(f"unknown comparison mode {comparison!r}")
    t0 = time.perf_counter()
    h_levels = sorted(h_levels or default_h_levels(set_name), reverse=True)
    entries = []
    skipped = 0
    for h in h_levels:
        S, mu = generate_canonical(CanonicalSpec(set_name, h))
        cfg = _make_config(
            theorem, p=p, q=q, s=s, eps=eps, alpha=alpha, theta=theta,
            mode=mode, kernel=kernel, pair_budget=pair_budget, seed=seed,
        )
        W = None
        if comparison == "extension" or theorem in _NEEDS_W:
            W = whitney_decomposition(S)
        sigma = boundary_measure(S) if theorem == "decomposed" else None
        for f in test_function_family(family, S):
            intrinsic = trace_estimate(
                S, f.values, cfg, mu=mu, sigma=sigma, W=W
            ).value
            comp = _comparison_value(W, S, mu, f, cfg, comparison, d_exponent)
            small_i, small_c = intrinsic < NEAR_ZERO, comp < NEAR_ZERO
            if small_i and small_c:
                skipped += 1
                continue
            if small_i or small_c:
                raise NumericalFailure(
                    f"one-sided vanishing for {f.name}: "
                    f"intrinsic={intrinsic:g} comparison={comp:g}"
                )
            entry = {"h": h, "name": f.name, "intrinsic": intrinsic,
                     "comparison": comp}
            if comparison == "extension" and f.source is not None:
                entry["known"] = _known_value(f, S, cfg)
            entries.append(entry)
    stats, deltas = _summarize(entries, h_levels)
    return EquivalenceReport(
        theorem=theorem,
        set_name=set_name,
        family=family,
        comparison=comparison,
        h_levels=h_levels,
        entries=entries,
        ratio_stats=stats,
        refinement_deltas=deltas,
        skipped_near_zero=skipped,
        runtime=time.perf_counter() - t0,
    )


# -- decomposition contract report -------------------------------------


def whitney_contract_report(
    S: ClosedSet, W: WhitneyDecomposition | None = None,
    n_probe: int = 2000, seed: int = 0,
) -> dict:
    """Distance contract, grown-cover multiplicity, and collar coverage."""
    if W is None:
        W = whitney_decomposition(S)
    check = W.contract_check()
    slack = 2 * S.h
    grown_mult = covering_multiplicity([c.grown() for c in W.cubes()])
    rng = np.random.default_rng(seed)
    box = S.bbox
    probes = rng.uniform(box[:, 0], box[:, 1], size=(4 * n_probe, S.dim))
    dist = S.dist(probes)
    probes = probes[dist > slack][:n_probe]
    misses = sum(1 for x in probes if W.locate(x) < 0)
    report = {
        "n_cubes": len(W),
        "n_dropped": W.n_dropped,
        "lower_slack": check["lower_slack"],
        "upper_slack": check["upper_slack"],
        "contract_pass": bool(
            check["lower_slack"] <= slack + 1e-12
            and check["upper_slack"] <= slack + 1e-12
        ),
        "grown_multiplicity": grown_mult,
        "multiplicity_pass": bool(grown_mult <= 4 ** S.dim),
        "coverage_checked": int(len(probes)),
        "coverage_misses": int(misses),
        "coverage_pass": bool(misses == 0),
    }
    report["pass"] = bool(
        report["contract_pass"]
        and report["multiplicity_pass"]
        and report["coverage_pass"]
    )
    return report
