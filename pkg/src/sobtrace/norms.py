"""Grid Sobolev/Besov norms and the intrinsic trace-norm estimators.

Each estimator computes the right-hand side of one trace characterization:
packing-sum forms (T11, T12, T24, T25, T26), sharp-maximal forms (T14i,
T14ii), measure-weighted forms (T72, T715, T723), and the interior-plus-
boundary decomposition. Results come back as NormReports whose value is
the sum of the named sub-terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import GridField
from .measures import (
    A_p_mu,
    DiscreteMeasure,
    distance_pair_energy,
    local_pair_energy,
    quasidistance_pair_energy,
)
from .oscillation import (
    PackingProblem,
    _thin_candidates,
    modulus_of_smoothness,
    oscillation,
    packing_functional,
    sharp_maximal_field,
    solve_packing,
)
from .sets import ClosedSet
from .util import (
    ConfigError,
    besov_scale_integral,
    check_finite,
    dyadic_ladder,
    power_scale_integral,
)
from .whitney import WhitneyDecomposition, compose_with_projection, whitney_decomposition

__all__ = [
    "SobolevNorms",
    "grid_sobolev_norms",
    "grid_besov_norm",
    "TraceEstimateConfig",
    "NormReport",
    "lambda_packing",
    "trace_estimate",
    "THEOREM_IDS",
]

THEOREM_IDS = (
    "T11", "T12", "T14i", "T14ii", "T24", "T25", "T26",
    "T72", "T715", "T723", "decomposed",
)


class SobolevNorms(NamedTuple):
    lp: float
    seminorm: float
    total: float


def grid_sobolev_norms(F: GridField, p: float, mask=None) -> SobolevNorms:
    """L_p norm, gradient seminorm (max-norm gradient, central differences),
    and their sum. An optional mask restricts the quadrature domain."""
    grads = np.gradient(F.values, F.h)
    if F.dim == 1:
        grads = [grads]
    gmax = np.max(np.abs(np.stack(grads)), axis=0)
    lp = F.cell_lp(p, mask)
    semi = GridField(F.box, F.h, gmax).cell_lp(p, mask)
    return SobolevNorms(lp, semi, lp + semi)


def grid_besov_norm(
    F: GridField, s: float, p: float, q: float, details: bool = False
):
    """L_p part plus the dyadic-scale modulus integral
    (int (omega(t)/t^s)^q dt/t)^(1/q); q = inf takes the scale supremum."""
    if not (0 < s < 1):
        raise ConfigError(f"need 0 < s < 1, got {s}")
    extent = float(np.max(F.box[:, 1] - F.box[:, 0]))
    ts = dyadic_ladder(2 * F.h, extent / 2)
    gs = np.array([modulus_of_smoothness(F, t, p) for t in ts])
    lp = F.cell_lp(p)
    if np.isinf(q):
        tail = float(np.max(gs / ts ** s)) if len(ts) else 0.0
        bracket = None
    else:
        bracket = besov_scale_integral(ts, gs, s, q)
        tail = bracket.value ** (1.0 / q)
    if details:
        return lp + tail, {"lp": lp, "tail": tail, "bracket": bracket, "ts": ts, "gs": gs}
    return lp + tail


# -- configuration -----------------------------------------------------

_ALPHA_RANGES = {
    "T24": lambda cfg: (0.0, 3 / 20, True),
    "T25": lambda cfg: (0.0, 3 / (10 + 10 * cfg.theta), True),
    "T72": lambda cfg: (0.0, 1 / 7, False),
    "T715": lambda cfg: (0.0, 1 / 14, False),
}

_ALPHA_DEFAULTS = {
    "T24": 3 / 20,
    "T25": None,  # depends on theta
    "T72": 1 / 8,
    "T715": 1 / 15,
}


@dataclass
class TraceEstimateConfig:
    """Parameters of one trace-norm estimator; ranges follow the theorem."""

    theorem: str
    p: float
    q: float | None = None
    s: float | None = None
    eps: float | None = None
    theta: float | None = None
    alpha: float | None = None
    gamma: float | None = None
    kernel: str = "product"  # fixed-scale pair-energy kernel for T715
    mode: str = "greedy"
    pair_budget: int = 4000
    seed: int = 0

    def __post_init__(self):
        if self.theorem not in THEOREM_IDS:
            raise ConfigError(f"unknown theorem id {self.theorem!r}")
        if not (0 < self.p < np.inf):
            raise ConfigError("p must be finite and positive")
        needs_eps = self.theorem in (
            "T12", "T14ii", "T25", "T26", "T72", "T715", "T723", "decomposed"
        )
        if needs_eps and (self.eps is None or self.eps <= 0):
            raise ConfigError(f"{self.theorem} needs eps > 0")
        if self.theorem in ("T12", "T25"):
            if self.theta is None:
                self.theta = 2.0  # measured bound for the anchor projection
            if self.theta < 1:
                raise ConfigError("theta must be >= 1")
        if self.theorem == "T12" and self.gamma is None:
            self.gamma = 10 * self.theta + 1
        if self.theorem == "T11" and self.gamma is None:
            self.gamma = 11.0
        if self.theorem == "T26":
            if self.s is None or self.q is None:
                raise ConfigError("T26 needs s and q")
            if not (0 < self.s < 1):
                raise ConfigError("T26 needs 0 < s < 1")
        if self.theorem in _ALPHA_RANGES:
            if self.alpha is None:
                self.alpha = (
                    3 / (10 + 10 * self.theta)
                    if self.theorem == "T25"
                    else _ALPHA_DEFAULTS[self.theorem]
                )
            lo, hi, closed = _ALPHA_RANGES[self.theorem](self)
            ok = lo < self.alpha <= hi if closed else lo < self.alpha < hi
            if not ok:
                bracket = "]" if closed else ")"
                raise ConfigError(
                    f"{self.theorem} needs alpha in ({lo}, {hi}{bracket}, got {self.alpha}"
                )
        if self.theorem == "T723" and self.alpha is None:
            self.alpha = 1 / 15
        if self.kernel not in ("product", "square"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")


@dataclass(frozen=True)
class NormReport:
    """Value plus the named additive sub-terms it is composed of."""

    value: float
    breakdown: dict
    resolution: float
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        total = sum(self.breakdown.values())
        if not np.isclose(self.value, total, rtol=1e-9, atol=1e-12):
            raise ConfigError("report value must equal the sum of its terms")
        if any(v < -1e-12 for v in self.breakdown.values()):
            raise ConfigError("sub-terms must be nonnegative")


def _report(breakdown: dict, h: float, notes=()) -> NormReport:
    value = float(sum(breakdown.values()))
    check_finite(value, "trace estimate")
    return NormReport(value, dict(breakdown), h, tuple(notes))


# -- packing-sum lambda functional (mixed cube sizes) ------------------


def lambda_packing(
    S: ClosedSet,
    f_vals,
    p: float,
    gamma: float,
    max_diam: float | None = None,
    mode: str = "greedy",
    details: bool = False,
):
    """Best disjoint-cube family score sum for the pair-increment form:
    each cube scores osc(f over the gamma-dilated cube cap S)^p times
    diam^(n-p), cubes of all dyadic sizes pooled into one packing.
    """
    f_vals = np.asarray(f_vals, float)
    span = float(np.max(S.points.max(0) - S.points.min(0))) if len(S.points) > 1 else 1.0
    top = span if max_diam is None else min(max_diam, 2 * span)
    taus = dyadic_ladder(max(2 * S.h, top / 512), top)
    centers, radii, scores = [], [], []
    n = S.dim
    for tau in taus:
        idx = _thin_candidates(S.points, tau)
        cand = S.points[idx]
        groups = S.tree.query_ball_point(cand, gamma * tau / 2 + 1e-12, p=np.inf)
        for c, g in zip(cand, groups):
            osc = oscillation(f_vals[np.array(g, int)])
            if osc > 0:
                centers.append(c)
                radii.append(tau / 2)
                # numpy power overflows to inf instead of raising, so huge
                # inputs surface as NumericalFailure downstream
                with np.errstate(over="ignore"):
                    scores.append(np.float64(osc) ** p * tau ** (n - p))
    if not centers:
        value = 0.0
        result = None
    else:
        problem = PackingProblem(
            np.array(centers), np.array(radii), np.array(scores)
        )
        result = solve_packing(problem, mode=mode)
        value = result.value ** (1.0 / p)
    if details:
        return value, {"candidates": len(centers), "result": result, "taus": taus}
    return value


# -- shared sub-terms --------------------------------------------------


def _composition_norm(W: WhitneyDecomposition, f_vals, eps: float, p: float) -> float:
    """L_p norm of f(T(x)) over the eps-neighborhood of the set."""
    FT, dist = compose_with_projection(W, f_vals)
    mask = dist <= eps + 1e-12
    return FT.cell_lp(p, mask)


def _sup_packing_quotient(S, f_vals, p, upper, mode) -> float:
    ts = dyadic_ladder(max(2 * S.h, upper / 512), upper)
    best = 0.0
    for t in ts:
        best = max(best, packing_functional(S, f_vals, t, p, mode=mode) / t)
    return best


def _porous_packing_integral(S, f_vals, p, upper, alpha, mode):
    ts = dyadic_ladder(max(2 * S.h, upper / 512), upper)
    gs = np.array(
        [
            packing_functional(
                S, f_vals, t, p, centers="boundary", alpha=alpha, mode=mode
            )
            for t in ts
        ]
    )
    bracket = power_scale_integral(ts, gs, p)
    return bracket.value ** (1.0 / p), bracket


def _set_diameter(S: ClosedSet) -> float:
    return float(np.max(S.points.max(0) - S.points.min(0)))


# -- estimator dispatch ------------------------------------------------


def trace_estimate(
    S: ClosedSet,
    f_vals,
    cfg: TraceEstimateConfig,
    mu: DiscreteMeasure | None = None,
    sigma: DiscreteMeasure | None = None,
    W: WhitneyDecomposition | None = None,
) -> NormReport:
    """Evaluate the intrinsic trace-norm surrogate chosen by the config."""
    f_vals = np.asarray(f_vals, float)
    if len(f_vals) != len(S.points):
        raise ConfigError("one value per set sample required")
    needs_T = cfg.theorem in ("T12", "T14ii", "T25", "T26")
    if needs_T and W is None:
        W = whitney_decomposition(S)
    needs_mu = cfg.theorem in ("T72", "T715", "T723")
    if needs_mu and mu is None:
        raise ConfigError(f"{cfg.theorem} needs a measure on the set")
    return _DISPATCH[cfg.theorem](S, f_vals, cfg, mu, sigma, W)


def _estimate_t11(S, f, cfg, mu, sigma, W):
    val = lambda_packing(S, f, cfg.p, cfg.gamma, mode=cfg.mode)
    return _report({"packing": val}, S.h, ("mixed-size greedy packing",))


def _estimate_t12(S, f, cfg, mu, sigma, W):
    comp = _composition_norm(W, f, cfg.eps, cfg.p)
    # cubes centered on the set stay inside the neighborhood when their
    # radius is below eps
    val = lambda_packing(S, f, cfg.p, cfg.gamma, max_diam=2 * cfg.eps, mode=cfg.mode)
    return _report({"composition": comp, "packing": val}, S.h)


def _sharp_field_norm(S, f, p, eps=None) -> float:
    fld = sharp_maximal_field(S, f)
    if eps is None:
        return fld.cell_lp(p)
    dist = S.dist(fld.nodes()).reshape(fld.values.shape)
    return fld.cell_lp(p, dist <= eps + 1e-12)


def _estimate_t14i(S, f, cfg, mu, sigma, W):
    return _report({"sharp_field": _sharp_field_norm(S, f, cfg.p)}, S.h)


def _estimate_t14ii(S, f, cfg, mu, sigma, W):
    comp = _composition_norm(W, f, cfg.eps, cfg.p)
    sharp = _sharp_field_norm(S, f, cfg.p, cfg.eps)
    return _report({"composition": comp, "sharp_field": sharp}, S.h)


def _estimate_t24(S, f, cfg, mu, sigma, W):
    diam = _set_diameter(S)
    sup_term = _sup_packing_quotient(S, f, cfg.p, 2 * diam, cfg.mode)
    integral, bracket = _porous_packing_integral(
        S, f, cfg.p, diam, cfg.alpha, cfg.mode
    )
    notes = (f"integral bracket [{bracket.lower:.4g}, {bracket.upper:.4g}]",)
    return _report(
        {"sup_quotient": sup_term, "porous_integral": integral}, S.h, notes
    )


def _estimate_t25(S, f, cfg, mu, sigma, W):
    comp = _composition_norm(W, f, cfg.eps, cfg.p)
    sup_term = _sup_packing_quotient(S, f, cfg.p, cfg.eps, cfg.mode)
    integral, bracket = _porous_packing_integral(
        S, f, cfg.p, cfg.eps, cfg.alpha, cfg.mode
    )
    notes = (f"integral bracket [{bracket.lower:.4g}, {bracket.upper:.4g}]",)
    return _report(
        {"composition": comp, "sup_quotient": sup_term, "porous_integral": integral},
        S.h,
        notes,
    )


def _estimate_t26(S, f, cfg, mu, sigma, W):
    comp = _composition_norm(W, f, cfg.eps, cfg.p)
    ts = dyadic_ladder(max(2 * S.h, cfg.eps / 512), cfg.eps)
    gs = np.array([packing_functional(S, f, t, cfg.p, mode=cfg.mode) for t in ts])
    bracket = besov_scale_integral(ts, gs, cfg.s, cfg.q)
    tail = bracket.value ** (1.0 / cfg.q)
    return _report({"composition": comp, "scale_integral": tail}, S.h)


def _estimate_t72(S, f, cfg, mu, sigma, W):
    base = mu.lp_norm(f, cfg.p)
    ts = dyadic_ladder(max(2 * S.h, cfg.eps / 512), cfg.eps)
    sup_term = max(
        A_p_mu(S, mu, f, t, cfg.p, q=cfg.p, mode=cfg.mode) / t for t in ts
    )
    gs = np.array(
        [
            A_p_mu(
                S, mu, f, t, cfg.p, q=cfg.p, alpha=cfg.alpha, mode=cfg.mode
            )
            for t in ts
        ]
    )
    bracket = power_scale_integral(ts, gs, cfg.p)
    integral = bracket.value ** (1.0 / cfg.p)
    return _report(
        {"lp_mu": base, "sup_quotient": sup_term, "porous_integral": integral}, S.h
    )


def _estimate_t715(S, f, cfg, mu, sigma, W):
    base = mu.lp_norm(f, cfg.p)
    ts = dyadic_ladder(max(2 * S.h, cfg.eps / 512), cfg.eps)
    sup_term = max(
        local_pair_energy(mu, f, t, cfg.p, kernel=cfg.kernel) ** (1.0 / cfg.p)
        for t in ts
    )
    j2 = quasidistance_pair_energy(
        S, mu, f, cfg.eps, cfg.p,
        alpha=cfg.alpha, pair_budget=cfg.pair_budget, seed=cfg.seed, details=True,
    )
    notes = () if j2["exact"] else (
        f"quasidistance term sampled: {j2['evaluated_pairs']}/{j2['candidate_pairs']} pairs",
    )
    return _report(
        {
            "lp_mu": base,
            "sup_pair_energy": sup_term,
            "quasidistance_energy": j2["value"] ** (1.0 / cfg.p),
        },
        S.h,
        notes,
    )


def _estimate_t723(S, f, cfg, mu, sigma, W):
    if S.interior_mask().any():
        raise ConfigError("distance pair-energy form needs an empty interior")
    ball = S.ball_condition_estimate()
    if not ball.satisfied:
        raise ConfigError("distance pair-energy form needs the ball condition")
    base = mu.lp_norm(f, cfg.p)
    energy = distance_pair_energy(mu, f, cfg.eps, cfg.p)
    return _report(
        {"lp_mu": base, "distance_energy": energy ** (1.0 / cfg.p)}, S.h
    )


def _interior_field(S: ClosedSet, f_vals) -> tuple:
    """Raster f over the occupancy lattice; returns (field, interior mask)."""
    occ = S.occupancy
    lo = S.bbox[:, 0]
    idx = np.round((S.points - lo) / S.h - 0.5).astype(int)
    vals = np.zeros(occ.shape)
    vals[tuple(idx.T)] = f_vals
    interior = np.zeros(occ.shape, bool)
    interior[tuple(idx[S.interior_mask()].T)] = True
    box = np.stack([lo + S.h / 2, lo + (np.array(occ.shape) - 0.5) * S.h], axis=1)
    return GridField(box, S.h, vals), interior


def _estimate_decomposed(S, f, cfg, mu, sigma, W):
    if sigma is None:
        raise ConfigError("decomposed estimate needs a boundary measure")
    if S.kind != "solid":
        raise ConfigError("decomposed estimate needs a solid set")
    field, interior = _interior_field(S, f)
    interior_norm = grid_sobolev_norms(field, cfg.p, interior).total
    _, parent = S.tree.query(sigma.points, k=1, p=np.inf)
    f_sigma = np.asarray(f, float)[parent]
    base = sigma.lp_norm(f_sigma, cfg.p)
    energy = distance_pair_energy(sigma, f_sigma, cfg.eps, cfg.p)
    return _report(
        {
            "interior_sobolev": interior_norm,
            "lp_sigma": base,
            "boundary_energy": energy ** (1.0 / cfg.p),
        },
        S.h,
    )


_DISPATCH = {
    "T11": _estimate_t11,
    "T12": _estimate_t12,
    "T14i": _estimate_t14i,
    "T14ii": _estimate_t14ii,
    "T24": _estimate_t24,
    "T25": _estimate_t25,
    "T26": _estimate_t26,
    "T72": _estimate_t72,
    "T715": _estimate_t715,
    "T723": _estimate_t723,
    "decomposed": _estimate_decomposed,
}
