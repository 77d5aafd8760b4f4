"""Discrete measures on sampled sets and the measure-weighted functionals.

A measure is a finite weighted point cloud; integrals become weighted sums
and cube masses are exact uniform-norm ball queries. On top of that sit the
local L_q oscillations, the measure-scored packing functionals, the
pair-energy double sums (fixed scale, per-pair distance, quasidistance),
the dyadic Besov-trace functional, and the averaged smoothness modulus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .cubes import Cube
from .oscillation import packing_functional_details
from .sets import ClosedSet
from .util import ConfigError, OutOfDomainError, chebyshev

__all__ = [
    "DiscreteMeasure",
    "counting_measure",
    "arc_length_measure",
    "cell_area_measure",
    "MeasureDiagnostics",
    "measure_diagnostics",
    "mu_oscillation",
    "tilde_osc",
    "A_p_mu",
    "local_pair_energy",
    "distance_pair_energy",
    "quasidistance_pair_energy",
    "besov_trace_functional_jonsson",
    "dset_besov_norm",
    "averaged_modulus_w1",
]


@dataclass(eq=False)
class DiscreteMeasure:
    """Finite positive measure given by sample points and weights."""

    points: np.ndarray
    weights: np.ndarray
    name: str = ""
    zero_mass_events: int = 0
    _tree: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float))
        self.weights = np.asarray(self.weights, float)
        if len(self.weights) != len(self.points):
            raise ConfigError("one weight per point required")
        if np.any(self.weights < 0):
            raise ConfigError("weights must be nonnegative")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def cube_mass(self, cube: Cube) -> float:
        idx = self.tree.query_ball_point(np.array(cube.center), cube.radius, p=np.inf)
        return float(self.weights[idx].sum())

    def ball_mass(self, x, r) -> np.ndarray:
        """Masses of closed uniform-norm balls; x may be a batch of centers."""
        x = np.atleast_2d(np.asarray(x, float))
        r = np.broadcast_to(np.asarray(r, float), (len(x),))
        out = np.empty(len(x))
        groups = self.tree.query_ball_point(x, r, p=np.inf)
        for i, g in enumerate(groups):
            out[i] = self.weights[g].sum()
        return out

    def restrict(self, cube: Cube) -> np.ndarray:
        idx = self.tree.query_ball_point(np.array(cube.center), cube.radius, p=np.inf)
        return np.sort(np.array(idx, int))

    def lp_norm(self, f_vals, p: float) -> float:
        f_vals = np.asarray(f_vals, float)
        if np.isinf(p):
            live = self.weights > 0
            return float(np.abs(f_vals[live]).max()) if live.any() else 0.0
        return float(np.sum(self.weights * np.abs(f_vals) ** p) ** (1.0 / p))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "DiscreteMeasure":
        return DiscreteMeasure(
            np.array(obj["points"], float), np.array(obj["weights"], float),
            name=obj.get("name", ""),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))

    @staticmethod
    def load(path) -> "DiscreteMeasure":
        return DiscreteMeasure.from_json(json.loads(Path(path).read_text()))


def counting_measure(S: ClosedSet, normalized: bool = False, name: str = "counting") -> DiscreteMeasure:
    w = np.ones(len(S.points))
    if normalized:
        w /= len(S.points)
    return DiscreteMeasure(S.points.copy(), w, name=name)


def arc_length_measure(points, h: float, name: str = "arc-length") -> DiscreteMeasure:
    """Arc length along a uniformly sampled polyline (trapezoid weights)."""
    points = np.atleast_2d(np.asarray(points, float))
    if len(points) < 2:
        raise ConfigError("a polyline needs at least two samples")
    w = np.full(len(points), h)
    w[0] = w[-1] = h / 2
    return DiscreteMeasure(points.copy(), w, name=name)


def cell_area_measure(S: ClosedSet, name: str = "cell-area") -> DiscreteMeasure:
    if S.kind != "solid":
        raise ConfigError("cell-area measure needs a solid set")
    w = np.full(len(S.points), S.h ** S.dim)
    return DiscreteMeasure(S.points.copy(), w, name=name)


# -- diagnostics -------------------------------------------------------


@dataclass(frozen=True)
class MeasureDiagnostics:
    doubling_constant: float
    dn_constant: float
    unit_mass_low: float
    unit_mass_high: float
    dset_exponent: float
    dset_const_low: float
    dset_const_high: float
    exponent_drift: float
    degenerate_cubes: int

    def dset_like(self, tol: float = 0.2) -> bool:
        return self.exponent_drift <= tol


def measure_diagnostics(
    mu: DiscreteMeasure,
    n_centers: int = 40,
    r_levels=None,
    ks=(2, 4, 8),
    seed: int = 0,
) -> MeasureDiagnostics:
    """Empirical doubling / growth constants and a d-set power-law fit.

    Centers are drawn from the support; radii default to a dyadic ladder in
    [4h-ish, 1] where h is the smallest positive pairwise gap observed.
    """
    rng = np.random.default_rng(seed)
    m = len(mu.points)
    pick = np.sort(rng.choice(m, size=min(n_centers, m), replace=False))
    centers = mu.points[pick]
    d, _ = mu.tree.query(centers, k=2, p=np.inf)
    gap = float(np.max(d[:, 1])) if m > 1 else 0.25
    if r_levels is None:
        # cap below the support extent so boundary clipping does not
        # flatten the power-law fit
        extent = float(np.max(mu.points.max(0) - mu.points.min(0)))
        top = min(1.0, max(extent / 4, 8 * gap))
        r_levels = []
        r = top
        while r >= 4 * gap and len(r_levels) < 10:
            r_levels.append(r)
            r *= 0.5
        if not r_levels:
            r_levels = [top, top / 2]
    r_levels = np.asarray(sorted(r_levels))
    doubling = 0.0
    dn = 0.0
    n = mu.dim
    masses = np.stack([mu.ball_mass(centers, r) for r in r_levels])
    degenerate = int(np.sum(masses <= 0))
    for r, base in zip(r_levels, masses):
        ok = base > 0
        if not ok.any():
            continue
        if 2 * r <= 1.0:
            grown = mu.ball_mass(centers, 2 * r)
            doubling = max(doubling, float(np.max(grown[ok] / base[ok])))
        for k in ks:
            if k * r <= 1.0:
                grown = mu.ball_mass(centers, k * r)
                dn = max(dn, float(np.max(grown[ok] / (k ** n * base[ok]))))
    unit = mu.ball_mass(mu.points[pick], 1.0)
    # a discrete radius-r cube captures samples across width 2r + gap, so
    # the power-law fit runs against the effective radius
    log_r = np.log(r_levels + gap / 2)
    with np.errstate(divide="ignore"):
        log_m = np.where(masses > 0, np.log(np.maximum(masses, 1e-300)), np.nan)
    level_ok = ~np.all(np.isnan(log_m), axis=1)
    if level_ok.sum() >= 2:
        # an upper quantile per level keeps boundary-clipped centers from
        # flattening the global exponent
        medians = np.nanquantile(log_m[level_ok], 0.75, axis=1)
        slope, intercept = np.polyfit(log_r[level_ok], medians, 1)
        resid = (log_m - (slope * log_r[:, None] + intercept))[~np.isnan(log_m)]
        c_lo, c_hi = float(np.exp(resid.min())), float(np.exp(resid.max()))
        # a per-center exponent far from the global one signals growth that
        # follows different power laws in different regions
        drift = 0.0
        for j in range(masses.shape[1]):
            col = log_m[:, j]
            keep = ~np.isnan(col)
            if keep.sum() >= 2 and np.ptp(log_r[keep]) > 0:
                local = np.polyfit(log_r[keep], col[keep], 1)[0]
                drift = max(drift, float(abs(local - slope)))
    else:
        slope, c_lo, c_hi, drift = float("nan"), float("nan"), float("nan"), float("nan")
    return MeasureDiagnostics(
        doubling_constant=doubling,
        dn_constant=dn,
        unit_mass_low=float(unit.min()),
        unit_mass_high=float(unit.max()),
        dset_exponent=float(slope),
        dset_const_low=c_lo,
        dset_const_high=c_hi,
        exponent_drift=drift,
        degenerate_cubes=degenerate,
    )


# -- local oscillations ------------------------------------------------


def mu_oscillation(mu: DiscreteMeasure, f_vals, cube: Cube, q: float) -> float:
    """L_q oscillation of f over a cube against the measure:
    ((1/mass^2) sum_{x,y in Q} w_x w_y |f(x)-f(y)|^q)^(1/q); q = inf is the
    plain oscillation. Mass-zero cubes return 0 (counted on the measure)."""
    idx = mu.restrict(cube)
    w = mu.weights[idx]
    mass = w.sum()
    if mass <= 0:
        mu.zero_mass_events += 1
        return 0.0
    v = np.asarray(f_vals, float)[idx]
    if np.isinf(q):
        live = v[w > 0]
        return float(live.max() - live.min()) if live.size else 0.0
    diff = np.abs(v[:, None] - v[None, :]) ** q
    return float((np.einsum("i,j,ij->", w, w, diff) / mass ** 2) ** (1.0 / q))


def tilde_osc(mu: DiscreteMeasure, f_vals, cube: Cube, center_tol: float) -> float:
    """Mean absolute deviation from the value at the cube center:
    (1/mass) sum w |f - f(center)|, the center value read from the nearest
    support point within center_tol."""
    center = np.array(cube.center)
    d, j = mu.tree.query(center, k=1, p=np.inf)
    if d > center_tol:
        raise OutOfDomainError(
            f"cube center {cube.center} is {d:.3g} from the support, tol {center_tol:.3g}"
        )
    idx = mu.restrict(cube)
    w = mu.weights[idx]
    mass = w.sum()
    if mass <= 0:
        mu.zero_mass_events += 1
        return 0.0
    v = np.asarray(f_vals, float)[idx]
    f_center = float(np.asarray(f_vals, float)[j])
    return float(np.sum(w * np.abs(v - f_center)) / mass)


def A_p_mu(
    S: ClosedSet,
    mu: DiscreteMeasure,
    f_vals,
    t: float,
    p: float,
    *,
    q: float,
    alpha: float | None = None,
    strong: bool = False,
    variant: str = "pair",
    centers: str | None = None,
    mode: str = "greedy",
    taus=None,
    center_tol: float | None = None,
    details: bool = False,
):
    """Measure-scored packing functional.

    variant "pair" scores each cube by |Q| * mu_oscillation^p; variant
    "center" uses the center-deviation score (and forces strong porosity).
    Plain centers-on-the-set packing has alpha None; porous variants center
    cubes on the boundary.
    """
    if variant == "center":
        if alpha is None:
            raise ConfigError("center-deviation variant requires a porosity level")
        strong = True
    if centers is None:
        centers = "set" if alpha is None else "boundary"
    tol = S.h / 2 if center_tol is None else center_tol
    f_vals = np.asarray(f_vals, float)

    def score(cube: Cube, _idx) -> float:
        if variant == "center":
            val = tilde_osc(mu, f_vals, cube, tol)
        else:
            val = mu_oscillation(mu, f_vals, cube, q)
        return cube.diam ** S.dim * val ** p

    out = packing_functional_details(
        S, f_vals, t, p,
        centers=centers, alpha=alpha, strong=strong, mode=mode, taus=taus,
        score_fn=score,
    )
    return out if details else out["value"]


# -- pair energies -----------------------------------------------------

_ROW_CHUNK = 512


def local_pair_energy(
    mu: DiscreteMeasure, f_vals, t: float, p: float, kernel: str = "square"
) -> float:
    """Double sum over pairs closer than t of
    w_x w_y |f(x)-f(y)|^p * t^(n-p) / D with D = mass(Q(x,t))^2 (square) or
    mass(Q(x,t)) * mass(Q(y,t)) (product). Returns the p-th-power sum."""
    if kernel not in ("square", "product"):
        raise ConfigError(f"unknown kernel {kernel!r}")
    f_vals = np.asarray(f_vals, float)
    pts, w = mu.points, mu.weights
    n = mu.dim
    masses = mu.ball_mass(pts, t)
    total = 0.0
    for lo in range(0, len(pts), _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, len(pts))
        groups = mu.tree.query_ball_point(pts[lo:hi], t, p=np.inf)
        for i, g in zip(range(lo, hi), groups):
            g = np.array(g, int)
            d = chebyshev(pts[g], pts[i])
            g = g[d < t]  # strict inequality in the pair domain
            if len(g) == 0 or masses[i] <= 0:
                continue
            num = w[i] * w[g] * np.abs(f_vals[i] - f_vals[g]) ** p
            if kernel == "square":
                den = masses[i] ** 2
                total += float(num.sum()) / den
            else:
                total += float(np.sum(num / (masses[i] * masses[g])))
    return total * t ** (n - p)


def distance_pair_energy(
    mu: DiscreteMeasure, f_vals, eps: float, p: float
) -> float:
    """Double sum over pairs with 0 < ||x-y|| < eps of
    w_x w_y |f(x)-f(y)|^p * ||x-y||^(n-p) / mass(Q(x, ||x-y||))^2,
    the per-pair masses read off sorted-distance prefix sums. Power form."""
    f_vals = np.asarray(f_vals, float)
    pts, w = mu.points, mu.weights
    n = mu.dim
    total = 0.0
    for i in range(len(pts)):
        d = chebyshev(pts, pts[i])
        order = np.argsort(d, kind="stable")
        d_sorted = d[order]
        prefix = np.cumsum(w[order])
        sel = np.nonzero((d > 0) & (d < eps))[0]
        if len(sel) == 0:
            continue
        mass = prefix[np.searchsorted(d_sorted, d[sel], side="right") - 1]
        ok = mass > 0
        sel, mass = sel[ok], mass[ok]
        num = w[i] * w[sel] * np.abs(f_vals[i] - f_vals[sel]) ** p
        total += float(np.sum(num * d[sel] ** (n - p) / mass ** 2))
    return total


def quasidistance_pair_energy(
    S: ClosedSet,
    mu: DiscreteMeasure,
    f_vals,
    eps: float,
    p: float,
    alpha: float = 1 / 15,
    pair_budget: int = 4000,
    seed: int = 0,
    details: bool = False,
):
    """Double sum over pairs with quasidistance below eps of
    w_x w_y |f(x)-f(y)|^p * rho^(n-p) / mass(Q(x, rho))^2. Power form.

    Since rho >= ||x-y||, only pairs closer than eps are candidates. The
    per-pair clearance scans are costly, so above pair_budget the sum is a
    stratified-by-distance estimate (scaled per stratum, exactness noted).
    """
    f_vals = np.asarray(f_vals, float)
    pts, w = mu.points, mu.weights
    n = mu.dim
    pairs = []
    own = mu.tree.query_ball_point(pts, eps, p=np.inf)
    for i, g in enumerate(own):
        for j in g:
            if i < j and chebyshev(pts[i], pts[j]) < eps:
                pairs.append((i, j))
    pairs = np.array(pairs, int).reshape(-1, 2)
    exact = len(pairs) <= pair_budget
    if exact:
        sample = pairs
        factors = np.ones(len(pairs))
    else:
        rng = np.random.default_rng(seed)
        d = chebyshev(pts[pairs[:, 0]], pts[pairs[:, 1]])
        edges = np.quantile(d, np.linspace(0, 1, 11))
        stratum = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, 9)
        sample_idx = []
        factors = []
        for s in range(10):
            members = np.nonzero(stratum == s)[0]
            if len(members) == 0:
                continue
            take = max(1, int(round(pair_budget * len(members) / len(pairs))))
            take = min(take, len(members))
            picked = rng.choice(members, size=take, replace=False)
            sample_idx.append(np.sort(picked))
            factors.append(np.full(take, len(members) / take))
        sample = pairs[np.concatenate(sample_idx)]
        factors = np.concatenate(factors)
    total = 0.0
    used = 0
    for (i, j), scale in zip(sample, factors):
        rho = S.quasidistance(pts[i], pts[j], alpha=alpha)
        if not np.isfinite(rho) or rho >= eps:
            continue
        used += 1
        mass_i = float(mu.ball_mass(pts[i][None], rho)[0])
        mass_j = float(mu.ball_mass(pts[j][None], rho)[0])
        kern = rho ** (n - p)
        contrib = np.abs(f_vals[i] - f_vals[j]) ** p * kern
        # both pair orders, each with its own square-kernel mass
        term = 0.0
        if mass_i > 0:
            term += w[i] * w[j] * contrib / mass_i ** 2
        if mass_j > 0:
            term += w[j] * w[i] * contrib / mass_j ** 2
        total += float(scale) * term
    if details:
        return {
            "value": total,
            "exact": exact,
            "candidate_pairs": int(len(pairs)),
            "evaluated_pairs": int(len(sample)),
            "admitted_pairs": used,
        }
    return total


# -- Besov-scale functionals -------------------------------------------


def besov_trace_functional_jonsson(
    mu: DiscreteMeasure, f_vals, s: float, p: float, q: float, level_floor: float
) -> float:
    """Dyadic-level trace functional: L_p(mu) norm plus the l_q sum over
    levels 2^-nu >= level_floor of 2^(nu(s - n/p)) times the product-kernel
    pair energy at threshold 2^-nu (to the 1/p). Finite p, q only."""
    n = mu.dim
    if not (n / p < s < 1):
        raise ConfigError(f"need n/p < s < 1, got s={s}, p={p}, n={n}")
    if np.isinf(p) or np.isinf(q):
        raise ConfigError("only finite p, q are implemented")
    f_vals = np.asarray(f_vals, float)
    base = mu.lp_norm(f_vals, p)
    acc = 0.0
    nu = 0
    while 2.0 ** -nu >= level_floor * (1 - 1e-12):
        t = 2.0 ** -nu
        # undo the t^(n-p) prefactor; the level weight carries the scaling
        energy = local_pair_energy(mu, f_vals, t, p, kernel="product")
        energy *= t ** (p - n)
        acc += (2 ** (nu * (s - n / p)) * energy ** (1.0 / p)) ** q
        nu += 1
    return base + acc ** (1.0 / q)


def dset_besov_norm(
    mu: DiscreteMeasure, f_vals, s: float, p: float, d: float, max_sep: float = 1.0
) -> float:
    """Direct intrinsic Besov norm on a d-dimensional support:
    L_p(mu) norm plus the classical double sum with kernel
    |f(x)-f(y)|^p / ||x-y||^(d + s p) over pairs closer than max_sep."""
    f_vals = np.asarray(f_vals, float)
    pts, w = mu.points, mu.weights
    total = 0.0
    for i in range(len(pts)):
        dist = chebyshev(pts, pts[i])
        sel = np.nonzero((dist > 0) & (dist < max_sep))[0]
        if len(sel) == 0:
            continue
        num = w[i] * w[sel] * np.abs(f_vals[i] - f_vals[sel]) ** p
        total += float(np.sum(num / dist[sel] ** (d + s * p)))
    return mu.lp_norm(f_vals, p) + total ** (1.0 / p)


def averaged_modulus_w1(mu: DiscreteMeasure, f_vals, t: float, p: float) -> float:
    """Averaged smoothness modulus: t times the p-th root of the
    square-kernel pair energy at scale t."""
    return t * local_pair_energy(mu, f_vals, t, p, kernel="square") ** (1.0 / p)
