"""Oscillation-based functionals: packings of cubes scored by local variation.

The central object is the packing functional

    value(t)^p = sup over packings of equal cubes (diam <= t, centers on the
                 set) of  sum |Q| * osc(f over Q)^p,

computed over candidate cubes at trial diameters t, t/2, t/4, t/8 with a
greedy disjoint selection (exact branch-and-bound on small candidate sets).
Variants restrict centers to boundary samples, require the cubes to be
porous, or replace the oscillation score by measure-based local deviations
supplied as a callable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from .cubes import Cube
from .grid import GridField
from .sets import ClosedSet
from .util import ConfigError, chebyshev, lex_order

__all__ = [
    "oscillation",
    "oscillation_in_cube",
    "best_constant_deviation",
    "PackingProblem",
    "PackingResult",
    "solve_packing",
    "packing_functional",
    "packing_functional_details",
    "grid_packing_functional",
    "sharp_maximal",
    "sharp_maximal_field",
    "modulus_of_smoothness",
]


def oscillation(values) -> float:
    """max - min over a value set; empty sets oscillate by 0."""
    values = np.asarray(values, float)
    if values.size == 0:
        return 0.0
    return float(values.max() - values.min())


def oscillation_in_cube(S: ClosedSet, f_vals, cube: Cube) -> float:
    idx = S.tree.query_ball_point(np.array(cube.center), cube.radius + 1e-12, p=np.inf)
    return oscillation(np.asarray(f_vals, float)[idx])


def best_constant_deviation(values, q: float, weights=None, tol: float = 1e-10) -> float:
    """min over constants c of the normalized L_q deviation
    (mean of |v - c|^q)^(1/q); q = inf gives the half-oscillation.

    Closed forms: median for q = 1, mean for q = 2; other q solved by
    bounded scalar minimization (the objective is convex in c).
    """
    values = np.asarray(values, float)
    if values.size == 0:
        return 0.0
    if weights is None:
        weights = np.ones_like(values)
    weights = np.asarray(weights, float)
    total = weights.sum()
    if total <= 0:
        return 0.0
    w = weights / total
    if np.isinf(q):
        return 0.5 * oscillation(values)
    if q == 1:
        order = np.argsort(values)
        cdf = np.cumsum(w[order])
        c = values[order][np.searchsorted(cdf, 0.5)]
    elif q == 2:
        c = float(np.dot(w, values))
    else:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            return 0.0
        res = optimize.minimize_scalar(
            lambda c: float(np.dot(w, np.abs(values - c) ** q)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": tol},
        )
        c = float(res.x)
    return float(np.dot(w, np.abs(values - c) ** q) ** (1.0 / q))


# -- packing solver ----------------------------------------------------


@dataclass
class PackingProblem:
    centers: np.ndarray  # (m, n)
    radii: np.ndarray  # (m,)
    scores: np.ndarray  # (m,)


@dataclass(frozen=True)
class PackingResult:
    value: float
    chosen: np.ndarray


def _conflicts(centers, radii) -> list:
    los = centers - radii[:, None]
    his = centers + radii[:, None]
    m = len(centers)
    masks = [0] * m
    for i in range(m):
        overlap = np.all(np.minimum(his[i], his) > np.maximum(los[i], los), axis=1)
        overlap[i] = False
        mask = 0
        for j in np.nonzero(overlap)[0]:
            mask |= 1 << int(j)
        masks[i] = mask
    return masks


def _greedy_order(problem: PackingProblem) -> np.ndarray:
    keys = tuple(problem.centers.T[::-1]) + (problem.radii, -problem.scores)
    return np.lexsort(keys)


def solve_packing(problem: PackingProblem, mode: str = "greedy") -> PackingResult:
    """Max-total-score subfamily with pairwise disjoint interiors.

    greedy: admit in decreasing score order (ties by lexicographic center).
    exact: branch and bound, limited to 24 candidates.
    """
    m = len(problem.scores)
    if m == 0:
        return PackingResult(0.0, np.zeros(0, int))
    positive = np.nonzero(problem.scores > 0)[0]
    if len(positive) == 0:
        return PackingResult(0.0, np.zeros(0, int))
    sub = PackingProblem(
        problem.centers[positive], problem.radii[positive], problem.scores[positive]
    )
    if mode == "greedy":
        chosen = _solve_greedy(sub)
    elif mode == "exact":
        if len(positive) > 24:
            raise ConfigError(
                f"exact packing limited to 24 candidates, got {len(positive)}"
            )
        chosen = _solve_exact(sub)
    else:
        raise ConfigError(f"unknown packing mode {mode!r}")
    chosen = positive[chosen]
    return PackingResult(float(problem.scores[chosen].sum()), np.sort(chosen))


def _solve_greedy(problem: PackingProblem) -> np.ndarray:
    order = _greedy_order(problem)
    chosen: list = []
    for i in order:
        c, r = problem.centers[i], problem.radii[i]
        ok = True
        for j in chosen:
            # interiors meet iff the center Chebyshev gap is below the
            # radius sum on every axis, i.e. below it in the max norm
            if np.max(np.abs(c - problem.centers[j])) < r + problem.radii[j] - 1e-12:
                ok = False
                break
        if ok:
            chosen.append(int(i))
    return np.array(chosen, int)


def _solve_exact(problem: PackingProblem) -> np.ndarray:
    order = _greedy_order(problem)
    scores = problem.scores[order]
    conflicts = _conflicts(problem.centers[order], problem.radii[order])
    suffix = np.concatenate([np.cumsum(scores[::-1])[::-1], [0.0]])
    m = len(scores)
    best_val = -1.0
    best_set = 0

    def rec(pos: int, taken_mask: int, blocked: int, val: float):
        nonlocal best_val, best_set
        if val + suffix[pos] <= best_val + 1e-15:
            return
        if pos == m:
            if val > best_val:
                best_val, best_set = val, taken_mask
            return
        if not (blocked >> pos) & 1:
            rec(pos + 1, taken_mask | (1 << pos), blocked | conflicts[pos], val + scores[pos])
        rec(pos + 1, taken_mask, blocked, val)

    rec(0, 0, 0, 0.0)
    chosen = [order[i] for i in range(m) if (best_set >> i) & 1]
    return np.array(chosen, int)


# -- packing functionals over sampled sets -----------------------------


def _thin_candidates(points: np.ndarray, tau: float) -> np.ndarray:
    """Deduplicate candidate centers on a tau/8 lattice (lex-smallest per
    cell) so the candidate count stays bounded at coarse scales."""
    cell = tau / 8.0
    keys = np.floor(points / cell + 1e-12).astype(np.int64)
    order = lex_order(points)
    seen = {}
    for i in order:
        k = tuple(keys[i])
        if k not in seen:
            seen[k] = i
    return np.array(sorted(seen.values()), int)


def _default_taus(t: float) -> list:
    return [t, t / 2, t / 4, t / 8]


def packing_functional_details(
    S: ClosedSet,
    f_vals,
    t: float,
    p: float,
    *,
    centers: str = "set",
    alpha: float | None = None,
    strong: bool = False,
    mode: str = "greedy",
    taus=None,
    score_fn=None,
    min_tau: float | None = None,
) -> dict:
    """Packing functional with per-trial-diameter breakdown.

    score_fn(cube, sample_indices) can replace the default volume-scaled
    oscillation score |Q| * osc^p; sample_indices index the center set's
    samples (the boundary samples for boundary-centered packings, which
    also carry the default oscillation so that boundary variants score
    osc over Q cap dS).
    """
    if p <= 0 or np.isinf(p):
        raise ConfigError("packing functional needs finite p > 0")
    f_vals = np.asarray(f_vals, float)
    center_set = S if centers == "set" else S.boundary()
    if center_set is S:
        score_vals = f_vals
    else:
        _, parent = S.tree.query(center_set.points, k=1, p=np.inf)
        score_vals = f_vals[parent]
    taus = _default_taus(t) if taus is None else list(taus)
    if min_tau is not None:
        taus = [tau for tau in taus if tau >= min_tau * (1 - 1e-12)]
    per_tau = []
    best = 0.0
    best_tau = None
    for tau in taus:
        if tau <= 0:
            continue
        cand_idx = _thin_candidates(center_set.points, tau)
        cand = center_set.points[cand_idx]
        radius = tau / 2.0
        if alpha is not None:
            keep = [
                i
                for i, c in enumerate(cand)
                if S.is_porous(Cube(tuple(c), radius), alpha, strong=strong)
            ]
            cand = cand[keep]
        if len(cand) == 0:
            per_tau.append((tau, 0.0, 0))
            continue
        groups = center_set.tree.query_ball_point(cand, radius + 1e-12, p=np.inf)
        if score_fn is None:
            scores = np.array(
                [
                    tau ** S.dim * oscillation(score_vals[np.array(g, int)]) ** p
                    for g in groups
                ]
            )
        else:
            scores = np.array(
                [
                    score_fn(Cube(tuple(c), radius), np.array(g, int))
                    for c, g in zip(cand, groups)
                ]
            )
        result = solve_packing(
            PackingProblem(cand, np.full(len(cand), radius), scores), mode=mode
        )
        per_tau.append((tau, result.value, len(result.chosen)))
        if result.value > best:
            best = result.value
            best_tau = tau
    return {
        "value": best ** (1.0 / p),
        "power_sum": best,
        "best_tau": best_tau,
        "per_tau": per_tau,
    }


def packing_functional(S, f_vals, t, p, **kwargs) -> float:
    return packing_functional_details(S, f_vals, t, p, **kwargs)["value"]


# -- packing functional for grid fields --------------------------------


def _window_extrema(values: np.ndarray, k: int) -> tuple:
    # odd window w centered at the node covers exactly the in-cube nodes:
    # k even -> w = k + 1; k odd -> w = k (corner nodes sit at half cells)
    w = k + 1 if k % 2 == 0 else k
    hi = ndimage.maximum_filter(values, size=w, mode="nearest")
    lo = ndimage.minimum_filter(values, size=w, mode="nearest")
    return hi, lo


def grid_packing_functional(
    F: GridField, t: float, p: float, taus=None, details: bool = False
):
    """Packing functional for a grid field: every node is a candidate center.

    Per trial diameter the oscillation raster comes from running max/min
    filters; the greedy packing walks nodes in score order and blocks a
    surrounding raster patch after each admission.
    """
    if p <= 0 or np.isinf(p):
        raise ConfigError("packing functional needs finite p > 0")
    taus = _default_taus(t) if taus is None else list(taus)
    shape = F.values.shape
    best, best_tau, per_tau = 0.0, None, []
    for tau in taus:
        k = int(round(tau / F.h))
        if k < 1 or 2 * k >= min(shape):
            per_tau.append((tau, 0.0, 0))
            continue
        hi, lo = _window_extrema(F.values, k)
        score = (hi - lo) ** p * tau ** F.dim
        margin = (k + 1) // 2  # cube must fit inside the box
        valid = np.zeros(shape, bool)
        valid[tuple(slice(margin, s - margin) for s in shape)] = True
        score = np.where(valid, score, 0.0)
        flat = score.ravel()
        cand = np.nonzero(flat > 0)[0]
        order = cand[np.lexsort((cand, -flat[cand]))]
        blocked = np.zeros(shape, bool)
        total, count = 0.0, 0
        for pos in order:
            idx = np.unravel_index(pos, shape)
            if blocked[idx]:
                continue
            total += flat[pos]
            count += 1
            sl = tuple(
                slice(max(0, i - k + 1), min(s, i + k)) for i, s in zip(idx, shape)
            )
            blocked[sl] = True
        per_tau.append((tau, total, count))
        if total > best:
            best, best_tau = total, tau
    value = best ** (1.0 / p)
    if details:
        return {"value": value, "best_tau": best_tau, "per_tau": per_tau}
    return value


# -- sharp maximal functions -------------------------------------------


def sharp_maximal(
    S: ClosedSet,
    f_vals,
    x,
    variant: str = "range_ratio",
    p: float | None = None,
    field: GridField | None = None,
    r_levels=None,
) -> float:
    """Pointwise sharp maximal function.

    range_ratio: sup over r of osc(f over Q(x, r) cap S) / r, evaluated
        exactly at the radii where new samples enter the cube.
    deviation_ratio: sup over dyadic r of the normalized L_p deviation of a
        grid field over Q(x, r), divided by r.
    l1_density_ratio: sup over dyadic r of the L_1 deviation mass of f over
        Q(x, r) cap S (cell-weighted) divided by r^(n+1).
    """
    x = np.asarray(x, float)
    f_vals = None if f_vals is None else np.asarray(f_vals, float)
    if variant == "range_ratio":
        d = chebyshev(S.points, x)
        order = np.argsort(d, kind="stable")
        d_sorted = d[order]
        v = f_vals[order]
        run_max = np.maximum.accumulate(v)
        run_min = np.minimum.accumulate(v)
        # at tied radii the whole tie block enters at once
        uniq, last = np.unique(d_sorted[::-1], return_index=True)
        last = len(d_sorted) - 1 - last
        osc = run_max[last] - run_min[last]
        keep = uniq > 0
        if not keep.any():
            return 0.0
        return float(np.max(osc[keep] / uniq[keep]))
    if variant == "deviation_ratio":
        if field is None or p is None:
            raise ConfigError("deviation_ratio needs a grid field and p")
        vals = field.values
        h = field.h
        node = np.round((x - field.box[:, 0]) / h).astype(int)
        best = 0.0
        r = h
        while r <= np.max(field.box[:, 1] - field.box[:, 0]):
            k = int(round(r / h))
            sl = tuple(
                slice(max(0, i - k), min(s, i + k + 1))
                for i, s in zip(node, vals.shape)
            )
            window = vals[sl]
            dev = np.mean(np.abs(window - window.mean()) ** p) ** (1.0 / p)
            best = max(best, dev / r)
            r *= 2
        return best
    if variant == "l1_density_ratio":
        best = 0.0
        r = S.h
        extent = float(np.max(S.bbox[:, 1] - S.bbox[:, 0]))
        while r <= extent:
            idx = S.tree.query_ball_point(x, r + 1e-12, p=np.inf)
            if idx:
                vals = f_vals[np.array(idx, int)]
                mass = np.sum(np.abs(vals - vals.mean())) * S.h ** S.dim
                best = max(best, mass / r ** (S.dim + 1))
            r *= 2
        return best
    raise ConfigError(f"unknown sharp maximal variant {variant!r}")


def sharp_maximal_field(
    S: ClosedSet, f_vals, box=None, h: float | None = None
) -> GridField:
    """range_ratio sharp maximal function on a grid.

    Samples are rasterized to their nearest node (max and min layers), and
    each dyadic radius contributes a windowed oscillation; the radius grid
    resolves the supremum up to a factor two, which the empirical-constant
    comparisons absorb.
    """
    box = np.asarray(S.bbox if box is None else box, float)
    h = S.h if h is None else float(h)
    f_vals = np.asarray(f_vals, float)
    shape = GridField.shape_for(box, h)
    fmax = np.full(shape, -np.inf)
    fmin = np.full(shape, np.inf)
    idx = np.round((S.points - box[:, 0]) / h).astype(int)
    idx = np.clip(idx, 0, np.array(shape) - 1)
    for j, cell in enumerate(map(tuple, idx)):
        if f_vals[j] > fmax[cell]:
            fmax[cell] = f_vals[j]
        if f_vals[j] < fmin[cell]:
            fmin[cell] = f_vals[j]
    out = np.zeros(shape)
    r = h
    extent = float(np.max(box[:, 1] - box[:, 0]))
    while r <= extent:
        k = int(round(r / h))
        w = 2 * k + 1
        hi = ndimage.maximum_filter(fmax, size=w, mode="constant", cval=-np.inf)
        lo = ndimage.minimum_filter(fmin, size=w, mode="constant", cval=np.inf)
        osc = np.where(np.isfinite(hi) & np.isfinite(lo), hi - lo, 0.0)
        out = np.maximum(out, osc / r)
        r *= 2
    return GridField(box, h, out)


# -- modulus of smoothness ---------------------------------------------


def modulus_of_smoothness(F: GridField, t: float, p: float, max_shifts_per_axis: int = 33) -> float:
    """sup over lattice shifts shorter than t of the L_p difference norm.

    Shifts are thinned to a per-axis budget at coarse t (extreme shifts
    kept); opposite shifts cover the same pairs, so only half are walked.
    """
    h = F.h
    k_max = int(np.ceil(t / h)) - 1
    if k_max < 1:
        return 0.0
    stride = max(1, int(np.ceil((2 * k_max + 1) / max_shifts_per_axis)))
    axis_vals = sorted(set(range(-k_max, k_max + 1, stride)) | {-k_max, 0, k_max})
    best = 0.0
    vals = F.values
    shape = vals.shape
    for shift in np.stack(
        np.meshgrid(*[axis_vals] * F.dim, indexing="ij"), axis=-1
    ).reshape(-1, F.dim):
        if not shift.any():
            continue
        first = shift[np.nonzero(shift)[0][0]]
        if first < 0:
            continue  # mirror shift covers the same pairs
        src = tuple(
            slice(max(0, int(s)), min(n, n + int(s))) for s, n in zip(shift, shape)
        )
        dst = tuple(
            slice(max(0, -int(s)), min(n, n - int(s))) for s, n in zip(shift, shape)
        )
        diff = np.abs(vals[src] - vals[dst])
        if np.isinf(p):
            norm = float(diff.max()) if diff.size else 0.0
        else:
            norm = float((np.sum(diff ** p) * h ** F.dim) ** (1.0 / p))
        best = max(best, norm)
    return best
