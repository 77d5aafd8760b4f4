"""Whitney decomposition, partition of unity, projection and extension.

The decomposition contract (diam <= dist <= 4 diam), interior disjointness
and coverage outside a 2h collar are asserted directly on small hand-built
sets where the structure is fully checkable.
"""

import itertools

import numpy as np
import pytest
from scipy.spatial import cKDTree

from sobtrace.cubes import covering_multiplicity
from sobtrace.sets import solid_set, thin_set
from sobtrace.whitney import (
    collar_profile,
    extend_grid,
    extend_points,
    projection_data,
    whitney_decomposition,
)


@pytest.fixture(scope="module")
def two_points():
    S = thin_set(np.array([[0.0], [1.0]]), h=1 / 64)
    return S, whitney_decomposition(S)


@pytest.fixture(scope="module")
def segment2d():
    xs = np.linspace(0.0, 1.0, 33)
    S = thin_set(np.stack([xs, np.zeros_like(xs)], axis=1), h=1 / 32)
    return S, whitney_decomposition(S)


@pytest.fixture(scope="module")
def solid_square():
    S = solid_set(np.ones((16, 16), bool), h=1 / 16, origin=(0.0, 0.0))
    return S, whitney_decomposition(S)


def brute_containing(W, x):
    inside = np.all(np.abs(x - W.centers) <= W.radii[:, None] + 1e-12, axis=1)
    return np.nonzero(inside)[0]


@pytest.mark.parametrize("fix", ["two_points", "segment2d", "solid_square"])
def test_distance_contract(fix, request):
    S, W = request.getfixturevalue(fix)
    check = W.contract_check()
    assert check["lower_slack"] <= 1e-9
    assert check["upper_slack"] <= 1e-9
    assert check["min_dist_over_diam"] >= 1.0 - 1e-12
    assert check["max_dist_over_diam"] <= 4.0 + 1e-12


@pytest.mark.parametrize("fix", ["two_points", "segment2d", "solid_square"])
def test_interiors_disjoint_and_coverage(fix, request):
    S, W = request.getfixturevalue(fix)
    lo = W.S.bbox[:, 0]
    hi = W.S.bbox[:, 1]
    axes = [np.arange(lo[a], hi[a] + S.h / 2, S.h) for a in range(S.dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    dist = S.dist(nodes)
    far = dist > 2 * S.h
    # off the nodes that sit exactly on cube faces, coverage is single
    for x in nodes[far][:: max(1, len(nodes[far]) // 400)]:
        hits = brute_containing(W, x)
        assert 1 <= len(hits) <= 2 ** S.dim


@pytest.mark.parametrize("fix", ["two_points", "segment2d"])
def test_neighbor_diameters_comparable(fix, request):
    # grown cubes that touch have diameters within a factor 4
    S, W = request.getfixturevalue(fix)
    levels = np.unique(W.levels)
    trees = {
        int(l): cKDTree(W.centers[W.levels == l]) for l in levels
    }
    radii = {int(l): W.radii[W.levels == l][0] for l in levels}
    for l1 in levels:
        for l2 in levels:
            if l2 < l1 or l2 - l1 > 6:
                continue
            r = 9 / 8 * (radii[int(l1)] + radii[int(l2)])
            pairs = trees[int(l1)].query_ball_tree(trees[int(l2)], r, p=np.inf)
            if any(len(p) for p in pairs) and l1 != l2:
                assert l2 - l1 <= 2, "touching grown cubes differ by more than 4x"


def test_grown_multiplicity_small(segment2d):
    S, W = segment2d
    assert covering_multiplicity([c.grown() for c in W.cubes()]) <= 4 ** S.dim


def test_anchor_is_nearest_sample(two_points):
    S, W = two_points
    for k in range(len(W)):
        d_anchor = np.max(np.abs(W.anchors[k] - W.centers[k]))
        assert d_anchor <= S.nearest_distance(W.centers[k])[0] + 1e-12


def test_filter_by_diameter(two_points):
    S, W = two_points
    idx = W.filter(0.1)
    assert np.all(W.diams[idx] <= 0.1 + 1e-12)
    assert len(idx) < len(W)


def test_locate_matches_brute_force(segment2d):
    S, W = segment2d
    rng = np.random.default_rng(7)
    pts = rng.uniform(S.bbox[:, 0], S.bbox[:, 1], size=(200, S.dim))
    for x in pts:
        k = W.locate(x)
        hits = brute_containing(W, x)
        if len(hits) == 0:
            assert k == -1
        else:
            assert k in hits


def test_collar_profile_support_exact():
    assert collar_profile(np.array([0.0, 1.0, -1.0])).tolist() == [1.0, 1.0, 1.0]
    assert collar_profile(np.array([9 / 8, -9 / 8, 2.0])).tolist() == [0.0, 0.0, 0.0]
    mid = collar_profile(np.array([1.0625]))[0]
    assert 0 < mid < 1


def test_pou_sums_to_one_off_set(segment2d):
    S, W = segment2d
    rng = np.random.default_rng(11)
    pts = rng.uniform(S.bbox[:, 0], S.bbox[:, 1], size=(500, S.dim))
    pts = pts[S.dist(pts) > 2 * S.h]
    for x in pts:
        cand, phi = W.pou_at(x)
        assert len(cand) > 0
        assert abs(phi.sum() - 1.0) <= 1e-12
        assert np.all(phi >= 0)


def test_pou_support_inside_grown_cube(segment2d):
    S, W = segment2d
    k = int(np.argmax(W.radii))
    c, r = W.centers[k], W.radii[k]
    outside = c + (9 / 8) * r * np.array([1.0, 0.0]) + np.array([1e-9, 0.0])
    cand, phi = W.pou_at(outside)
    if k in cand:
        assert phi[list(cand).index(k)] == 0.0


def test_pou_gradient_scale(segment2d):
    S, W = segment2d
    rng = np.random.default_rng(13)
    pts = rng.uniform(S.bbox[:, 0] + 0.1, S.bbox[:, 1] - 0.1, size=(120, S.dim))
    pts = pts[S.dist(pts) > 2 * S.h][:60]
    step = S.h / 20

    def phi_value(x, k):
        cand, phi = W.pou_at(x)
        where = np.nonzero(cand == k)[0]
        return float(phi[where[0]]) if len(where) else 0.0

    worst = 0.0
    for x in pts:
        cand, _ = W.pou_at(x)
        for k in cand:
            for a in range(S.dim):
                e = np.zeros(S.dim)
                e[a] = step
                g = (phi_value(x + e, k) - phi_value(x - e, k)) / (2 * step)
                worst = max(worst, abs(g) * W.diams[k])
    assert worst <= 40 * S.dim


def test_extension_reproduces_samples_exactly(segment2d):
    S, W = segment2d
    rng = np.random.default_rng(5)
    f = rng.normal(size=len(S.points))
    out = extend_points(W, f, S.points, delta=S.extent, cbar=float(f[0]))
    assert np.array_equal(out, f)


def test_extension_of_constant_is_constant(two_points):
    S, W = two_points
    f = np.full(len(S.points), 3.25)
    field = extend_grid(W, f, delta=S.extent, cbar=3.25)
    assert np.max(np.abs(field.values - 3.25)) <= 1e-12


def test_extension_linear_in_data(segment2d):
    S, W = segment2d
    rng = np.random.default_rng(17)
    f = rng.normal(size=len(S.points))
    g = rng.normal(size=len(S.points))
    a, b = 0.7, -1.3
    pts = rng.uniform(S.bbox[:, 0], S.bbox[:, 1], size=(150, S.dim))
    lhs = extend_points(W, a * f + b * g, pts, delta=0.1, cbar=0.0)
    rhs = a * extend_points(W, f, pts, delta=0.1, cbar=0.0) + b * extend_points(
        W, g, pts, delta=0.1, cbar=0.0
    )
    scale = np.max(np.abs(rhs)) + 1.0
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_grid_and_point_extension_agree(two_points):
    S, W = two_points
    rng = np.random.default_rng(23)
    f = rng.normal(size=len(S.points))
    field = extend_grid(W, f, delta=S.extent, cbar=float(f[0]))
    nodes = field.nodes()
    pick = rng.choice(len(nodes), size=60, replace=False)
    direct = extend_points(W, f, nodes[pick], delta=S.extent, cbar=float(f[0]))
    assert np.allclose(field.values.reshape(-1)[pick], direct, atol=1e-12)


def test_projection_identity_on_set_and_bounded_off(segment2d):
    S, W = segment2d
    nodes, target, dist, on_set = projection_data(W)
    moved = np.max(np.abs(S.points[target] - nodes), axis=1)
    # on-set nodes stay within the sampling tolerance
    assert np.all(moved[on_set] <= S.h / 2 + 1e-12)
    off = dist > 0
    theta = np.max(moved[off] / dist[off])
    assert theta <= 12.0
    assert W.theta_estimate() == pytest.approx(theta)
