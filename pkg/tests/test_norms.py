"""Grid norms, estimator configs, and the trace-norm dispatch."""

import numpy as np
import pytest

from sobtrace.grid import GridField
from sobtrace.measures import (
    arc_length_measure,
    cell_area_measure,
    counting_measure,
    dset_besov_norm,
)
from sobtrace.norms import (
    NormReport,
    TraceEstimateConfig,
    grid_besov_norm,
    grid_sobolev_norms,
    lambda_packing,
    trace_estimate,
)
from sobtrace.sets import solid_set, thin_set
from sobtrace.util import ConfigError


def segment2d(m=33):
    pts = np.hstack([np.linspace(0, 1, m)[:, None], np.zeros((m, 1))])
    S = thin_set(pts, h=1 / (m - 1), name="segment")
    mu = arc_length_measure(pts, h=1 / (m - 1))
    return S, mu, pts[:, 0]


def square(m=16):
    occ = np.ones((m, m), bool)
    S = solid_set(occ, h=1 / m, origin=np.zeros(2), name="square")
    return S


class TestGridSobolev:
    def test_zero(self):
        F = GridField.from_function(
            np.array([[0.0, 1.0]]), 1 / 16, lambda x: np.zeros(x.shape[:-1])
        )
        assert grid_sobolev_norms(F, 2) == (0.0, 0.0, 0.0)

    def test_linear_1d_closed_form(self):
        F = GridField.from_function(np.array([[0.0, 1.0]]), 1 / 128, lambda x: x[..., 0])
        lp, semi, total = grid_sobolev_norms(F, 2)
        assert lp == pytest.approx(1 / np.sqrt(3), abs=0.02)
        assert semi == pytest.approx(1.0, abs=0.02)
        assert total == lp + semi

    def test_plane_max_norm_gradient(self):
        F = GridField.from_function(
            np.array([[0.0, 1.0], [0.0, 1.0]]), 1 / 32, lambda x: x[..., 0] + 2 * x[..., 1]
        )
        semi = grid_sobolev_norms(F, 3).seminorm
        assert semi == pytest.approx(2.0, rel=0.05)

    def test_mask_restricts_domain(self):
        F = GridField.from_function(np.array([[0.0, 1.0]]), 1 / 32, lambda x: x[..., 0])
        mask = F.nodes()[:, 0] <= 0.5
        assert grid_sobolev_norms(F, 2, mask).lp < grid_sobolev_norms(F, 2).lp


class TestGridBesov:
    def test_constant_keeps_lp_only(self):
        F = GridField.from_function(
            np.array([[0.0, 1.0]]), 1 / 32, lambda x: np.full(x.shape[:-1], 2.0)
        )
        assert grid_besov_norm(F, 0.5, 3, 3) == pytest.approx(F.cell_lp(3))

    def test_s_range(self):
        F = GridField.from_function(np.array([[0.0, 1.0]]), 1 / 32, lambda x: x[..., 0])
        with pytest.raises(ConfigError):
            grid_besov_norm(F, 1.5, 3, 3)

    def test_step_function_grows_under_refinement(self):
        # rough data above the smoothness line: the bracket inflates as the
        # grid resolves the jump, while a smooth field stays put
        def step(x):
            return (x[..., 0] > 0.5).astype(float)

        def smooth(x):
            return np.sin(2 * x[..., 0])

        box = np.array([[0.0, 1.0]])
        vals = {}
        for fn, name in ((step, "step"), (smooth, "smooth")):
            coarse = grid_besov_norm(GridField.from_function(box, 1 / 64, fn), 0.6, 2, 2)
            fine = grid_besov_norm(GridField.from_function(box, 1 / 256, fn), 0.6, 2, 2)
            vals[name] = fine / coarse
        assert vals["step"] > 1.1
        assert abs(vals["smooth"] - 1) < 0.1


class TestConfig:
    def test_unknown_theorem(self):
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T99", p=3)

    def test_alpha_ranges(self):
        assert TraceEstimateConfig(theorem="T24", p=3).alpha == pytest.approx(3 / 20)
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T24", p=3, alpha=0.16)
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T72", p=3, eps=0.5, alpha=1 / 7)
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T715", p=3, eps=0.5, alpha=0.08)

    def test_t25_alpha_depends_on_theta(self):
        cfg = TraceEstimateConfig(theorem="T25", p=3, eps=0.5, theta=2.0)
        assert cfg.alpha == pytest.approx(3 / 30)
        assert cfg.gamma is None  # dilation only enters T11/T12

    def test_t12_eta_default(self):
        cfg = TraceEstimateConfig(theorem="T12", p=3, eps=0.5, theta=3.0)
        assert cfg.gamma == pytest.approx(31.0)

    def test_required_parameters(self):
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T25", p=3)  # eps missing
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T26", p=3, eps=0.5)  # s, q missing
        with pytest.raises(ConfigError):
            TraceEstimateConfig(theorem="T12", p=3, eps=0.5, theta=0.5)


ALL_CONFIGS = [
    ("T11", {}),
    ("T12", {"eps": 0.25}),
    ("T14i", {}),
    ("T14ii", {"eps": 0.25}),
    ("T24", {}),
    ("T25", {"eps": 0.25}),
    ("T26", {"eps": 0.25, "s": 2 / 3, "q": 3.0}),
    ("T72", {"eps": 0.25}),
    ("T715", {"eps": 0.125}),
    ("T723", {"eps": 0.25}),
]


class TestTraceEstimate:
    def test_zero_function_vanishes_everywhere(self):
        S, mu, _ = segment2d()
        zero = np.zeros(len(S.points))
        for tid, kw in ALL_CONFIGS:
            cfg = TraceEstimateConfig(theorem=tid, p=3.0, **kw)
            rep = trace_estimate(S, zero, cfg, mu=mu)
            assert rep.value == 0.0, tid

    def test_absolute_homogeneity(self):
        S, mu, x = segment2d()
        f = np.sin(2 * x)
        c = 3.5
        for tid, kw in ALL_CONFIGS:
            cfg = TraceEstimateConfig(theorem=tid, p=3.0, **kw)
            one = trace_estimate(S, f, cfg, mu=mu).value
            scaled = trace_estimate(S, c * f, cfg, mu=mu).value
            assert scaled == pytest.approx(c * one, rel=1e-9), tid

    def test_monotone_in_eps(self):
        S, mu, x = segment2d()
        f = np.sin(2 * x)
        for tid, kw in [("T25", {}), ("T72", {}), ("T723", {})]:
            small = TraceEstimateConfig(theorem=tid, p=3.0, eps=0.125, **kw)
            large = TraceEstimateConfig(theorem=tid, p=3.0, eps=0.25, **kw)
            v_small = trace_estimate(S, f, small, mu=mu).value
            v_large = trace_estimate(S, f, large, mu=mu).value
            assert v_large >= v_small * (1 - 1e-9), tid

    def test_sharp_field_dominates_packing(self):
        S, mu, x = segment2d()
        worst = 0.0
        for f in (x, np.sin(2 * x), np.abs(x - 0.4)):
            t11 = trace_estimate(S, f, TraceEstimateConfig(theorem="T11", p=3.0)).value
            t14 = trace_estimate(S, f, TraceEstimateConfig(theorem="T14i", p=3.0)).value
            worst = max(worst, t11 / t14)
        assert worst <= 50.0

    def test_t11_linear_scale(self):
        S, _, x = segment2d()
        val = trace_estimate(S, x, TraceEstimateConfig(theorem="T11", p=3.0)).value
        # the dilation gamma = 11 inflates the unit Lipschitz seminorm
        assert 1.0 <= val <= 30.0

    def test_t723_needs_empty_interior(self):
        S = square()
        mu = cell_area_measure(S)
        cfg = TraceEstimateConfig(theorem="T723", p=3.0, eps=0.25)
        with pytest.raises(ConfigError):
            trace_estimate(S, S.points[:, 0], cfg, mu=mu)

    def test_measure_required(self):
        S, _, x = segment2d()
        with pytest.raises(ConfigError):
            trace_estimate(S, x, TraceEstimateConfig(theorem="T72", p=3.0, eps=0.25))

    def test_value_length_mismatch(self):
        S, mu, x = segment2d()
        with pytest.raises(ConfigError):
            trace_estimate(S, x[:-1], TraceEstimateConfig(theorem="T11", p=3.0))

    def test_t723_tracks_direct_besov(self):
        S, mu, x = segment2d(65)
        f = np.abs(x - 0.3) ** 0.8
        cfg = TraceEstimateConfig(theorem="T723", p=3.0, eps=0.5)
        intrinsic = trace_estimate(S, f, cfg, mu=mu).value
        direct = dset_besov_norm(mu, f, s=2 / 3, p=3.0, d=1.0)
        assert 1 / 100 <= intrinsic / direct <= 100

    def test_decomposed_on_square(self):
        S = square()
        f = S.points[:, 0] ** 2
        boundary = S.boundary()
        sigma = counting_measure(boundary, normalized=True)
        cfg = TraceEstimateConfig(theorem="decomposed", p=3.0, eps=0.25)
        rep = trace_estimate(S, f, cfg, sigma=sigma)
        assert set(rep.breakdown) == {"interior_sobolev", "lp_sigma", "boundary_energy"}
        assert rep.value > 0
        with pytest.raises(ConfigError):
            trace_estimate(S, f, cfg)  # sigma missing

    def test_report_invariant(self):
        with pytest.raises(ConfigError):
            NormReport(5.0, {"a": 1.0, "b": 2.0}, 0.1)


class TestLambdaPacking:
    def test_constant_zero(self):
        S, _, _ = segment2d()
        assert lambda_packing(S, np.ones(len(S.points)), 3.0, 11.0) == 0.0

    def test_max_diam_cap(self):
        S, _, x = segment2d()
        _, info = lambda_packing(S, x, 3.0, 11.0, max_diam=0.25, details=True)
        assert info["taus"].max() <= 0.25 + 1e-12

    def test_jump_pair_value(self):
        # two points, unit jump, dilation 11: both half-width cubes see the
        # whole pair and stay disjoint, so the pool keeps both score-2 cubes
        S = thin_set(np.array([[0.0], [1.0]]), h=0.25)
        f = np.array([0.0, 1.0])
        val, info = lambda_packing(S, f, 2.0, 11.0, details=True)
        assert info["result"].value == pytest.approx(4.0, rel=1e-9)
        assert val == pytest.approx(2.0, rel=1e-9)
