import math

import numpy as np
import pytest

from fracflow.barriers import (
    BallSpec,
    NeckpinchParams,
    StripSpec,
    ball_extinction_time,
    ball_radius_at,
    choose_neckpinch_params,
    strip_boundary_curvature,
    strip_boundary_curve,
    strip_bounds,
    strip_classical_curvature,
    strip_pinch_time,
    strip_profile,
    supersolution_margin,
    verify_strip_positivity,
)
from fracflow.curvature import (
    classical_curvature,
    slab_curvature,
    unit_ball_curvature,
)
from fracflow.exceptions import GeometryError, InfeasibleParamsError
from fracflow.flow import inclusion_check
from fracflow.geometry import circle_curve

S_HALF = 0.5


# ---------------------------------------------------------------------------
# profile and geometric bounds
# ---------------------------------------------------------------------------


def test_strip_profile_values():
    spec = StripSpec(0.1, 0.7)
    assert strip_profile(spec, 0.0) == pytest.approx(0.1)
    assert strip_profile(spec, 1e3) == pytest.approx(1.1, abs=1e-5)
    assert strip_profile(spec, 1e3) < 1.1
    flat = StripSpec(0.1, 0.0)
    ts = np.linspace(-5, 5, 11)
    assert np.allclose(strip_profile(flat, ts), 0.1)


def test_strip_spec_validation():
    with pytest.raises(ValueError):
        StripSpec(-0.1, 0.0)
    with pytest.raises(ValueError):
        StripSpec(0.1, -0.5)


def test_strip_bounds_flat():
    b = strip_bounds(StripSpec(0.1, 0.0))
    assert b.eta == 0.0
    assert b.kappa_geom == 0.0


def test_strip_bounds_monotone_in_delta():
    etas = [strip_bounds(StripSpec(0.1, d)).eta for d in (0.01, 0.05, 0.2, 0.8)]
    assert all(a <= b for a, b in zip(etas, etas[1:]))


def test_strip_bounds_small_delta_curvature_peak_at_waist():
    spec = StripSpec(0.1, 0.05)
    b = strip_bounds(spec)
    assert b.kappa_geom == pytest.approx(4.0 * 0.05 / math.pi, rel=1e-6)
    # the 1-d maximizer confirms the waist is the max
    assert abs(strip_classical_curvature(spec, 0.0)) == pytest.approx(b.kappa_geom, rel=1e-9)


# ---------------------------------------------------------------------------
# boundary curvature of the strip
# ---------------------------------------------------------------------------


def test_flat_strip_equals_slab_everywhere():
    spec = StripSpec(0.1, 0.0)
    for t in (0.0, 1.3, 7.7):
        res = strip_boundary_curvature(spec, t, S_HALF)
        assert res.value == pytest.approx(slab_curvature(0.1, 2, S_HALF), rel=1e-8)


def test_strip_curvature_even_in_t():
    spec = StripSpec(0.1, 0.05)
    a = strip_boundary_curvature(spec, 2.5, S_HALF)
    b = strip_boundary_curvature(spec, -2.5, S_HALF)
    assert a.value == pytest.approx(b.value, rel=1e-10)


def test_strip_below_slab_of_waist_width():
    # the strip contains the slab of half-width epsilon and shares the waist
    # point, so its curvature there cannot exceed the slab's
    spec = StripSpec(0.1, 0.05)
    res = strip_boundary_curvature(spec, 0.0, S_HALF)
    assert res.value < slab_curvature(0.1, 2, S_HALF)
    assert res.value > 0.0


def test_strip_needs_positive_epsilon():
    with pytest.raises(GeometryError):
        strip_boundary_curvature(StripSpec(0.0, 0.1), 0.0, S_HALF)


# ---------------------------------------------------------------------------
# positivity verification
# ---------------------------------------------------------------------------


def test_positivity_flat_strip_is_slab_at_every_sample():
    rep = verify_strip_positivity(StripSpec(0.1, 0.0), S_HALF, n_samples=8)
    slab = slab_curvature(0.1, 2, S_HALF)
    for _, value, _ in rep.samples:
        assert value == pytest.approx(slab, rel=1e-8)
    assert rep.min_value == pytest.approx(slab, rel=1e-8)


def test_positivity_with_negative_waist_curvature():
    spec = StripSpec(0.1, 0.05)
    rep = verify_strip_positivity(spec, S_HALF, n_samples=16)
    assert rep.min_value > 0.0
    assert rep.c0_estimate > 0.0
    assert strip_classical_curvature(spec, 0.0) < 0.0
    waist_curve, wi = strip_boundary_curve(spec, 40.0, 0.05)
    k = classical_curvature(waist_curve, wi)
    assert k == pytest.approx(-4.0 * 0.05 / math.pi, rel=1e-3)
    assert k < 0.0


def test_positivity_minimum_decreases_with_epsilon():
    mins = []
    for eps in (0.05, 0.1, 0.2):
        rep = verify_strip_positivity(StripSpec(eps, 0.05), S_HALF, n_samples=12)
        mins.append(rep.min_value)
    assert mins[0] > mins[1] > mins[2]


def test_positivity_report_serializes():
    rep = verify_strip_positivity(StripSpec(0.1, 0.05), S_HALF, n_samples=4)
    d = rep.to_dict()
    assert d["epsilon"] == 0.1
    assert len(d["samples"]) == 4
    assert d["c0_estimate"] <= d["min_value"]


# ---------------------------------------------------------------------------
# shrinking balls
# ---------------------------------------------------------------------------


def test_ball_radius_initial_and_extinction():
    spec = BallSpec((0.0, 0.0), 1.0, 2)
    T = ball_extinction_time(spec, S_HALF)
    omega = unit_ball_curvature(2, S_HALF)
    assert T == pytest.approx(1.0 / (omega * 1.5), rel=1e-12)
    assert ball_radius_at(spec, 0.0, S_HALF) == pytest.approx(1.0)
    assert ball_radius_at(spec, T, S_HALF) == 0.0
    assert ball_radius_at(spec, 2 * T, S_HALF) == 0.0
    with pytest.raises(ValueError):
        ball_radius_at(spec, -0.1, S_HALF)


def test_ball_radius_conservation_identity():
    spec = BallSpec((0.0, 0.0), 1.0, 2)
    omega = unit_ball_curvature(2, S_HALF)
    T = ball_extinction_time(spec, S_HALF)
    for t in np.linspace(0.0, T * 0.999, 7):
        R = ball_radius_at(spec, float(t), S_HALF)
        assert R ** 1.5 + omega * 1.5 * t == pytest.approx(1.0, rel=1e-10)


def test_ball_radius_strictly_decreasing_continuous_at_extinction():
    spec = BallSpec((0.0, 0.0), 0.7, 2)
    T = ball_extinction_time(spec, S_HALF)
    ts = np.linspace(0.0, T, 50)
    rs = [ball_radius_at(spec, float(t), S_HALF) for t in ts]
    assert all(a > b for a, b in zip(rs[:-1], rs[1:]))
    assert ball_radius_at(spec, T * (1 - 1e-9), S_HALF) < 1e-2


def test_extinction_time_homogeneity():
    t1 = ball_extinction_time(BallSpec((0, 0), 1.0, 2), S_HALF)
    t2 = ball_extinction_time(BallSpec((0, 0), 2.0, 2), S_HALF)
    assert t2 == pytest.approx(t1 * 2.0 ** (1.0 + S_HALF), rel=1e-12)


def test_pinch_time_formula():
    assert strip_pinch_time(0.1, 0.05) == pytest.approx(4.0)
    assert strip_pinch_time(0.1, 0.1) == pytest.approx(2.0)
    assert strip_pinch_time(0.2, 0.1) == pytest.approx(strip_pinch_time(0.1, 0.05))
    with pytest.raises(ValueError):
        strip_pinch_time(0.0, 0.1)
    with pytest.raises(ValueError):
        strip_pinch_time(0.1, 0.0)


# ---------------------------------------------------------------------------
# neckpinch parameters
# ---------------------------------------------------------------------------


def test_choose_params_satisfies_all_constraints(neck_params):
    p = neck_params
    assert p.kappa_speed < p.c0_estimate
    t_ball = ball_extinction_time(BallSpec((0, 0), p.lobe_radius, 2), p.s)
    assert p.epsilon0 < 0.25 * p.kappa_speed * t_ball
    reach = strip_profile(StripSpec(p.epsilon0, p.delta), p.L - p.lobe_radius)
    assert p.lobe_radius + 0.05 * p.lobe_radius <= reach


def test_choose_params_deterministic(neck_params):
    again = choose_neckpinch_params(2, 0.5)
    assert again == neck_params


def test_lobe_circles_strictly_inside_strip(neck_params):
    p = neck_params
    spec = StripSpec(p.epsilon0, p.delta)
    for sx in (-1.0, 1.0):
        lobe = circle_curve(p.lobe_radius, 64, center=(sx * p.L, 0.0))
        strip_curve, _ = strip_boundary_curve(spec, 3.0 * p.L, 0.1)
        assert inclusion_check(lobe, strip_curve, tol=0.0)
        margins = strip_profile(spec, lobe.nodes[:, 0]) - np.abs(lobe.nodes[:, 1])
        assert margins.min() > 0.0


def test_invalid_params_report_violations():
    with pytest.raises(InfeasibleParamsError) as exc:
        NeckpinchParams(
            kappa_speed=10.0,
            epsilon0=0.5,
            delta=0.05,
            lobe_radius=0.9,
            L=2.0,
            c0_estimate=6.0,
            s=0.5,
        )
    assert exc.value.violations
    assert any("speed bound" in v for v in exc.value.violations)


def test_supersolution_margin_matches_direct_bound(neck_params):
    p = neck_params
    margin = supersolution_margin(p, p.s)
    rep = verify_strip_positivity(StripSpec(p.epsilon0, p.delta), p.s, n_samples=48)
    assert margin == pytest.approx(rep.c0_estimate - p.kappa_speed, abs=1e-9)
    assert margin > 0.0


def test_strip_curvature_agrees_with_region_oracle(quad_precise):
    # dual route: analytic-sheet boundary integrals vs direct region rings
    import numpy as np

    from fracflow.curvature import QuadConfig, region_curvature_oracle
    from fracflow.barriers import strip_profile_slope

    spec = StripSpec(0.1, 0.05)

    def indicator(points):
        p = np.atleast_2d(points)
        return np.abs(p[:, 1]) < strip_profile(spec, p[:, 0])

    cfg = QuadConfig(rel_tol=1e-6, abs_tol=1e-10, truncation_radius=300.0)
    for t in (0.0, 1.0):
        x = np.array([t, strip_profile(spec, t)])
        fp = strip_profile_slope(spec, t)
        nu = np.array([-fp, 1.0]) / math.hypot(fp, 1.0)
        oracle = region_curvature_oracle(
            indicator, x, nu, S_HALF, cfg, slab_half_width=1.1
        )
        direct = strip_boundary_curvature(spec, t, S_HALF)
        tol = 3.0 * max(oracle.error_estimate, direct.error_estimate)
        assert abs(oracle.value - direct.value) <= tol
