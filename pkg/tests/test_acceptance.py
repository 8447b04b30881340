"""Acceptance gate: every quantitative criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them inline;
they also land in the captured output).  Criteria marry the closed forms of
the shrinking ball, slab, and strip barriers with the property suites of the
curvature module.
"""

import math
import time

import numpy as np
import pytest

from fracflow.barriers import (
    BallSpec,
    StripSpec,
    ball_extinction_time,
    ball_radius_at,
    strip_boundary_curve,
    strip_pinch_time,
    verify_strip_positivity,
)
from fracflow.curvature import (
    QuadConfig,
    classical_curvature,
    curve_curvature,
    half_plane_indicator,
    region_curvature_oracle,
    slab_curvature,
    unit_ball_curvature,
)
from fracflow.flow import FlowConfig, StopRule, inclusion_check, run_flow
from fracflow.geometry import circle_curve, ellipse_curve, slab_segment_curve

S_GRID = (0.3, 0.5, 0.7)
R_GRID = (0.5, 1.0, 2.0, 4.0)


def _report(name, ok, detail):
    print(f"acceptance {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_1_ball_scaling_law(oracle_disk):
    t0 = time.perf_counter()
    worst_eval = 0.0
    worst_pin = 0.0
    for s in S_GRID:
        omega = unit_ball_curvature(2, s)
        pin_dev = abs(omega - oracle_disk[s].value) / oracle_disk[s].value
        worst_pin = max(worst_pin, pin_dev)
        for R in R_GRID:
            got = curve_curvature(circle_curve(R, 1024), 0, s).value
            want = omega * R ** (-s)
            worst_eval = max(worst_eval, abs(got - want) / want)
    elapsed = time.perf_counter() - t0 + oracle_disk["elapsed"]
    ok = worst_eval <= 0.01 and worst_pin <= 0.005 and elapsed < 120.0
    _report(
        "1 ball scaling law",
        ok,
        f"evaluator vs omega R^-s worst {100 * worst_eval:.3f}% (<=1%), "
        f"evaluator vs oracle worst {100 * worst_pin:.3f}% (<=0.5%), "
        f"{elapsed:.1f}s (<120s)",
    )


def test_criterion_2_shrinking_circle(shrinking_circle_run):
    report, elapsed = shrinking_circle_run
    p = report.parameters
    t_dev = abs(p["measured_extinction_time"] - p["predicted_extinction_time"]) / p[
        "predicted_extinction_time"
    ]
    ok = (
        report.verdict == "reproduced"
        and t_dev <= 0.03
        and p["worst_radius_deviation"] <= 0.02
        and elapsed < 600.0
    )
    _report(
        "2 shrinking circle",
        ok,
        f"extinction {100 * t_dev:.2f}% off (<=3%), radius trajectory "
        f"{100 * p['worst_radius_deviation']:.2f}% (<=2%), {elapsed:.0f}s (<600s)",
    )


def test_criterion_3_slab_closed_form():
    worst = 0.0
    for a in (0.05, 0.1, 0.2):
        curve, idx = slab_segment_curve(a, max(60.0, 500.0 * a), a / 50.0)
        got = curve_curvature(curve, idx, 0.5).value
        want = slab_curvature(a, 2, 0.5)
        worst = max(worst, abs(got - want) / want)
    ok = worst <= 0.005
    _report(
        "3 slab closed form",
        ok,
        f"evaluator vs 2C(n,s)(2a)^-s/s worst {100 * worst:.4f}% (<=0.5%)",
    )


def test_criterion_4_strip_positivity():
    spec = StripSpec(0.1, 0.05)
    rep = verify_strip_positivity(spec, 0.5, n_samples=64)
    curve, waist = strip_boundary_curve(spec, 40.0, 0.05)
    k_waist = classical_curvature(curve, waist)
    ok = len(rep.samples) >= 64 and rep.c0_estimate > 0.0 and k_waist < 0.0
    _report(
        "4 strip positivity",
        ok,
        f"min H_s - error = {rep.c0_estimate:.4f} > 0 over {len(rep.samples)} samples "
        f"while classical waist curvature = {k_waist:.4f} < 0",
    )


def test_criterion_5_neckpinch(neckpinch_run, neck_params):
    report, elapsed = neckpinch_run
    p = report.parameters
    pinches = [e for e in report.events if e.kind == "pinch"]
    bound = strip_pinch_time(neck_params.epsilon0, neck_params.kappa_speed)
    r_at_pinch = ball_radius_at(
        BallSpec((0.0, 0.0), neck_params.lobe_radius, 2),
        p["measured_pinch_time"],
        0.5,
    )
    ok = (
        report.verdict == "reproduced"
        and len(pinches) == 1
        and p["measured_pinch_time"] <= bound
        and r_at_pinch > 0.0
        and elapsed < 1800.0
    )
    _report(
        "5 neckpinch",
        ok,
        f"one pinch at t={p['measured_pinch_time']:.3e} <= {bound:.3e}, "
        f"ball radius at pinch {r_at_pinch:.3f} > 0, verdict {report.verdict}, "
        f"{elapsed:.0f}s (<1800s)",
    )


def test_criterion_6_invariant_suites():
    failures = []
    s = 0.5
    # antisymmetry
    c = ellipse_curve(1.2, 0.7, 256)
    a = curve_curvature(c, 40, s)
    b = curve_curvature(c.reversed(), 256 - 1 - 40, s)
    if abs(a.value + b.value) > 2.0 * (a.error_estimate + b.error_estimate):
        failures.append("antisymmetry")
    # lambda scaling
    for lam in (0.5, 2.0, 10.0):
        scaled = curve_curvature(c.scaled(lam), 40, s)
        tol = a.error_estimate + scaled.error_estimate * lam**s
        if abs(scaled.value * lam**s - a.value) > tol + 1e-9:
            failures.append(f"scaling lambda={lam}")
    # rigid motion
    moved = curve_curvature(c.rotated(0.73).translated(3.1, -2.2), 40, s)
    if abs(moved.value - a.value) > a.error_estimate + moved.error_estimate + 1e-9:
        failures.append("rigid motion")
    # inclusion monotonicity: unit disk inside slab of half-width 1
    disk_val = curve_curvature(circle_curve(1.0, 1024), 256, s).value
    if not disk_val > slab_curvature(1.0, 2, s):
        failures.append("inclusion monotonicity")
    # half-plane zero
    hp = region_curvature_oracle(half_plane_indicator(), (0.0, 0.0), (0.0, 1.0), s)
    if not abs(hp.value) < QuadConfig().abs_tol:
        failures.append("half-plane zero")
    _report(
        "6 invariant suites",
        not failures,
        "antisymmetry, scaling, rigid motion, monotonicity, half-plane all hold"
        if not failures
        else f"failed: {failures}",
    )


def test_criterion_7_comparison_principle():
    s = 0.5
    h = 2.0 * math.pi / 512
    cfg = FlowConfig(cfl=0.1, target_spacing=h, snapshot_stride=10_000)
    t_inner = ball_extinction_time(BallSpec((0.0, 0.0), 1.0, 2), s)
    cps = list(np.linspace(0.0, 0.98 * t_inner, 20))
    inner, _ = run_flow(
        [circle_curve(1.0, 512)], s, cfg, StopRule(max_time=cps[-1]), checkpoints=cps
    )
    outer, _ = run_flow(
        [circle_curve(2.0, 1024)], s, cfg, StopRule(max_time=cps[-1]), checkpoints=cps
    )

    def at(traj, t):
        for st in traj:
            if abs(st.time - t) <= 1e-9 and st.fronts:
                return st
        return None

    checked = 0
    ok = True
    for t in cps:
        si, so = at(inner, t), at(outer, t)
        if si is None or so is None:
            continue
        if not inclusion_check(si.fronts[0], so.fronts[0], tol=2.0 * h):
            ok = False
            break
        checked += 1
    ok = ok and checked >= 15
    _report(
        "7 comparison principle",
        ok,
        f"inclusion of the inner evolved circle held at {checked} matched "
        f"checkpoints with tol = 2 spacings",
    )
