"""Fractional mean curvature of planar sets, barrier estimates, and a
front-tracking integrator for the associated geometric flow."""

__version__ = "0.1.0"

from .barriers import (
    BallSpec,
    NeckpinchParams,
    StripBounds,
    StripSpec,
    ball_extinction_time,
    ball_radius_at,
    choose_neckpinch_params,
    strip_bounds,
    strip_boundary_curvature,
    strip_pinch_time,
    strip_profile,
    supersolution_margin,
    verify_strip_positivity,
)
from .curvature import (
    CurvatureResult,
    FracOrder,
    QuadConfig,
    ball_curvature,
    classical_curvature,
    curve_curvature,
    curve_curvature_all,
    region_curvature_oracle,
    slab_curvature,
    unit_ball_curvature,
)
from .exceptions import (
    AccuracyError,
    CornerWarning,
    CurveTooSmallError,
    GeometryError,
    InfeasibleParamsError,
)
from .flow import (
    FlowConfig,
    FlowEvent,
    FlowState,
    StopRule,
    detect_pinch_and_split,
    flow_step,
    inclusion_check,
    resample,
    run_flow,
)
from .geometry import ClosedCurve, circle_curve, ellipse_curve, rectangle_curve
from .scenarios import (
    ScenarioReport,
    build_dumbbell,
    scenario_neckpinch,
    scenario_shrinking_circle,
)

__all__ = [
    "AccuracyError",
    "BallSpec",
    "ClosedCurve",
    "CornerWarning",
    "CurvatureResult",
    "CurveTooSmallError",
    "FlowConfig",
    "FlowEvent",
    "FlowState",
    "FracOrder",
    "GeometryError",
    "InfeasibleParamsError",
    "NeckpinchParams",
    "QuadConfig",
    "ScenarioReport",
    "StopRule",
    "StripBounds",
    "StripSpec",
    "ball_curvature",
    "ball_extinction_time",
    "ball_radius_at",
    "build_dumbbell",
    "choose_neckpinch_params",
    "circle_curve",
    "classical_curvature",
    "curve_curvature",
    "curve_curvature_all",
    "detect_pinch_and_split",
    "ellipse_curve",
    "flow_step",
    "inclusion_check",
    "rectangle_curve",
    "region_curvature_oracle",
    "resample",
    "run_flow",
    "scenario_neckpinch",
    "scenario_shrinking_circle",
    "slab_curvature",
    "strip_boundary_curvature",
    "strip_bounds",
    "strip_pinch_time",
    "strip_profile",
    "supersolution_margin",
    "unit_ball_curvature",
    "verify_strip_positivity",
]
