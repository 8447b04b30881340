"""Command-line front end.

Subcommands: ``curvature``, ``barrier``, ``flow``, ``scenario``.  Exit codes:
0 success, 1 scenario verdict not reproduced, 2 usage error, 3 numerical or
I/O failure.  One summary line goes to stdout; all data goes to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .barriers import (
    StripSpec,
    choose_neckpinch_params,
    strip_bounds,
    verify_strip_positivity,
)
from .curvature import (
    QuadConfig,
    curve_curvature,
    curve_curvature_all,
    half_plane_indicator,
    region_curvature_oracle,
)
from .exceptions import AccuracyError, GeometryError, InfeasibleParamsError
from .flow import FlowConfig, StopRule, run_flow
from .geometry import ClosedCurve, circle_curve, ellipse_curve, rectangle_curve
from .io import TRAJECTORY_COLUMNS, trajectory_rows, write_csv_artifact, write_json_artifact
from .scenarios import ScenarioReport, scenario_neckpinch, scenario_shrinking_circle

USAGE_ERROR = 2
NUMERICAL_ERROR = 3


@dataclass
class CliConfig:
    command: str
    s: float = 0.5
    shape: str | None = None
    curve_file: str | None = None
    radius: float = 1.0
    semi_axis_a: float = 1.0
    semi_axis_b: float = 0.5
    half_length: float = 50.0
    half_width: float = 0.1
    n_nodes: int = 512
    node_index: int | None = None
    all_nodes: bool = False
    name: str | None = None
    epsilon: float = 0.1
    delta: float = 0.05
    samples: int = 64
    r0: float = 1.0
    max_time: float | None = None
    out: str = "out"
    thread_count: int = 1
    quad: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)

    def resolved(self):
        d = dict(self.__dict__)
        d["version"] = __version__
        return d


_QUAD_KEYS = ("rel_tol", "abs_tol", "near_field_radius_factor", "truncation_radius", "max_subdivisions")
_FLOW_KEYS = ("cfl", "target_spacing", "pinch_factor", "max_steps", "snapshot_stride")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fracflow",
        description="Fractional mean curvature: evaluators, barrier estimates, "
        "front-tracking flow, and packaged experiments.",
    )
    parser.add_argument("--config", help="JSON config file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="JSON config file; flags override its values")
        p.add_argument("--s", type=float, default=None, help="fractional order in (0,1)")
        p.add_argument("--out", default=None, help="output path prefix")
        p.add_argument("--threads", type=int, default=None, help="curvature evaluation threads (default: FMCF_THREADS or 1)")
        for key in _QUAD_KEYS:
            p.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)

    p_curv = sub.add_parser("curvature", help="evaluate fractional mean curvature")
    add_common(p_curv)
    p_curv.add_argument("--shape", choices=["circle", "ellipse", "rectangle", "slab", "half-plane", "file"], default=None)
    p_curv.add_argument("--radius", type=float, default=None)
    p_curv.add_argument("--a", dest="semi_axis_a", type=float, default=None)
    p_curv.add_argument("--b", dest="semi_axis_b", type=float, default=None)
    p_curv.add_argument("--half-length", dest="half_length", type=float, default=None)
    p_curv.add_argument("--half-width", dest="half_width", type=float, default=None)
    p_curv.add_argument("--nodes", dest="n_nodes", type=int, default=None)
    p_curv.add_argument("--curve-file", dest="curve_file", default=None)
    p_curv.add_argument("--node-index", dest="node_index", type=int, default=None)
    p_curv.add_argument("--all-nodes", dest="all_nodes", action="store_true", default=None)

    p_bar = sub.add_parser("barrier", help="barrier estimates (strip positivity, neckpinch parameters)")
    add_common(p_bar)
    p_bar.add_argument("--name", choices=["strip-positivity", "pinch-params"], default=None)
    p_bar.add_argument("--epsilon", type=float, default=None)
    p_bar.add_argument("--delta", type=float, default=None)
    p_bar.add_argument("--samples", type=int, default=None)

    p_flow = sub.add_parser("flow", help="evolve a curve by fractional curvature flow")
    add_common(p_flow)
    p_flow.add_argument("--shape", choices=["circle", "ellipse", "file"], default=None)
    p_flow.add_argument("--radius", type=float, default=None)
    p_flow.add_argument("--a", dest="semi_axis_a", type=float, default=None)
    p_flow.add_argument("--b", dest="semi_axis_b", type=float, default=None)
    p_flow.add_argument("--nodes", dest="n_nodes", type=int, default=None)
    p_flow.add_argument("--curve-file", dest="curve_file", default=None)
    p_flow.add_argument("--max-time", dest="max_time", type=float, default=None)
    for key in _FLOW_KEYS:
        p_flow.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)

    p_sc = sub.add_parser("scenario", help="packaged experiments")
    add_common(p_sc)
    p_sc.add_argument("--name", choices=["shrinking-circle", "neckpinch"], default=None)
    p_sc.add_argument("--r0", type=float, default=None)
    p_sc.add_argument("--nodes", dest="n_nodes", type=int, default=None)
    return parser


def parse_config(argv, config_file=None) -> CliConfig:
    """Resolve the configuration: flags override config-file values override
    defaults; unknown config keys are rejected."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    cfg = CliConfig(command=ns.command)

    file_path = config_file or ns.config
    file_values = {}
    if file_path:
        try:
            file_values = json.loads(Path(file_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file {file_path}: {exc}")
        known = set(cfg.__dict__) | set(_QUAD_KEYS) | set(_FLOW_KEYS) | {"threads"}
        unknown = set(file_values) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")

    def resolve(key, flag_value, bucket=None):
        file_v = file_values.get(key)
        value = flag_value if flag_value is not None else file_v
        if value is None:
            return
        if bucket is not None:
            bucket[key] = value
        else:
            setattr(cfg, key, value)

    for key in (
        "s", "shape", "curve_file", "radius", "semi_axis_a", "semi_axis_b",
        "half_length", "half_width", "n_nodes", "node_index", "all_nodes",
        "name", "epsilon", "delta", "samples", "r0", "max_time", "out",
    ):
        resolve(key, getattr(ns, key, None))
    for key in _QUAD_KEYS:
        resolve(key, getattr(ns, key, None), cfg.quad)
    for key in _FLOW_KEYS:
        resolve(key, getattr(ns, key, None), cfg.flow)

    threads = getattr(ns, "threads", None)
    if threads is None:
        threads = file_values.get("threads")
    if threads is None:
        threads = int(os.environ.get("FMCF_THREADS", "1"))
    cfg.thread_count = int(threads)

    if not (0.0 < cfg.s < 1.0):
        parser.error(f"--s must lie in (0, 1), got {cfg.s}")
    if cfg.thread_count < 1:
        parser.error("thread count must be at least 1")
    if "max_steps" in cfg.flow:
        cfg.flow["max_steps"] = int(cfg.flow["max_steps"])
    if "snapshot_stride" in cfg.flow:
        cfg.flow["snapshot_stride"] = int(cfg.flow["snapshot_stride"])
    if "max_subdivisions" in cfg.quad:
        cfg.quad["max_subdivisions"] = int(cfg.quad["max_subdivisions"])
    return cfg


def _quad_config(cfg: CliConfig) -> QuadConfig:
    return QuadConfig(**cfg.quad)


def _load_curve_file(path) -> ClosedCurve:
    """Plain text, one 'x y' pair per line, closed implicitly."""
    pts = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        x, y = line.split()
        pts.append((float(x), float(y)))
    return ClosedCurve(np.array(pts))


def _curvature_geometry(cfg: CliConfig):
    if cfg.shape == "circle":
        return circle_curve(cfg.radius, cfg.n_nodes), None
    if cfg.shape == "ellipse":
        return ellipse_curve(cfg.semi_axis_a, cfg.semi_axis_b, cfg.n_nodes), None
    if cfg.shape == "rectangle":
        return rectangle_curve(cfg.half_length, cfg.half_width), None
    if cfg.shape == "slab":
        from .geometry import slab_segment_curve

        return slab_segment_curve(cfg.half_width, cfg.half_length, cfg.half_width / 50.0)
    if cfg.shape == "file":
        if not cfg.curve_file:
            raise ValueError("--curve-file is required with --shape file")
        return _load_curve_file(cfg.curve_file), None
    raise ValueError(f"--shape is required (got {cfg.shape!r})")


def _run_curvature(cfg: CliConfig) -> int:
    quad = _quad_config(cfg)
    resolved = cfg.resolved()
    if cfg.shape == "half-plane":
        res = region_curvature_oracle(
            half_plane_indicator(), (0.0, 0.0), (0.0, 1.0), cfg.s, quad
        )
        payload = {
            "shape": "half-plane",
            "value": res.value,
            "error_estimate": res.error_estimate,
            "tail_correction": res.tail_correction,
            "degraded": res.degraded,
        }
        write_json_artifact(f"{cfg.out}.curvature.json", payload, resolved)
        print(f"half-plane H_s = {res.value:.6g} (error estimate {res.error_estimate:.2g})")
        return 0

    curve, default_index = _curvature_geometry(cfg)
    if cfg.all_nodes:
        values = curve_curvature_all(curve, cfg.s, quad, threads=cfg.thread_count)
        rows = [
            (i, float(curve.nodes[i, 0]), float(curve.nodes[i, 1]), float(values[i]))
            for i in range(curve.n_nodes)
        ]
        write_csv_artifact(
            f"{cfg.out}.curvature.csv", ("node_index", "x", "y", "H_s"), rows, resolved
        )
        print(
            f"{cfg.shape}: H_s over {curve.n_nodes} nodes in "
            f"[{values.min():.6g}, {values.max():.6g}]"
        )
        return 0
    index = cfg.node_index if cfg.node_index is not None else (default_index or 0)
    res = curve_curvature(curve, index, cfg.s, quad)
    payload = {
        "shape": cfg.shape,
        "node_index": index,
        "value": res.value,
        "error_estimate": res.error_estimate,
        "near_field_share": res.near_field_share,
        "tail_correction": res.tail_correction,
        "degraded": res.degraded,
    }
    write_json_artifact(f"{cfg.out}.curvature.json", payload, resolved)
    print(f"{cfg.shape} node {index}: H_s = {res.value:.8g} +- {res.error_estimate:.2g}")
    return 0


def _run_barrier(cfg: CliConfig) -> int:
    quad = _quad_config(cfg)
    resolved = cfg.resolved()
    if cfg.name == "strip-positivity":
        spec = StripSpec(cfg.epsilon, cfg.delta)
        report = verify_strip_positivity(spec, cfg.s, n_samples=cfg.samples, cfg=quad)
        bounds = strip_bounds(spec)
        payload = report.to_dict()
        payload["eta"] = bounds.eta
        payload["kappa_geom"] = bounds.kappa_geom
        write_json_artifact(f"{cfg.out}.strip-positivity.json", payload, resolved)
        print(
            f"strip eps={cfg.epsilon} delta={cfg.delta}: min H_s = "
            f"{report.min_value:.6g} at t = {report.argmin_t:.4g}, "
            f"c0 estimate {report.c0_estimate:.6g}"
        )
        return 0
    if cfg.name == "pinch-params":
        params = choose_neckpinch_params(2, cfg.s, quad)
        payload = {
            "kappa_speed": params.kappa_speed,
            "epsilon0": params.epsilon0,
            "delta": params.delta,
            "lobe_radius": params.lobe_radius,
            "L": params.L,
            "c0_estimate": params.c0_estimate,
            "pinch_time_bound": params.pinch_time_bound,
        }
        write_json_artifact(f"{cfg.out}.pinch-params.json", payload, resolved)
        print(
            f"neckpinch params: eps0={params.epsilon0:.4g} delta={params.delta} "
            f"kappa={params.kappa_speed:.4g} < c0={params.c0_estimate:.4g}"
        )
        return 0
    raise ValueError(f"--name is required for barrier (got {cfg.name!r})")


def _min_neck(state, fc: FlowConfig):
    from .flow import min_nonlocal_gap

    neck = None
    for front in state.fronts:
        gap, _ = min_nonlocal_gap(
            front, 2.0 * fc.pinch_factor * fc.target_spacing, 10.0 * fc.target_spacing
        )
        if gap is not None and gap != float("inf"):
            neck = gap if neck is None else min(neck, gap)
    return neck


def _run_flow_cmd(cfg: CliConfig) -> int:
    quad = _quad_config(cfg)
    resolved = cfg.resolved()
    if cfg.shape == "circle":
        curve = circle_curve(cfg.radius, cfg.n_nodes)
    elif cfg.shape == "ellipse":
        curve = ellipse_curve(cfg.semi_axis_a, cfg.semi_axis_b, cfg.n_nodes)
    elif cfg.shape == "file":
        curve = _load_curve_file(cfg.curve_file)
    else:
        raise ValueError(f"--shape is required for flow (got {cfg.shape!r})")
    flow_kwargs = dict(cfg.flow)
    flow_kwargs.setdefault("target_spacing", curve.perimeter / curve.n_nodes)
    flow_kwargs.setdefault("snapshot_stride", 10)
    fc = FlowConfig(quad=quad, threads=cfg.thread_count, **flow_kwargs)
    stop = StopRule(max_time=cfg.max_time, on_all_extinct=True)
    trajectory, events = run_flow([curve], cfg.s, fc, stop)
    curvatures = {
        (si, fi): curve_curvature_all(front, cfg.s, quad, threads=cfg.thread_count)
        for si, state in enumerate(trajectory)
        for fi, front in enumerate(state.fronts)
    }
    write_csv_artifact(
        f"{cfg.out}.trajectory.csv",
        TRAJECTORY_COLUMNS,
        trajectory_rows(trajectory, curvatures),
        resolved,
    )
    summary = {
        "steps": trajectory[-1].step_count,
        "final_time": trajectory[-1].time,
        "snapshots": len(trajectory),
        "events": [
            {"kind": e.kind, "time": e.time, "location": list(e.location), "details": e.details}
            for e in events
        ],
        "per_snapshot": [
            {
                "time": st.time,
                "fronts": len(st.fronts),
                "total_area": float(sum(f.area for f in st.fronts)),
                "min_neck_width": _min_neck(st, fc),
            }
            for st in trajectory
        ],
    }
    write_json_artifact(f"{cfg.out}.flow.json", summary, resolved)
    print(
        f"flow: {trajectory[-1].step_count} steps to t={trajectory[-1].time:.6g}, "
        f"{len(events)} events, {len(trajectory)} snapshots"
    )
    return 0


def _run_scenario(cfg: CliConfig) -> int:
    resolved = cfg.resolved()
    if cfg.name == "shrinking-circle":
        report = scenario_shrinking_circle(cfg.r0, cfg.s, n_nodes=cfg.n_nodes)
    elif cfg.name == "neckpinch":
        report = scenario_neckpinch(cfg.s)
    else:
        raise ValueError(f"--name is required for scenario (got {cfg.name!r})")
    write_json_artifact(f"{cfg.out}.{report.name}.json", report.to_dict(), resolved)
    write_csv_artifact(
        f"{cfg.out}.{report.name}.timeseries.csv",
        ScenarioReport.TIMESERIES_COLUMNS,
        [[row[c] for c in ScenarioReport.TIMESERIES_COLUMNS] for row in report.timeseries],
        resolved,
    )
    print(f"scenario {report.name}: verdict {report.verdict}" + (f" ({'; '.join(report.reasons)})" if report.reasons else ""))
    return 0 if report.verdict == "reproduced" else 1


def execute(cfg: CliConfig) -> int:
    """Dispatch a resolved configuration; returns the process exit code."""
    runners = {
        "curvature": _run_curvature,
        "barrier": _run_barrier,
        "flow": _run_flow_cmd,
        "scenario": _run_scenario,
    }
    try:
        return runners[cfg.command](cfg)
    except (GeometryError, InfeasibleParamsError, AccuracyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except ValueError as exc:  # bad option combinations
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse uses code 2 for usage errors
        return int(exc.code) if exc.code is not None else 0
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
