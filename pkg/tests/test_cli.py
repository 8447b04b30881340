import json
import math
from pathlib import Path

import numpy as np
import pytest

import fracflow.cli as cli
from fracflow.cli import main, parse_config
from fracflow.scenarios import ScenarioReport

from conftest import DISK_PIN


def run(argv):
    return main(list(argv))


# ---------------------------------------------------------------------------
# configuration resolution
# ---------------------------------------------------------------------------


def test_parse_direct_flags():
    cfg = parse_config(["curvature", "--shape", "circle", "--radius", "1", "--s", "0.5"])
    assert cfg.command == "curvature"
    assert cfg.shape == "circle"
    assert cfg.radius == 1.0
    assert cfg.s == 0.5


def test_s_out_of_range_is_usage_error(capsys):
    assert run(["curvature", "--shape", "circle", "--s", "1.5"]) == 2


def test_flag_overrides_config_file(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"s": 0.3, "radius": 2.0}))
    cfg = parse_config(
        ["curvature", "--config", str(f), "--shape", "circle", "--s", "0.5"]
    )
    assert cfg.s == 0.5  # flag wins
    assert cfg.radius == 2.0  # config fills the gap


def test_unknown_config_key_rejected(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"nonsense": 1}))
    assert run(["curvature", "--config", str(f), "--shape", "circle"]) == 2


def test_threads_env_default(monkeypatch):
    monkeypatch.setenv("FMCF_THREADS", "3")
    cfg = parse_config(["curvature", "--shape", "circle"])
    assert cfg.thread_count == 3


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def test_curvature_circle_artifact(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["curvature", "--shape", "circle", "--radius", "1", "--s", "0.5", "--out", "c"]) == 0
    data = json.loads(Path("c.curvature.json").read_text())
    assert data["format_version"] == 1
    assert "config" in data
    assert data["value"] == pytest.approx(DISK_PIN[0.5], rel=0.01)
    assert Path("c.curvature.json.meta.json").exists()


def test_curvature_half_plane_is_zero(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert run(["curvature", "--shape", "half-plane", "--s", "0.5", "--out", "hp"]) == 0
    data = json.loads(Path("hp.curvature.json").read_text())
    assert abs(data["value"]) < 1e-8


def test_curvature_from_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    th = 2 * np.pi * np.arange(64) / 64
    lines = [f"{np.cos(t)} {np.sin(t)}" for t in th]
    Path("poly.txt").write_text("\n".join(lines) + "\n")
    assert run(["curvature", "--shape", "file", "--curve-file", "poly.txt", "--s", "0.5", "--out", "f"]) == 0
    data = json.loads(Path("f.curvature.json").read_text())
    assert data["value"] == pytest.approx(DISK_PIN[0.5], rel=0.05)


def test_barrier_strip_positivity(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = run(
        [
            "barrier", "--name", "strip-positivity", "--epsilon", "0.1",
            "--delta", "0.05", "--s", "0.5", "--samples", "8", "--out", "b",
        ]
    )
    assert code == 0
    data = json.loads(Path("b.strip-positivity.json").read_text())
    assert data["min_value"] > 0.0
    assert data["kappa_geom"] == pytest.approx(4 * 0.05 / math.pi, rel=1e-4)
    assert len(data["samples"]) == 8


def test_flow_command_writes_trajectory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = run(
        [
            "flow", "--shape", "circle", "--radius", "0.3", "--nodes", "64",
            "--s", "0.5", "--max-time", "0.0005", "--snapshot-stride", "5",
            "--out", "fl",
        ]
    )
    assert code == 0
    csv_text = Path("fl.trajectory.csv").read_text()
    header = [l for l in csv_text.splitlines() if not l.startswith("#")][0]
    assert header == "time,front_id,node_index,x,y,H_s"
    summary = json.loads(Path("fl.flow.json").read_text())
    assert summary["final_time"] == pytest.approx(0.0005, rel=1e-6)


def test_identical_invocations_byte_identical(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    args = ["flow", "--shape", "circle", "--radius", "0.3", "--nodes", "64",
            "--s", "0.5", "--max-time", "0.0003", "--out", "r1"]
    assert run(args) == 0
    first_csv = Path("r1.trajectory.csv").read_bytes()
    first_json = Path("r1.flow.json").read_bytes()
    assert run(args) == 0
    assert Path("r1.trajectory.csv").read_bytes() == first_csv
    assert Path("r1.flow.json").read_bytes() == first_json


def test_scenario_exit_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = run(
        ["scenario", "--name", "shrinking-circle", "--r0", "0.5", "--nodes", "256", "--s", "0.5", "--out", "sc"]
    )
    assert code == 0
    data = json.loads(Path("sc.shrinking-circle.json").read_text())
    assert data["verdict"] == "reproduced"
    csv_lines = Path("sc.shrinking-circle.timeseries.csv").read_text().splitlines()
    header = [l for l in csv_lines if not l.startswith("#")][0]
    assert header == ",".join(ScenarioReport.TIMESERIES_COLUMNS)


def test_not_reproduced_maps_to_exit_1(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)

    def fake(*args, **kwargs):
        return ScenarioReport(
            name="shrinking-circle", parameters={}, timeseries=[
                {c: 0.0 for c in ScenarioReport.TIMESERIES_COLUMNS}
            ], events=[], verdict="not_reproduced", reasons=["forced"],
        )

    monkeypatch.setattr(cli, "scenario_shrinking_circle", fake)
    code = run(["scenario", "--name", "shrinking-circle", "--s", "0.5", "--out", "x"])
    assert code == 1


def test_missing_name_is_usage_like_error(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["barrier", "--s", "0.5", "--out", "x"]) == 2


def test_unwritable_output_is_numerical_error(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "blocker").write_text("a file, not a directory")
    code = run(
        ["curvature", "--shape", "circle", "--s", "0.5", "--out", "blocker/x"]
    )
    assert code == 3
