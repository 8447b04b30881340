"""Artifact writers: deterministic JSON and CSV with a sidecar metadata file.

Identical invocations must produce byte-identical artifacts, so the main
files carry no timestamps; wall-clock metadata goes to a ``<name>.meta.json``
sidecar next to each artifact.
"""

from __future__ import annotations

import csv
import json
import math
import time
from pathlib import Path

FORMAT_VERSION = 1

TRAJECTORY_COLUMNS = ("time", "front_id", "node_index", "x", "y", "H_s")


def _jsonable(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalars
        return _jsonable(value.item())
    return value


def write_json_artifact(path, payload: dict, resolved_config: dict):
    """Write a JSON artifact embedding the resolved configuration and the
    format version; timestamps go to the sidecar."""
    path = Path(path)
    body = {
        "format_version": FORMAT_VERSION,
        "config": _jsonable(resolved_config),
    }
    body.update(_jsonable(payload))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    _write_sidecar(path)
    return path


def write_csv_artifact(path, columns, rows, resolved_config: dict):
    """Write a CSV artifact; the resolved configuration is echoed in '#'
    comment lines before the header so the file stays self-describing."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# format_version={FORMAT_VERSION}\n")
        fh.write("# config=" + json.dumps(_jsonable(resolved_config), sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    _write_sidecar(path)
    return path


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return v


def _write_sidecar(path: Path):
    meta = {"created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "artifact": path.name}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def trajectory_rows(trajectory, curvatures=None):
    """Flatten FlowState snapshots into trajectory CSV rows.

    ``curvatures`` optionally maps (snapshot index, front index) to the node
    curvature array; omitted entries leave the H_s column empty.
    """
    rows = []
    for si, state in enumerate(trajectory):
        for fi, front in enumerate(state.fronts):
            H = None if curvatures is None else curvatures.get((si, fi))
            for ni, (x, y) in enumerate(front.nodes):
                rows.append(
                    (
                        state.time,
                        fi,
                        ni,
                        float(x),
                        float(y),
                        None if H is None else float(H[ni]),
                    )
                )
    return rows
