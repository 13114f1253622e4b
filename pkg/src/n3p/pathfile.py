"""Plain-text persistence of planned paths (start pose plus motion segments)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from .errors import FormatError
from .geometry import DS_CHECK, Pose, VehicleSpec, sample_segment
from .hybrid_astar import MotionSegment, PlannedPath, PlannerConfig, build_path

PATH_VERSION = "n3p-path v1"


def save_path(path: PlannedPath, out: str | Path, g_pre: Optional[Pose] = None) -> None:
    lines = [PATH_VERSION, "start " + " ".join(repr(v) for v in path.start.as_tuple())]
    if g_pre is not None:
        lines.append("g_pre " + " ".join(repr(v) for v in g_pre.as_tuple()))
    lines.append(f"rs_from {'-' if path.rs_start_index is None else _rs_segment(path)}")
    lines.append(f"segments {len(path.segments)}")
    for s in path.segments:
        lines.append(f"{s.steer!r} {s.gear} {s.length!r}")
    Path(out).write_text("\n".join(lines) + "\n")


def _rs_segment(path: PlannedPath) -> int:
    """Index of the first segment sampled after the RS start state."""
    idx = 0  # state index where the current segment begins
    for n, seg in enumerate(path.segments):
        if idx >= path.rs_start_index:
            return n
        idx += _n_samples(seg)
    return len(path.segments)


def _n_samples(seg: MotionSegment, ds: float = DS_CHECK) -> int:
    # mirrors sample_segment: start excluded, end included
    return len(sample_segment(0.0, 0.0, 0.0, 0.0, seg.gear * seg.length, ds))


def load_path(
    src: str | Path, spec: Optional[VehicleSpec] = None, cfg: Optional[PlannerConfig] = None
) -> tuple[PlannedPath, Optional[Pose]]:
    spec = spec or VehicleSpec()
    cfg = cfg or PlannerConfig()
    lines = Path(src).read_text().splitlines()
    if not lines or lines[0].strip() != PATH_VERSION:
        found = lines[0].strip() if lines else "<empty>"
        raise FormatError(f"version mismatch: expected {PATH_VERSION!r}, found {found!r}", 1)
    k = 1

    def take(key: str):
        nonlocal k
        if k >= len(lines):
            raise FormatError(f"missing {key!r} line", k + 1)
        name, _, rest = lines[k].partition(" ")
        if name != key:
            raise FormatError(f"expected {key!r} line", k + 1)
        k += 1
        return rest.split()

    def pose(vals):
        try:
            if len(vals) != 3:
                raise ValueError
            return Pose(*(float(v) for v in vals))
        except ValueError:
            raise FormatError("pose needs three numbers", k) from None

    start = pose(take("start"))
    g_pre = None
    if k < len(lines) and lines[k].startswith("g_pre "):
        g_pre = pose(take("g_pre"))
    rs = take("rs_from")
    rs_from = None if rs == ["-"] else int(rs[0])
    try:
        n = int(take("segments")[0])
    except (ValueError, IndexError):
        raise FormatError("bad segment count", k) from None
    segs = []
    for j in range(n):
        if k + j >= len(lines):
            raise FormatError(f"truncated: expected {n} segments, found {j}", k + j + 1)
        parts = lines[k + j].split()
        try:
            steer, gear, length = float(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise FormatError("segment needs steer gear length", k + j + 1) from None
        segs.append(MotionSegment(steer, gear, length))
    return build_path(start, segs, spec, cfg, rs_from), g_pre
