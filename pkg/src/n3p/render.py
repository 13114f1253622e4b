"""SVG rendering of a scenario and a planned trajectory."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon as MplPolygon  # noqa: E402

from .environment import LAYOUT, Scenario  # noqa: E402
from .geometry import Pose, VehicleSpec, footprint_at, points_from_spot_frame  # noqa: E402
from .hybrid_astar import PlannedPath  # noqa: E402

FOOTPRINT_EVERY = 1.5  # meters of arc between drawn footprints


def spot_outline(scenario: Scenario, spec: Optional[VehicleSpec] = None) -> list[tuple[float, float]]:
    """Corners of the target spot in world coordinates."""
    spec = spec or VehicleSpec()
    ta = scenario.true_params
    w = ta.w_spot if ta is not None else spec.width + 1.0
    depth = LAYOUT.depth(scenario.ptype)
    # spot width runs along the lane (x) for every type, depth along y
    local = [(-w / 2, -depth / 2), (w / 2, -depth / 2), (w / 2, depth / 2), (-w / 2, depth / 2)]
    pts = points_from_spot_frame(np.array(local, dtype=float), scenario.spot_pose)
    return [tuple(p) for p in pts]


def render_trajectory(
    scenario: Scenario,
    path: PlannedPath,
    out_path: str | Path,
    spec: Optional[VehicleSpec] = None,
    g_pre: Optional[Pose] = None,
    title: str = "",
) -> tuple[float, float, float, float]:
    """Write an SVG of the scene and path. Returns the axis limits (x0, x1, y0, y1)."""
    if not path.states:
        raise ValueError("path has no states")
    spec = spec or VehicleSpec()
    fig, ax = plt.subplots(figsize=(8, 6))
    pts = scenario.obstacles.points
    if len(pts):
        ax.scatter(pts[:, 0], pts[:, 1], s=1.5, c="0.35", linewidths=0, gid="obstacles")
    ax.add_patch(MplPolygon(spot_outline(scenario, spec), closed=True, fill=False, ec="tab:green", lw=1.2, ls="--"))

    xy = path.poses_array()
    # footprints every FOOTPRINT_EVERY meters plus the last state
    acc = 0.0
    for k, st in enumerate(path.states):
        if k > 0:
            p0 = path.states[k - 1].pose
            acc += ((st.pose.x - p0.x) ** 2 + (st.pose.y - p0.y) ** 2) ** 0.5
        if k == 0 or acc >= FOOTPRINT_EVERY or k == len(path.states) - 1:
            fp = footprint_at(spec, st.pose)
            ax.add_patch(MplPolygon(fp.corners, closed=True, fill=False, ec="tab:blue", lw=0.5, alpha=0.6))
            acc = 0.0
    ax.plot(xy[:, 0], xy[:, 1], color="red", lw=1.5, gid="trajectory")
    ax.plot([xy[0, 0]], [xy[0, 1]], "o", color="black", ms=4)
    if g_pre is not None:
        ax.plot([g_pre.x], [g_pre.y], marker="*", color="orange", ms=12, ls="none", gid="g_pre")

    xs = [xy[:, 0].min(), xy[:, 0].max()]
    ys = [xy[:, 1].min(), xy[:, 1].max()]
    if len(pts):
        xs += [pts[:, 0].min(), pts[:, 0].max()]
        ys += [pts[:, 1].min(), pts[:, 1].max()]
    for x, y in spot_outline(scenario, spec):
        xs.append(x)
        ys.append(y)
    pad = 1.0
    limits = (min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)
    ax.set_xlim(limits[0], limits[1])
    ax.set_ylim(limits[2], limits[3])
    ax.set_aspect("equal", adjustable="box")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    limits = (*ax.get_xlim(), *ax.get_ylim())
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return limits
