"""Benchmark runner: seeded scenario batches, per-run records and the
aggregated metric table (time percentiles, path quality, failures, nodes)."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .environment import Difficulty, ParkingType, Scenario, generate_scenario
from .errors import AllFailed, PathTooShort, PlanningFailure
from .geometry import VehicleSpec
from .hybrid_astar import PlannedPath, PlannerConfig, Variant, count_direction_changes
from .planner import plan_direct, plan_n3p
from .selector import KnnIndex

log = logging.getLogger(__name__)

METHODS = {
    "ha": ("HA*", Variant.PLAIN),
    "ha_rs": ("HA*-with-RS", Variant.WITH_RS),
    "ha_hold": ("HA*-Hold", Variant.HOLD),
    "knn_n3p": ("KNN-N3P", None),
}
DT = 0.1  # resampling step for steering variation, seconds


def direction_changes(path: PlannedPath) -> int:
    return count_direction_changes(path.segments)


def steering_variation(path: PlannedPath, spec: Optional[VehicleSpec] = None, dt: float = DT) -> float:
    """Mean absolute steering change per fixed time step.

    Segments are timed at the forward / reverse speed limits and the steering
    sequence is sampled every ``dt``; the sum of absolute changes is divided
    by the number of samples.
    """
    spec = spec or VehicleSpec()
    segs = [s for s in path.segments if s.length > 0]
    if len(path.states) < 2 or not segs:
        raise PathTooShort("path needs at least two states")
    durations = np.array([s.length / (spec.v_fwd_max if s.gear > 0 else spec.v_rev_max) for s in segs])
    ends = np.cumsum(durations)
    n = max(1, math.ceil(ends[-1] / dt - 1e-9))
    t = np.arange(n) * dt
    idx = np.minimum(np.searchsorted(ends, t + 1e-9, side="right"), len(segs) - 1)
    steer = np.array([s.steer for s in segs])[idx]
    return float(np.abs(np.diff(steer)).sum() / n)


@dataclass
class RunRecord:
    seed: int
    method: str
    success: bool
    cause: str = ""
    planning_time: Optional[float] = None
    length: Optional[float] = None
    direction_changes: Optional[int] = None
    steer_variation: Optional[float] = None
    nodes_expanded: Optional[int] = None
    used_fallback: Optional[bool] = None


@dataclass
class MetricsRow:
    method: str
    t_min: Optional[float]
    t_mean: Optional[float]
    t_median: Optional[float]
    t_p95: Optional[float]
    mean_dsteer: Optional[float]
    mean_length: Optional[float]
    fail_pct: float
    mean_ndc: Optional[float]
    max_ndc: Optional[int]
    mean_nodes: Optional[float]
    n_runs: int


METRIC_COLUMNS = [
    ("method", "Method"),
    ("t_min", "min(T)"),
    ("t_mean", "mean(T)"),
    ("t_median", "median(T)"),
    ("t_p95", "P95(T)"),
    ("mean_dsteer", "mean dsteer"),
    ("mean_length", "mean L"),
    ("fail_pct", "Fail %"),
    ("mean_ndc", "mean Ndc"),
    ("max_ndc", "max Ndc"),
    ("mean_nodes", "mean Nnode"),
]
RUN_COLUMNS = [f.name for f in RunRecord.__dataclass_fields__.values()]
TIMING_COLUMNS = ("planning_time",)


def compute_metrics(records: Sequence[RunRecord], method: Optional[str] = None) -> MetricsRow:
    if not records:
        raise ValueError("no records")
    method = method or records[0].method
    ok = [r for r in records if r.success]
    fail_pct = 100.0 * (len(records) - len(ok)) / len(records)
    if not ok:
        row = MetricsRow(method, None, None, None, None, None, None, fail_pct, None, None, None, len(records))
        raise AllFailed(row)
    t = np.array([r.planning_time for r in ok], dtype=float)
    ndc = [r.direction_changes for r in ok]
    dsteer = [r.steer_variation for r in ok if r.steer_variation is not None]
    return MetricsRow(
        method=method,
        t_min=float(t.min()),
        t_mean=float(t.mean()),
        t_median=float(np.median(t)),
        t_p95=float(np.percentile(t, 95)),
        mean_dsteer=float(np.mean(dsteer)) if dsteer else None,
        mean_length=float(np.mean([r.length for r in ok])),
        fail_pct=fail_pct,
        mean_ndc=float(np.mean(ndc)),
        max_ndc=int(max(ndc)),
        mean_nodes=float(np.mean([r.nodes_expanded for r in ok])),
        n_runs=len(records),
    )


def _record(seed: int, method: str, path: PlannedPath, spec: VehicleSpec, fallback: Optional[bool]) -> RunRecord:
    try:
        dsteer = steering_variation(path, spec)
    except PathTooShort:
        dsteer = 0.0
    return RunRecord(
        seed=seed,
        method=method,
        success=True,
        planning_time=path.stats.planning_time,
        length=path.stats.total_length,
        direction_changes=direction_changes(path),
        steer_variation=dsteer,
        nodes_expanded=path.stats.nodes_expanded,
        used_fallback=fallback,
    )


def run_method(
    method: str,
    scenario: Scenario,
    cfg: PlannerConfig,
    spec: VehicleSpec,
    index: Optional[KnnIndex] = None,
) -> tuple[RunRecord, Optional[PlannedPath], object]:
    """One planner call. Returns (record, world path or None, N3P result or None)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    name, variant = METHODS[method]
    try:
        if variant is None:
            if index is None:
                raise ValueError("KNN-N3P needs a selector index")
            res = plan_n3p(scenario.start, scenario, index, cfg, spec)
            return _record(scenario.seed, method, res.path, spec, res.used_fallback), res.path, res
        path = plan_direct(scenario, variant, cfg, spec)
        return _record(scenario.seed, method, path, spec, None), path, None
    except PlanningFailure as exc:
        return RunRecord(scenario.seed, method, False, cause=exc.cause, nodes_expanded=exc.nodes_expanded), None, None


@dataclass
class ExperimentResult:
    rows: list[MetricsRow]
    records: list[RunRecord]
    scenarios: list[Scenario] = field(repr=False)
    paths: dict = field(default_factory=dict, repr=False)  # (method, seed) -> (path, n3p result)


def scenario_seeds(seed: int, n: int) -> list[int]:
    """Scenario seeds of a batch: ``seed``, ``seed + 1``, ..."""
    return [seed + i for i in range(n)]


def _job(args):
    method, sc, cfg, spec, index, keep = args
    rec, path, res = run_method(method, sc, cfg, spec, index)
    return rec, (path, res) if keep else None


def run_experiment(
    methods: Sequence[str],
    difficulty: Difficulty | str,
    ptype: ParkingType | str,
    n: int,
    seed: int = 0,
    cfg: Optional[PlannerConfig] = None,
    spec: Optional[VehicleSpec] = None,
    index: Optional[KnnIndex] = None,
    workers: int = 1,
    keep_paths: bool = False,
) -> ExperimentResult:
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or PlannerConfig()
    spec = spec or VehicleSpec()
    difficulty = Difficulty(difficulty)
    ptype = ParkingType(ptype)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    if "knn_n3p" in methods and index is None:
        raise ValueError("KNN-N3P needs a selector index")
    scenarios = [generate_scenario(difficulty, ptype, s, spec) for s in scenario_seeds(seed, n)]
    jobs = [(m, sc, cfg, spec, index if m == "knn_n3p" else None, keep_paths) for m in methods for sc in scenarios]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_job(j) for j in jobs]
    records = [rec for rec, _ in out]
    paths = {(rec.method, rec.seed): extra for rec, extra in out if extra is not None}
    rows = []
    for m in methods:
        recs = [r for r in records if r.method == m]
        try:
            rows.append(compute_metrics(recs, METHODS[m][0]))
        except AllFailed as exc:
            rows.append(exc.args[0])
    return ExperimentResult(rows, records, scenarios, paths)


# -- output ----------------------------------------------------------------

def _fmt(v, exact: bool = True) -> str:
    """CSV cells keep full float precision so metrics can be recomputed from runs.csv."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v) if exact else f"{v:.6g}"
    return str(v)


def metrics_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key for key, _ in METRIC_COLUMNS])
    for r in rows:
        w.writerow([_fmt(getattr(r, key)) for key, _ in METRIC_COLUMNS])
    return buf.getvalue()


def runs_csv(records: Sequence[RunRecord], include_timing: bool = True) -> str:
    cols = [c for c in RUN_COLUMNS if include_timing or c not in TIMING_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def text_table(rows: Sequence[MetricsRow]) -> str:
    """Aligned plain-text version of the metric table."""
    cells = [[title for _, title in METRIC_COLUMNS]]
    for r in rows:
        cells.append([_fmt(getattr(r, key), exact=False) or "-" for key, _ in METRIC_COLUMNS])
    widths = [max(len(row[i]) for row in cells) for i in range(len(cells[0]))]
    lines = []
    for k, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "metrics": out / "metrics.csv",
        "runs": out / "runs.csv",
        "table": out / "table.txt",
    }
    files["metrics"].write_text(metrics_csv(result.rows))
    files["runs"].write_text(runs_csv(result.records))
    files["table"].write_text(text_table(result.rows))
    return files


def timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S")
