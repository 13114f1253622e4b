"""Offline collection of preparatory poses and the 1-nearest-neighbour selector.

A sample pairs an initial pose and its abstract environment with the pose
from which the planner's final Reeds-Shepp shot started. With k = 1 the
predicted pose is always one of those stored poses, each of which is known
to admit a collision-free Reeds-Shepp connection in its own environment.
"""
from __future__ import annotations

import hashlib
import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .environment import (
    EnvAbstraction,
    ParkingType,
    QuantizationGrid,
    abstract_start_sampler,
    synth_abstract_obstacles,
)
from .errors import EmptyDataset, EmptyEnvironment, FormatError, PlanningFailure
from .geometry import TWO_PI, Pose, VehicleSpec
from .hybrid_astar import PlannerConfig, Variant, plan
from .reeds_shepp import rs_connect

log = logging.getLogger(__name__)

DATASET_VERSION = "n3p-dataset v1"
DEFAULT_SCALES = (1.0, 1.0, 2.0, 0.5, 1.0, 0.25)


def _g9(v: float) -> float:
    """Round to the nine significant digits used on disk."""
    return float(f"{v:.9g}")


@dataclass(frozen=True)
class Sample:
    x0: Pose
    env: tuple[float, float, float]  # w_lane, w_spot, d_deadend
    rs_start: Pose

    def row(self) -> list[float]:
        return [self.x0.x, self.x0.y, self.x0.theta, *self.env, self.rs_start.x, self.rs_start.y, self.rs_start.theta]


@dataclass
class SelectorDataset:
    ptype: ParkingType
    samples: list[Sample]
    grid: QuantizationGrid
    seed: int = 0
    n_per_env: int = 0
    config_hash: str = ""
    failures: int = 0
    per_env: dict = field(default_factory=dict)  # env tuple -> successes

    def features(self) -> np.ndarray:
        return np.array([s.row()[:6] for s in self.samples], dtype=float).reshape(-1, 6)

    def targets(self) -> np.ndarray:
        return np.array([s.row()[6:] for s in self.samples], dtype=float).reshape(-1, 3)


# -- offline collection ----------------------------------------------------

def _env_seed(ptype: ParkingType, seed: int, e: EnvAbstraction) -> str:
    return f"offline:{ptype.value}:{seed}:{e.w_lane:.6f}:{e.w_spot:.6f}:{e.d_deadend:.6f}"


def collect_env(
    e: EnvAbstraction,
    n_per_env: int,
    cfg: PlannerConfig,
    seed: int,
    spec: Optional[VehicleSpec] = None,
) -> tuple[list[Sample], int]:
    """Samples for one grid configuration, plus the number of failed attempts."""
    spec = spec or VehicleSpec()
    obstacles, goal = synth_abstract_obstacles(e, spec)
    rng = random.Random(_env_seed(e.ptype, seed, e))
    samples, failures = [], 0
    for _ in range(n_per_env):
        try:
            x0 = abstract_start_sampler(e, obstacles, spec, rng)
        except EmptyEnvironment:
            log.info("no collision-free start in %s; skipped", e)
            return samples, n_per_env - len(samples)
        x0 = Pose(_g9(x0.x), _g9(x0.y), _g9(x0.theta))
        try:
            path = plan(x0, goal.pose, obstacles, spec, cfg, Variant.WITH_RS)
        except PlanningFailure:
            failures += 1
            continue
        p = path.states[path.rs_start_index].pose
        rs = Pose(_g9(p.x), _g9(p.y), _g9(p.theta))
        # keep only poses that still connect after rounding
        if rs_connect(rs, goal.pose, spec.kappa_max, spec, obstacles) is None:
            failures += 1
            continue
        samples.append(Sample(x0, e.vector(), rs))
    return samples, failures


def _collect_job(args):
    e, n, cfg, seed, spec = args
    return collect_env(e, n, cfg, seed, spec)


def collect_offline(
    ptype: ParkingType | str,
    grid: QuantizationGrid,
    n_per_env: int,
    cfg: Optional[PlannerConfig] = None,
    seed: int = 0,
    spec: Optional[VehicleSpec] = None,
    workers: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SelectorDataset:
    if n_per_env < 1:
        raise ValueError("n_per_env must be >= 1")
    ptype = ParkingType(ptype)
    cfg = cfg or PlannerConfig()
    spec = spec or VehicleSpec()
    envs = grid.configurations(ptype)
    jobs = [(e, n_per_env, cfg, seed, spec) for e in envs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collect_job, jobs))
    else:
        results = []
        for k, job in enumerate(jobs):
            results.append(_collect_job(job))
            if progress:
                progress(k + 1, len(jobs))
    samples, failures, per_env = [], 0, {}
    for e, (s, f) in zip(envs, results):
        samples.extend(s)
        failures += f
        per_env[e.vector()] = len(s)
    return SelectorDataset(ptype, samples, grid, seed, n_per_env, cfg.digest(), failures, per_env)


# -- persistence -----------------------------------------------------------

def save_dataset(d: SelectorDataset, path: str | Path) -> None:
    lines = [
        DATASET_VERSION,
        f"type {d.ptype.value}",
        f"grid {d.grid.spec_string()}",
        f"seed {d.seed}",
        f"n_per_env {d.n_per_env}",
        f"config_hash {d.config_hash or '-'}",
        f"failures {d.failures}",
        f"count {len(d.samples)}",
    ]
    for s in d.samples:
        lines.append(" ".join(f"{v:.9g}" for v in s.row()))
    Path(path).write_text("\n".join(lines) + "\n")


_HEADER_KEYS = ("type", "grid", "seed", "n_per_env", "config_hash", "failures", "count")


def load_dataset(path: str | Path) -> SelectorDataset:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    if lines[0].strip() != DATASET_VERSION:
        found = lines[0].strip() or "<blank>"
        raise FormatError(f"version mismatch: expected {DATASET_VERSION!r}, found {found!r}", 1)
    head = {}
    for k, key in enumerate(_HEADER_KEYS, start=1):
        if k >= len(lines):
            raise FormatError(f"truncated header, missing {key!r}", k + 1)
        name, _, value = lines[k].partition(" ")
        if name != key or not value:
            raise FormatError(f"expected {key!r} header line", k + 1)
        head[key] = value.strip()
    try:
        ptype = ParkingType(head["type"])
        grid = QuantizationGrid.from_spec_string(head["grid"])
        seed = int(head["seed"])
        n_per_env = int(head["n_per_env"])
        failures = int(head["failures"])
        count = int(head["count"])
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}", len(_HEADER_KEYS) + 1) from None
    body = lines[len(_HEADER_KEYS) + 1 :]
    if len(body) < count:
        raise FormatError(f"truncated: header announces {count} samples, found {len(body)}", len(lines) + 1)
    samples, per_env = [], {}
    for k, line in enumerate(body[:count]):
        ln = len(_HEADER_KEYS) + 2 + k
        parts = line.split()
        if len(parts) != 9:
            raise FormatError(f"expected 9 columns, found {len(parts)}", ln)
        try:
            v = [float(p) for p in parts]
        except ValueError:
            raise FormatError("non-numeric value", ln) from None
        if not all(math.isfinite(x) for x in v):
            raise FormatError("non-finite value", ln)
        env = (v[3], v[4], v[5])
        samples.append(Sample(Pose(v[0], v[1], v[2]), env, Pose(v[6], v[7], v[8])))
        per_env[env] = per_env.get(env, 0) + 1
    for k, line in enumerate(body[count:]):
        if line.strip():
            raise FormatError("unexpected content after the announced samples", len(_HEADER_KEYS) + 2 + count + k)
    cfg_hash = "" if head["config_hash"] == "-" else head["config_hash"]
    return SelectorDataset(ptype, samples, grid, seed, n_per_env, cfg_hash, failures, per_env)


# -- nearest neighbour -----------------------------------------------------

@dataclass
class KnnIndex:
    dataset: SelectorDataset
    scales: tuple[float, ...]
    features: np.ndarray = field(repr=False)
    targets: list[Pose] = field(repr=False)
    k: int = 1


def build_index(d: SelectorDataset, scales: Sequence[float] = DEFAULT_SCALES) -> KnnIndex:
    if not d.samples:
        raise EmptyDataset(f"dataset for {d.ptype.value} has no samples")
    scales = tuple(float(s) for s in scales)
    if len(scales) != 6 or any(s <= 0 for s in scales):
        raise ValueError("need six positive feature scales")
    return KnnIndex(d, scales, d.features(), [s.rs_start for s in d.samples])


def nearest(index: KnnIndex, query: Sequence[float]) -> int:
    """Row of the nearest sample; the lowest row wins ties."""
    q = np.asarray(query, dtype=float)
    diff = index.features - q
    diff[:, 2] = np.remainder(diff[:, 2] + math.pi, TWO_PI) - math.pi
    d2 = ((diff * np.asarray(index.scales)) ** 2).sum(axis=1)
    return int(np.argmin(d2))  # argmin returns the first minimum


def predict(index: KnnIndex, x0: Pose, e_train: EnvAbstraction) -> Pose:
    return index.targets[nearest(index, (x0.x, x0.y, x0.theta, *e_train.vector()))]


# -- index files -----------------------------------------------------------

INDEX_VERSION = "n3p-index v1"


def save_index(index: KnnIndex, path: str | Path, dataset_path: str | Path) -> None:
    """Small text file naming the dataset (relative to the index), its digest and the scales."""
    path, dataset_path = Path(path), Path(dataset_path)
    try:
        rel = dataset_path.resolve().relative_to(path.resolve().parent)
    except ValueError:
        rel = dataset_path.resolve()
    lines = [
        INDEX_VERSION,
        f"dataset {rel}",
        f"sha256 {hashlib.sha256(dataset_path.read_bytes()).hexdigest()}",
        "scales " + " ".join(repr(s) for s in index.scales),
    ]
    path.write_text("\n".join(lines) + "\n")


def load_index(path: str | Path) -> KnnIndex:
    """Load an index file, or build one with default scales from a bare dataset file."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if lines and lines[0].strip() == DATASET_VERSION:
        return build_index(load_dataset(path))
    if not lines or lines[0].strip() != INDEX_VERSION:
        found = lines[0].strip() if lines else "<empty>"
        raise FormatError(f"version mismatch: expected {INDEX_VERSION!r}, found {found!r}", 1)
    head = {}
    for k, key in enumerate(("dataset", "sha256", "scales"), start=1):
        if k >= len(lines) or not lines[k].startswith(key + " "):
            raise FormatError(f"expected {key!r} line", k + 1)
        head[key] = lines[k][len(key) + 1 :].strip()
    ds_path = Path(head["dataset"])
    if not ds_path.is_absolute():
        ds_path = path.parent / ds_path
    digest = hashlib.sha256(ds_path.read_bytes()).hexdigest()
    if digest != head["sha256"]:
        raise FormatError(f"dataset {ds_path} changed since the index was built", 3)
    try:
        scales = [float(v) for v in head["scales"].split()]
    except ValueError:
        raise FormatError("bad scales", 4) from None
    return build_index(load_dataset(ds_path), scales)


def verify_samples(d: SelectorDataset, spec: Optional[VehicleSpec] = None) -> list[int]:
    """Rows whose rs_start no longer connects to the goal in their own abstract environment."""
    spec = spec or VehicleSpec()
    bad, cache = [], {}
    for k, s in enumerate(d.samples):
        if s.env not in cache:
            cache[s.env] = synth_abstract_obstacles(EnvAbstraction(*s.env, d.ptype), spec)
        obstacles, goal = cache[s.env]
        if rs_connect(s.rs_start, goal.pose, spec.kappa_max, spec, obstacles) is None:
            bad.append(k)
    return bad
