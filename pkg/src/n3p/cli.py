"""Command-line entry point: gen-data, build-index, plan, bench, render."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .bench import METHODS, run_experiment, run_method, text_table, write_outputs
from .config import Settings, load_settings
from .environment import Difficulty, ParkingType, QuantizationGrid, generate_scenario, load_scenario, save_scenario
from .errors import EmptyDataset, FormatError, PlanningFailure
from .pathfile import load_path, save_path
from .selector import build_index, collect_offline, load_dataset, load_index, save_dataset, save_index, verify_samples

log = logging.getLogger("n3p")


class SetupError(Exception):
    pass


def packaged_dataset(ptype: ParkingType) -> Path:
    return Path(str(resources.files("n3p") / "data" / f"{ptype.value}.txt"))


def _settings(args) -> Settings:
    try:
        return load_settings(args.config)
    except (OSError, ValueError) as exc:
        raise SetupError(f"config: {exc}") from None


def _index(path: Optional[str], ptype: ParkingType, s: Settings):
    src = Path(path) if path else packaged_dataset(ptype)
    try:
        idx = load_index(src)
    except (OSError, FormatError, EmptyDataset) as exc:
        raise SetupError(f"index {src}: {exc}") from None
    if path is None or src.read_text().startswith("n3p-dataset"):
        idx = build_index(idx.dataset, s.scales)
    if idx.dataset.ptype is not ptype:
        raise SetupError(f"index {src} holds {idx.dataset.ptype.value} samples, need {ptype.value}")
    return idx


# -- subcommands -----------------------------------------------------------

def cmd_gen_data(args) -> int:
    s = _settings(args)
    ptype = ParkingType(args.type)
    grid = s.grids[ptype]
    if args.grid:
        try:
            grid = QuantizationGrid.from_spec_string(args.grid)
        except ValueError as exc:
            raise SetupError(f"--grid: {exc}") from None
    cfg = replace(s.planner, node_cap=s.offline_node_cap)
    n = args.n_per_env or s.n_per_env
    seed = s.seed if args.seed is None else args.seed
    t0 = time.perf_counter()

    def progress(k, total):
        if k % 10 == 0 or k == total:
            log.info("%d/%d configurations, %.0f s", k, total, time.perf_counter() - t0)

    d = collect_offline(ptype, grid, n, cfg, seed, s.vehicle, args.workers, progress)
    save_dataset(d, args.out)
    print(f"{args.out}: {len(d.samples)} samples, {d.failures} failed attempts, {time.perf_counter() - t0:.1f} s")
    return 0


def cmd_build_index(args) -> int:
    s = _settings(args)
    try:
        d = load_dataset(args.data)
        idx = build_index(d, s.scales)
    except (OSError, FormatError, EmptyDataset) as exc:
        raise SetupError(f"{args.data}: {exc}") from None
    if args.verify:
        bad = verify_samples(d, s.vehicle)
        if bad:
            print(f"{len(bad)} samples fail re-verification, first rows {bad[:10]}", file=sys.stderr)
            return 1
    save_index(idx, args.out, args.data)
    print(f"{args.out}: {len(d.samples)} samples of type {d.ptype.value}")
    return 0


def _scenario_from_args(args, s: Settings):
    if args.scenario:
        try:
            return load_scenario(args.scenario)
        except (OSError, FormatError) as exc:
            raise SetupError(f"{args.scenario}: {exc}") from None
    if not (args.difficulty and args.type):
        raise SetupError("give --scenario or both --difficulty and --type")
    return generate_scenario(args.difficulty, args.type, args.seed, s.vehicle)


def cmd_plan(args) -> int:
    from .render import render_trajectory

    s = _settings(args)
    sc = _scenario_from_args(args, s)
    idx = _index(args.index, sc.ptype, s) if args.method == "knn_n3p" else None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(sc, out / "scenario.txt")
    rec, path, res = run_method(args.method, sc, s.planner, s.vehicle, idx)
    if not rec.success:
        print(f"planning failed: {rec.cause} after {rec.nodes_expanded} expansions", file=sys.stderr)
        return 1
    g_pre = res.g_pre if res is not None else None
    save_path(path, out / "path.txt", g_pre)
    render_trajectory(sc, path, out / "path.svg", s.vehicle, g_pre, title=f"{METHODS[args.method][0]} seed {sc.seed}")
    print(
        f"length {rec.length:.3f} m, direction changes {rec.direction_changes}, "
        f"nodes {rec.nodes_expanded}, time {rec.planning_time:.3f} s"
        + (", fallback" if rec.used_fallback else "")
    )
    return 0


def cmd_bench(args) -> int:
    s = _settings(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if not methods or unknown:
        raise SetupError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    if args.n < 1:
        raise SetupError("--n must be >= 1")
    ptype = ParkingType(args.type)
    idx = _index(args.index, ptype, s) if "knn_n3p" in methods else None
    result = run_experiment(
        methods, args.difficulty, ptype, args.n, args.seed, s.planner, s.vehicle, idx, args.workers,
        keep_paths=args.render > 0,
    )
    files = write_outputs(result, args.out_dir)
    if args.render > 0:
        from .render import render_trajectory

        for sc in result.scenarios[: args.render]:
            for m in methods:
                path, res = result.paths.get((m, sc.seed), (None, None))
                if path is None:
                    continue
                g_pre = res.g_pre if res is not None else None
                render_trajectory(sc, path, Path(args.out_dir) / f"{m}_{sc.seed}.svg", s.vehicle, g_pre,
                                  title=f"{METHODS[m][0]} {args.difficulty} {ptype.value} seed {sc.seed}")
    print(text_table(result.rows), end="")
    print(f"wrote {files['metrics']} and {files['runs']}")
    return 0


def cmd_render(args) -> int:
    from .render import render_trajectory

    s = _settings(args)
    try:
        sc = load_scenario(args.scenario)
        path, g_pre = load_path(args.path, s.vehicle, s.planner)
    except (OSError, FormatError) as exc:
        raise SetupError(str(exc)) from None
    render_trajectory(sc, path, args.out, s.vehicle, g_pre)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="n3p", description="Three-stage learned parking planner and benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    types = [t.value for t in ParkingType]
    diffs = [d.value for d in Difficulty]

    g = sub.add_parser("gen-data", help="collect offline preparatory-pose samples")
    g.add_argument("--type", choices=types, required=True)
    g.add_argument("--config")
    g.add_argument("--n-per-env", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--grid", help='override grid, e.g. "6:6:0.5 2.3:4.3:0.2 4:12:1"')
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    b = sub.add_parser("build-index", help="build a nearest-neighbour index file over a dataset")
    b.add_argument("--data", required=True)
    b.add_argument("--config")
    b.add_argument("--verify", action="store_true", help="re-check every stored sample with an RS connection")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_index)

    pl = sub.add_parser("plan", help="plan one scenario and write path, scenario and SVG")
    pl.add_argument("--scenario")
    pl.add_argument("--difficulty", choices=diffs)
    pl.add_argument("--type", choices=types)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--method", choices=list(METHODS), default="knn_n3p")
    pl.add_argument("--index")
    pl.add_argument("--config")
    pl.add_argument("--out-dir", default="out")
    pl.set_defaults(func=cmd_plan)

    be = sub.add_parser("bench", help="run a seeded batch and write metrics.csv and runs.csv")
    be.add_argument("--difficulty", choices=diffs, required=True)
    be.add_argument("--type", choices=types, required=True)
    be.add_argument("--n", type=int, default=100)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--methods", default="ha,ha_rs,ha_hold,knn_n3p")
    be.add_argument("--config")
    be.add_argument("--index")
    be.add_argument("--out-dir", default="bench_out")
    be.add_argument("--workers", type=int, default=1)
    be.add_argument("--render", type=int, default=0, metavar="K", help="write SVGs for the first K scenarios")
    be.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="render a saved scenario and path to SVG")
    r.add_argument("--scenario", required=True)
    r.add_argument("--path", required=True)
    r.add_argument("--config")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except SetupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PlanningFailure as exc:
        print(f"error: planning failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
