import csv
import subprocess
import sys

import pytest

from n3p.cli import main, packaged_dataset
from n3p.environment import ParkingType, load_scenario
from n3p.geometry import VehicleSpec
from n3p.hybrid_astar import PlannerConfig
from n3p.pathfile import load_path
from n3p.selector import load_dataset


def test_bench_writes_outputs(tmp_path, capsys):
    rc = main(["bench", "--difficulty", "easy", "--type", "reverse", "--n", "2", "--seed", "3",
               "--methods", "ha_rs,knn_n3p", "--out-dir", str(tmp_path), "--render", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "KNN-N3P" in out and "HA*-with-RS" in out
    rows = list(csv.DictReader((tmp_path / "metrics.csv").open()))
    assert [r["method"] for r in rows] == ["HA*-with-RS", "KNN-N3P"]
    runs = list(csv.DictReader((tmp_path / "runs.csv").open()))
    assert len(runs) == 4 and {r["seed"] for r in runs} == {"3", "4"}
    assert sorted(p.name for p in tmp_path.glob("*.svg")) == ["ha_rs_3.svg", "knn_n3p_3.svg"]


@pytest.mark.parametrize("argv", [
    ["--methods", "ha_rs,warp"],
    ["--methods", ""],
    ["--n", "0"],
    ["--config", "/nonexistent.cfg"],
    ["--methods", "knn_n3p", "--index", "/nonexistent.idx"],
])
def test_bench_setup_errors(tmp_path, argv, capsys):
    base = ["bench", "--difficulty", "easy", "--type", "reverse", "--n", "1", "--out-dir", str(tmp_path)]
    assert main(base + argv) == 2
    assert "error:" in capsys.readouterr().err


def test_bench_rejects_index_of_other_type(tmp_path):
    rc = main(["bench", "--difficulty", "easy", "--type", "forward", "--n", "1", "--methods", "knn_n3p",
               "--index", str(packaged_dataset(ParkingType.REVERSE)), "--out-dir", str(tmp_path)])
    assert rc == 2


def test_bench_bad_choice_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--difficulty", "hard", "--type", "reverse"])
    assert exc.value.code != 0


def test_plan_then_render(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["plan", "--difficulty", "complex", "--type", "reverse", "--seed", "2", "--out-dir", str(out)]) == 0
    assert "length" in capsys.readouterr().out
    sc = load_scenario(out / "scenario.txt")
    path, g_pre = load_path(out / "path.txt", VehicleSpec(), PlannerConfig())
    assert path.start.close_to(sc.start, 1e-6)
    assert path.end.close_to(sc.goal_world(), 1e-6)
    assert (out / "path.svg").read_text().count('id="trajectory"') == 1
    svg = tmp_path / "again.svg"
    assert main(["render", "--scenario", str(out / "scenario.txt"), "--path", str(out / "path.txt"),
                 "--out", str(svg)]) == 0
    assert svg.exists()
    # replay the saved scenario file through a baseline
    assert main(["plan", "--scenario", str(out / "scenario.txt"), "--method", "ha_rs",
                 "--out-dir", str(tmp_path / "b")]) == 0


def test_plan_needs_a_scenario(tmp_path):
    assert main(["plan", "--out-dir", str(tmp_path)]) == 2
    assert main(["plan", "--scenario", str(tmp_path / "missing.txt"), "--out-dir", str(tmp_path)]) == 2


def test_gen_data_and_build_index(tmp_path, capsys):
    data = tmp_path / "d.txt"
    rc = main(["gen-data", "--type", "reverse", "--grid", "6:6:0.5 3.4:3.4:0.2 10:10:1", "--n-per-env", "2",
               "--seed", "1", "--out", str(data)])
    assert rc == 0
    d = load_dataset(data)
    assert d.n_per_env == 2 and len(d.samples) + d.failures == 2
    idx = tmp_path / "d.idx"
    assert main(["build-index", "--data", str(data), "--verify", "--out", str(idx)]) == 0
    assert idx.read_text().startswith("n3p-index v1")
    rc = main(["bench", "--difficulty", "easy", "--type", "reverse", "--n", "1", "--methods", "knn_n3p",
               "--index", str(idx), "--out-dir", str(tmp_path / "b")])
    assert rc == 0
    # a dataset edited after indexing is refused
    data.write_text(data.read_text() + "\n")
    assert main(["bench", "--difficulty", "easy", "--type", "reverse", "--n", "1", "--methods", "knn_n3p",
                 "--index", str(idx), "--out-dir", str(tmp_path / "c")]) == 2
    assert main(["gen-data", "--type", "reverse", "--grid", "bogus", "--out", str(data)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "n3p", "bench", "--difficulty", "easy", "--type", "parallel",
                        "--n", "1", "--methods", "ha_rs", "--out-dir", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "metrics.csv").exists() and (tmp_path / "runs.csv").exists()
    r = subprocess.run([sys.executable, "-m", "n3p", "bench", "--difficulty", "easy", "--type", "parallel",
                        "--methods", "nope", "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 2
