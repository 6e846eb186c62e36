"""Smoke tests: every plot kind renders from fixtures produced by the
simulator CLI, and schema mismatches fail loudly with the column named.

The fixtures come from running the installed `manisac` command, so these
tests exercise the real file formats end to end without importing any of the
simulator's internals.
"""

import subprocess
import sys
from pathlib import Path

import pytest

SCRIPT = Path(__file__).resolve().parents[1] / "plot_results.py"

DESK_SET = [
    "--set", "n_transmit=4", "--set", "n_receive=4",
    "--set", "n_targets=1", "--set", "n_ul=1", "--set", "n_dl=1",
    "--set", "solver.ao_max_iters=8", "--set", "solver.pga_max_steps=150",
]


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "manisac.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


def run_plot(args):
    return subprocess.run([sys.executable, str(SCRIPT), *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def fixtures(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    solve_dir = root / "solve"
    run_cli(["--cmd", "solve", "--gamma", "2", "--seeds", "0,1",
             "--out", str(solve_dir), *DESK_SET])
    apm_dir = root / "apm"
    run_cli(["--cmd", "apm", "--seeds", "0:10", "--out", str(apm_dir),
             "--set", "n_transmit=6", "--set", "n_receive=6",
             "--set", "region_side_lambda=120"])
    bp_dir = root / "bp"
    run_cli(["--cmd", "beampattern", "--seeds", "0", "--out", str(bp_dir),
             "--set", "n_transmit=16", "--set", "n_receive=4",
             "--set", "beampattern.grid.nx=24",
             "--set", "beampattern.grid.ny=20"])
    return {
        "traces": solve_dir / "traces.csv",
        "results": solve_dir / "results.csv",
        "matching": apm_dir / "matching.csv",
        "grid": bp_dir / "grid_seed0.csv",
    }


@pytest.mark.parametrize("kind,fixture", [
    ("convergence", "traces"),
    ("sweep", "results"),
    ("apm_bars", "matching"),
    ("heatmap", "grid"),
])
def test_kind_renders(fixtures, tmp_path, kind, fixture):
    out = tmp_path / f"{kind}.png"
    src = fixtures[fixture]
    before = src.read_bytes()
    proc = run_plot(["--kind", kind, "--in", str(src), "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    assert out.exists() and out.stat().st_size > 1000
    assert src.read_bytes() == before  # inputs never mutated


def test_rendering_reproducible(fixtures, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for out in (a, b):
        proc = run_plot(["--kind", "heatmap", "--in", str(fixtures["grid"]),
                         "--out", str(out)])
        assert proc.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_column_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    proc = run_plot(["--kind", "heatmap", "--in", str(bad),
                     "--out", str(tmp_path / "no.png")])
    assert proc.returncode == 2
    assert "gain" in proc.stderr
    assert not (tmp_path / "no.png").exists()


def test_empty_table_rejected(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y,gain\n")
    proc = run_plot(["--kind", "heatmap", "--in", str(empty),
                     "--out", str(tmp_path / "no.png")])
    assert proc.returncode == 2
    assert not (tmp_path / "no.png").exists()


def test_missing_file_rejected(tmp_path):
    proc = run_plot(["--kind", "sweep", "--in", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "no.png")])
    assert proc.returncode == 2
