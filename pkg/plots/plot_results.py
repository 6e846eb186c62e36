#!/usr/bin/env python3
"""Render figures from manisac output tables.

Reads only the documented CSV schemas (results.csv, traces.csv, matching.csv,
gain grid CSVs) and writes raster images; it never imports the simulator.

    python plot_results.py --kind heatmap     --in out/grid_seed0.csv --out bp.png
    python plot_results.py --kind convergence --in out/traces.csv     --out conv.png
    python plot_results.py --kind sweep       --in out/results.csv    --out wsr.png
    python plot_results.py --kind apm_bars    --in out/matching.csv   --out apm.png

Exit codes: 0 success, 2 schema mismatch or unreadable input, 1 other error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class SchemaError(Exception):
    pass


REQUIRED_COLUMNS = {
    "heatmap": ("x", "y", "gain"),
    "convergence": ("seed", "scheme", "iteration", "wsr"),
    "sweep": ("seed", "scheme", "A_over_lambda", "wsr"),
    "apm_bars": ("seed", "N", "method", "total_distance_m"),
}


def read_table(path: Path, required: tuple[str, ...]) -> list[dict]:
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"missing column {col!r} in {path}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"no data rows in {path}")
    return rows


def render_heatmap(rows: list[dict], out: Path) -> None:
    xs = sorted({float(r["x"]) for r in rows})
    ys = sorted({float(r["y"]) for r in rows})
    lookup = {(float(r["x"]), float(r["y"])): float(r["gain"]) for r in rows}
    gain = np.zeros((len(ys), len(xs)))
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            gain[iy, ix] = lookup.get((x, y), np.nan)
    fig, ax = plt.subplots(figsize=(6.5, 5.0))
    im = ax.pcolormesh(xs, ys, gain, shading="nearest", cmap="viridis")
    fig.colorbar(im, ax=ax, label="beamforming gain")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("Beampattern")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render_convergence(rows: list[dict], out: Path) -> None:
    series = defaultdict(list)
    for r in rows:
        key = (r["scheme"], r["seed"])
        series[key].append((int(r["iteration"]), float(r["wsr"])))
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for (scheme, seed), points in sorted(series.items()):
        points.sort()
        it = [p[0] for p in points]
        val = [p[1] for p in points]
        ax.plot(it, val, marker="o", markersize=3,
                label=f"{scheme} seed {seed}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("weighted sum rate (bit/s/Hz)")
    ax.set_title("Alternating optimization convergence")
    if len(series) <= 12:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render_sweep(rows: list[dict], out: Path) -> None:
    acc = defaultdict(list)
    for r in rows:
        acc[(r["scheme"], float(r["A_over_lambda"]))].append(float(r["wsr"]))
    schemes = sorted({k[0] for k in acc})
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for scheme in schemes:
        sizes = sorted(a for s, a in acc if s == scheme)
        means = [np.mean(acc[(scheme, a)]) for a in sizes]
        ax.plot(sizes, means, marker="s", label=scheme.upper())
    ax.set_xlabel("region side length (wavelengths)")
    ax.set_ylabel("mean weighted sum rate (bit/s/Hz)")
    ax.set_title("WSR vs moving-region size")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render_apm_bars(rows: list[dict], out: Path) -> None:
    acc = defaultdict(list)
    for r in rows:
        acc[(int(r["N"]), r["method"])].append(float(r["total_distance_m"]))
    ns = sorted({k[0] for k in acc})
    methods = sorted({k[1] for k in acc})
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for i, method in enumerate(methods):
        xs = np.arange(len(ns)) + (i - (len(methods) - 1) / 2) * width
        means = [np.mean(acc.get((n, method), [np.nan])) for n in ns]
        ax.bar(xs, means, width=width, label=method)
    ax.set_xticks(np.arange(len(ns)))
    ax.set_xticklabels([str(n) for n in ns])
    ax.set_xlabel("antennas per array")
    ax.set_ylabel("mean total movement distance (m)")
    ax.set_title("Antenna movement distance by matching method")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


RENDERERS = {
    "heatmap": render_heatmap,
    "convergence": render_convergence,
    "sweep": render_sweep,
    "apm_bars": render_apm_bars,
}


def render(kind: str, in_path: Path, out_path: Path) -> None:
    rows = read_table(in_path, REQUIRED_COLUMNS[kind])
    out_path.parent.mkdir(parents=True, exist_ok=True)
    RENDERERS[kind](rows, out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.kind, Path(args.in_path), Path(args.out_path))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
