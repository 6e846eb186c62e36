"""Experiment orchestration and persistence.

Commands map seeds (and scheme/region sweeps) onto inner solves, collect flat
row dictionaries, and write byte-stable CSV tables: floats at 17 significant
digits, fixed column orders, deterministic row order.  Wall-clock timings go
to their own file so every other artifact is reproducible bit for bit across
reruns and thread counts.
"""

from __future__ import annotations

import copy
import hashlib
import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .beampattern import GainGrid, beampattern_grid, focusing_beamformer
from .channels import build_channels
from .config import build_scenario, solver_options
from .errors import ConfigError
from .geometry import sample_layout
from .matching import EXHAUSTIVE_LIMIT, apm_for_layouts
from .metrics import wsr
from .position_search import CandidateResult, run_scheme, scheme_layout
from .solver import SolverOptions

COMMANDS = ("solve", "sweep", "apm", "beampattern", "baselines")

# Seed streams for the standalone apm command's layout pairs.
APM_INIT_STREAM = 11
APM_OPT_STREAM = 12


@dataclass
class ResultsBundle:
    """Everything a run produces, before serialization."""

    command: str
    config: dict
    results_rows: list = field(default_factory=list)
    trace_rows: list = field(default_factory=list)
    matching_rows: list = field(default_factory=list)
    summary_rows: list = field(default_factory=list)
    grids: list = field(default_factory=list)  # (name, GainGrid)
    timing_rows: list = field(default_factory=list)
    channel_dumps: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    def result_columns(self) -> list[str]:
        cfg = self.config
        cols = ["seed", "scheme", "A_over_lambda", "wsr"]
        cols += [f"R_S{i + 1}" for i in range(cfg["n_targets"])]
        cols += [f"R_U{i + 1}" for i in range(cfg["n_ul"])]
        cols += [f"R_D{i + 1}" for i in range(cfg["n_dl"])]
        cols.append("iterations")
        return cols


def _result_row(cfg: dict, seed: int, scheme: str, a_over_lambda: float,
                res: CandidateResult) -> dict:
    scenario = build_scenario(_with_region(cfg, a_over_lambda), seed,
                              layout=res.layout)
    report = wsr(res.dv, build_channels(scenario), scenario)
    row = {
        "seed": seed,
        "scheme": scheme,
        "A_over_lambda": a_over_lambda,
        "wsr": res.wsr,
        "iterations": res.trace.iterations,
    }
    for i, r in enumerate(report.rate_targets):
        row[f"R_S{i + 1}"] = float(r)
    for i, r in enumerate(report.rate_ul):
        row[f"R_U{i + 1}"] = float(r)
    for i, r in enumerate(report.rate_dl):
        row[f"R_D{i + 1}"] = float(r)
    return row


def _trace_rows(seed: int, scheme: str, a_over_lambda: float,
                res: CandidateResult) -> list[dict]:
    rows = []
    t = res.trace
    for i, value in enumerate(t.wsr_values):
        rows.append({
            "seed": seed, "scheme": scheme, "A_over_lambda": a_over_lambda,
            "iteration": i, "wsr": value,
            "surrogate": t.surrogate_values[i - 1] if 1 <= i <= len(t.surrogate_values) else "",
            "sca_rounds": t.sca_rounds[i - 1] if 1 <= i <= len(t.sca_rounds) else "",
            "ascent_steps": t.ascent_steps[i - 1] if 1 <= i <= len(t.ascent_steps) else "",
        })
    return rows


def _with_region(cfg: dict, a_over_lambda: float) -> dict:
    out = copy.deepcopy(cfg)
    out["region_side_lambda"] = float(a_over_lambda)
    return out


def _matching_rows(cfg: dict, seed: int, a_over_lambda: float, init, opt,
                   methods) -> list[dict]:
    n = init.n_transmit
    rows = []
    identity_total = None
    for method in methods:
        if method == "exhaustive" and max(init.n_transmit, init.n_receive) > EXHAUSTIVE_LIMIT:
            continue
        plan_t, plan_r = apm_for_layouts(init, opt, method)
        total = plan_t.total_distance + plan_r.total_distance
        if method == "identity":
            identity_total = total
        rows.append({
            "seed": seed, "A_over_lambda": a_over_lambda, "N": n,
            "method": method, "total_distance_m": total,
        })
    for row in rows:
        if identity_total and identity_total > 0:
            row["reduction_pct"] = 100.0 * (1.0 - row["total_distance_m"] / identity_total)
        else:
            row["reduction_pct"] = 0.0
    return rows


def _dump_channels(ch) -> dict:
    def ri(arr):
        a = np.asarray(arr)
        return {"shape": list(a.shape),
                "real_imag": np.stack([a.real, a.imag], axis=-1).ravel().tolist()}

    return {"H_si": ri(ch.H_si), "h": ri(ch.h), "f": ri(ch.f),
            "G": ri(ch.G), "g_t": ri(ch.g_t), "g_r": ri(ch.g_r)}


def cmd_solve(cfg: dict, seeds, gamma: int, threads: int,
              dump_channels: bool = False) -> ResultsBundle:
    """Full pipeline per seed: random position search, then match the initial
    antenna positions to the selected ones."""
    bundle = ResultsBundle(command="solve", config=cfg)
    opts = solver_options(cfg)
    a_over_lambda = cfg["region_side_lambda"]
    methods = ["greedy", "identity"]
    for seed in seeds:
        scenario = build_scenario(cfg, seed)
        t0 = time.perf_counter()
        best = run_scheme("ma", scenario, gamma, seed, opts, threads)
        wall_ms = (time.perf_counter() - t0) * 1e3
        bundle.results_rows.append(_result_row(cfg, seed, "ma", a_over_lambda, best))
        bundle.trace_rows.extend(_trace_rows(seed, "ma", a_over_lambda, best))
        bundle.matching_rows.extend(
            _matching_rows(cfg, seed, a_over_lambda, scenario.layout, best.layout,
                           methods)
        )
        bundle.timing_rows.append({"seed": seed, "scheme": "ma",
                                   "A_over_lambda": a_over_lambda,
                                   "wall_ms": wall_ms})
        if dump_channels:
            sc_best = scenario.with_layout(best.layout)
            bundle.channel_dumps[f"channels_seed{seed}"] = _dump_channels(
                build_channels(sc_best)
            )
    return bundle


def cmd_sweep(cfg: dict, seeds, gamma: int, threads: int) -> ResultsBundle:
    """One result row per (scheme, region size, seed), plus aggregates."""
    bundle = ResultsBundle(command="sweep", config=cfg)
    opts = solver_options(cfg)
    schemes = cfg["sweep"]["schemes"]
    sizes = cfg["sweep"]["a_over_lambda"]
    for scheme in schemes:
        for a in sizes:
            wsrs = []
            for seed in seeds:
                cfg_a = _with_region(cfg, a)
                scenario = build_scenario(cfg_a, seed)
                t0 = time.perf_counter()
                res = run_scheme(scheme, scenario, gamma, seed, opts, threads)
                wall_ms = (time.perf_counter() - t0) * 1e3
                bundle.results_rows.append(_result_row(cfg_a, seed, scheme, a, res))
                bundle.trace_rows.extend(_trace_rows(seed, scheme, a, res))
                bundle.timing_rows.append({"seed": seed, "scheme": scheme,
                                           "A_over_lambda": a, "wall_ms": wall_ms})
                wsrs.append(res.wsr)
            bundle.summary_rows.append({
                "scheme": scheme, "A_over_lambda": a, "n_seeds": len(seeds),
                "wsr_mean": float(np.mean(wsrs)) if wsrs else 0.0,
                "wsr_std": float(np.std(wsrs)) if wsrs else 0.0,
            })
    return bundle


def cmd_baselines(cfg: dict, seeds, gamma: int, threads: int) -> ResultsBundle:
    """Fixed-position baselines at the configured region size."""
    bundle = ResultsBundle(command="baselines", config=cfg)
    opts = solver_options(cfg)
    a = cfg["region_side_lambda"]
    for scheme in ("fpaf", "fpah"):
        for seed in seeds:
            scenario = build_scenario(cfg, seed)
            t0 = time.perf_counter()
            res = run_scheme(scheme, scenario, gamma, seed, opts, threads)
            wall_ms = (time.perf_counter() - t0) * 1e3
            bundle.results_rows.append(_result_row(cfg, seed, scheme, a, res))
            bundle.trace_rows.extend(_trace_rows(seed, scheme, a, res))
            bundle.timing_rows.append({"seed": seed, "scheme": scheme,
                                       "A_over_lambda": a, "wall_ms": wall_ms})
    return bundle


def cmd_apm(cfg: dict, seeds, gamma: int, threads: int) -> ResultsBundle:
    """Distance accounting on independently sampled layout pairs."""
    bundle = ResultsBundle(command="apm", config=cfg)
    from .config import regions

    region_t, region_r = regions(cfg)
    lam = cfg["wavelength_m"]
    spacing = cfg["min_spacing_lambda"] * lam
    n, m = cfg["n_transmit"], cfg["n_receive"]
    a = cfg["region_side_lambda"]
    methods = cfg["apm"]["methods"]
    for seed in seeds:
        init = sample_layout(region_t, region_r, n, m, spacing,
                             np.random.default_rng([seed, APM_INIT_STREAM]))
        opt = sample_layout(region_t, region_r, n, m, spacing,
                            np.random.default_rng([seed, APM_OPT_STREAM]))
        bundle.matching_rows.extend(
            _matching_rows(cfg, seed, a, init, opt, methods)
        )
    return bundle


def cmd_beampattern(cfg: dict, seeds, gamma: int, threads: int) -> ResultsBundle:
    """Gain grids of the focusing beamformer for the configured layouts."""
    bundle = ResultsBundle(command="beampattern", config=cfg)
    bp = cfg["beampattern"]
    lam = cfg["wavelength_m"]
    for seed in seeds:
        scenario = build_scenario(cfg, seed)
        scheme = bp["scheme"]
        if scheme == "ma":
            layout = scenario.layout
        else:
            layout = scheme_layout(scheme, scenario)
        if bp["focus"] == "targets":
            focus = scenario.q_targets
        else:
            focus = np.asarray(bp["focus"], dtype=float).reshape(-1, 3)
        w = focusing_beamformer(layout.transmit, focus, lam)
        g = bp["grid"]
        grid = beampattern_grid(
            layout.transmit, w, (g["x_min"], g["x_max"]), (g["y_min"], g["y_max"]),
            g["z"], g["nx"], g["ny"], lam,
        )
        bundle.grids.append((f"grid_seed{seed}", grid))
    return bundle


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "apm": cmd_apm,
    "beampattern": cmd_beampattern,
    "baselines": cmd_baselines,
}


def run(cfg: dict, command: str, seeds, gamma: int | None = None,
        threads: int = 1, dump_channels: bool = False) -> ResultsBundle:
    if command not in _COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    gamma = cfg["gamma"] if gamma is None else gamma
    seeds = list(seeds)
    if command == "solve":
        bundle = cmd_solve(cfg, seeds, gamma, threads, dump_channels)
    else:
        bundle = _COMMANDS[command](cfg, seeds, gamma, threads)
    bundle.manifest = {
        "version": __version__,
        "command": command,
        "gamma": gamma,
        "seeds": seeds,
        "config_sha256": config_digest(cfg),
    }
    return bundle


def config_digest(cfg: dict) -> str:
    """Digest of the canonical serialization of the effective config."""
    return hashlib.sha256(canonical_config_bytes(cfg)).hexdigest()


def canonical_config_bytes(cfg: dict) -> bytes:
    return yaml.safe_dump(cfg, sort_keys=True).encode()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col, "")) for col in columns))
    path.write_text("\n".join(lines) + "\n")


TRACE_COLUMNS = ["seed", "scheme", "A_over_lambda", "iteration", "wsr",
                 "surrogate", "sca_rounds", "ascent_steps"]
MATCHING_COLUMNS = ["seed", "A_over_lambda", "N", "method", "total_distance_m",
                    "reduction_pct"]
SUMMARY_COLUMNS = ["scheme", "A_over_lambda", "n_seeds", "wsr_mean", "wsr_std"]
TIMING_COLUMNS = ["seed", "scheme", "A_over_lambda", "wall_ms"]


def write_results(bundle: ResultsBundle, out_dir: str | Path,
                  binary_grids: bool = False) -> dict[str, Path]:
    """Serialize a bundle; identical bundles produce identical bytes (wall
    times live in timings.csv, excluded from the determinism contract)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["results"] = out / "results.csv"
    _write_csv(paths["results"], bundle.result_columns(), bundle.results_rows)
    paths["traces"] = out / "traces.csv"
    _write_csv(paths["traces"], TRACE_COLUMNS, bundle.trace_rows)
    paths["matching"] = out / "matching.csv"
    _write_csv(paths["matching"], MATCHING_COLUMNS, bundle.matching_rows)
    paths["summary"] = out / "summary.csv"
    _write_csv(paths["summary"], SUMMARY_COLUMNS, bundle.summary_rows)
    paths["timings"] = out / "timings.csv"
    _write_csv(paths["timings"], TIMING_COLUMNS, bundle.timing_rows)

    for name, grid in bundle.grids:
        gpath = out / f"{name}.csv"
        lines = ["x,y,gain"]
        for iy in range(grid.y.size):
            for ix in range(grid.x.size):
                lines.append(
                    f"{_fmt(grid.x[ix])},{_fmt(grid.y[iy])},{_fmt(grid.gain[iy, ix])}"
                )
        gpath.write_text("\n".join(lines) + "\n")
        paths[name] = gpath
        if binary_grids:
            bpath = out / f"{name}.bin"
            with open(bpath, "wb") as fh:
                for iy in range(grid.y.size):
                    for ix in range(grid.x.size):
                        fh.write(struct.pack(
                            "<3d", grid.x[ix], grid.y[iy], grid.gain[iy, ix]
                        ))
            paths[f"{name}.bin"] = bpath

    for name, dump in bundle.channel_dumps.items():
        cpath = out / f"{name}.json"
        cpath.write_text(json.dumps(dump, sort_keys=True))
        paths[name] = cpath

    paths["config"] = out / "config_used.yaml"
    paths["config"].write_bytes(canonical_config_bytes(bundle.config))
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(bundle.manifest, indent=2,
                                            sort_keys=True) + "\n")
    return paths
