"""Configuration ingestion and scenario construction.

All dB/dBm quantities live only in the config file; everything downstream is
linear SI units (field amplitudes, watts).  Loss coefficients given in dB are
power ratios, so the stored amplitude is 10^(dB/20).
"""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .channels import usw_path_loss
from .errors import ConfigError
from .geometry import (
    AntennaLayout,
    MovingRegion,
    Scenario,
    make_region_pair,
    sample_layout,
)
from .solver import SolverOptions

# Independent seed streams, so placement never depends on the layout draw.
PLACEMENT_STREAM = 101
INIT_LAYOUT_STREAM = 202
CANDIDATE_STREAM = 303
AO_INIT_STREAM = 404

DEFAULT_CONFIG: dict = {
    "wavelength_m": 0.01,
    "region_side_lambda": 100.0,
    "region_gap_lambda": 10.0,
    "min_spacing_lambda": 0.5,
    "n_transmit": 8,
    "n_receive": 8,
    "n_targets": 2,
    "n_ul": 2,
    "n_dl": 2,
    "si_db": -100.0,
    "target_rt_db": -50.0,
    "p_dl_max_dbm": 40.0,
    "p_ul_max_dbm": 10.0,
    "noise_bs_dbm": -70.0,
    "noise_dl_dbm": -70.0,
    "gamma": 100,
    "attempt_cap": 1_000_000,
    "placement": {
        "distance_min_m": 25.0,
        "distance_max_m": 30.0,
        "height_m": -15.0,
        "explicit": None,  # optional {targets: [[x,y,z],..], ul: [..], dl: [..]}
    },
    "weights": "equal",
    "sweep": {
        "schemes": ["ma", "fpaf", "fpah"],
        "a_over_lambda": [5.0, 30.0, 100.0],
    },
    "apm": {
        "methods": ["greedy", "exhaustive", "identity", "optimal"],
    },
    "beampattern": {
        "scheme": "ma",  # ma | fpaf | fpah
        "focus": "targets",  # or explicit [[x, y, z], ...]
        "grid": {
            "x_min": -15.0, "x_max": 15.0,
            "y_min": 10.0, "y_max": 32.0,
            "z": -15.0, "nx": 256, "ny": 256,
        },
    },
    "solver": {
        "sca_tol": 1e-3,
        "sca_max_rounds": 100,
        "ao_tol": 1e-3,
        "ao_max_iters": 100,
        "pga_max_steps": 2000,
        "pga_grad_tol_factor": 1e-6,
        "pga_stall_rounds": 0,
        "armijo_start": 1.0,
        "armijo_shrink": 0.5,
        "armijo_slope": 1e-4,
        "armijo_growth": 2.0,
    },
}

_POSITIVE_KEYS = (
    "wavelength_m", "region_side_lambda", "region_gap_lambda",
    "min_spacing_lambda",
)
_COUNT_KEYS = ("n_transmit", "n_receive", "n_targets", "n_ul", "n_dl", "gamma")


def db_to_amplitude(db: float) -> float:
    """Linear field amplitude of a power ratio given in dB."""
    return 10.0 ** (db / 20.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def load_config(path: str | Path | None) -> dict:
    """Read a YAML config and merge it over the defaults."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"top level of {path} must be a mapping")
    _merge(cfg, user, path)
    validate_config(cfg)
    return cfg


def _merge(base: dict, user: dict, path) -> None:
    for key, value in user.items():
        if key not in base:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, path)
        else:
            base[key] = value


def apply_override(cfg: dict, dotted_key: str, raw_value: str) -> None:
    """Apply a ``--set section.key=value`` style override in place."""
    node = cfg
    parts = dotted_key.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config key {dotted_key!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config key {dotted_key!r}")
    current = node[leaf]
    try:
        if isinstance(current, bool):
            value = raw_value.lower() in ("1", "true", "yes")
        elif isinstance(current, int) and not isinstance(current, bool):
            value = int(raw_value)
        elif isinstance(current, float):
            value = float(raw_value)
        elif isinstance(current, str) or current is None:
            value = yaml.safe_load(raw_value)
        else:
            value = yaml.safe_load(raw_value)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse override {dotted_key}={raw_value!r}: {exc}")
    node[leaf] = value
    validate_config(cfg)


def validate_config(cfg: dict) -> None:
    for key in _POSITIVE_KEYS:
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            raise ConfigError(f"{key} must be a positive number, got {cfg[key]!r}")
    for key in _COUNT_KEYS:
        floor = 0 if key in ("n_targets", "n_ul", "n_dl") else 1
        if not (isinstance(cfg[key], int) and cfg[key] >= floor):
            raise ConfigError(f"{key} must be an integer >= {floor}, got {cfg[key]!r}")
    if cfg["si_db"] >= 0:
        raise ConfigError("si_db must be negative (a loss)")
    pl = cfg["placement"]
    if not (0 < pl["distance_min_m"] <= pl["distance_max_m"]):
        raise ConfigError("placement distances must satisfy 0 < min <= max")
    w = cfg["weights"]
    if w != "equal":
        if not isinstance(w, dict) or set(w) != {"targets", "ul", "dl"}:
            raise ConfigError("weights must be 'equal' or a {targets, ul, dl} mapping")
        total = sum(w["targets"]) + sum(w["ul"]) + sum(w["dl"])
        if any(x < 0 for part in w.values() for x in part):
            raise ConfigError("weights must be nonnegative")
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1, got {total}")


def solver_options(cfg: dict) -> SolverOptions:
    return SolverOptions(**cfg["solver"])


def regions(cfg: dict) -> tuple[MovingRegion, MovingRegion]:
    lam = cfg["wavelength_m"]
    return make_region_pair(
        side_length=cfg["region_side_lambda"] * lam,
        gap=cfg["region_gap_lambda"] * lam,
    )


def _sample_nodes(cfg: dict, rng: np.random.Generator, count: int) -> np.ndarray:
    """Node positions on the ground semicircle in front of the arrays."""
    pl = cfg["placement"]
    out = np.zeros((count, 3))
    for i in range(count):
        d = rng.uniform(pl["distance_min_m"], pl["distance_max_m"])
        theta = rng.uniform(0.0, np.pi)
        out[i] = [d * np.cos(theta), d * np.sin(theta), pl["height_m"]]
    return out


def build_scenario(
    cfg: dict, seed: int, layout: AntennaLayout | None = None
) -> Scenario:
    """Deterministic scenario realization for one seed.

    Node placement and the initial antenna layout come from independent seed
    streams, so the placement is identical across region sizes and layout
    schemes for the same seed.
    """
    lam = cfg["wavelength_m"]
    region_t, region_r = regions(cfg)
    spacing = cfg["min_spacing_lambda"] * lam

    place_rng = np.random.default_rng([seed, PLACEMENT_STREAM])
    explicit = cfg["placement"].get("explicit")
    if explicit:
        q_targets = np.asarray(explicit["targets"], dtype=float).reshape(-1, 3)
        q_ul = np.asarray(explicit["ul"], dtype=float).reshape(-1, 3)
        q_dl = np.asarray(explicit["dl"], dtype=float).reshape(-1, 3)
    else:
        q_targets = _sample_nodes(cfg, place_rng, cfg["n_targets"])
        q_ul = _sample_nodes(cfg, place_rng, cfg["n_ul"])
        q_dl = _sample_nodes(cfg, place_rng, cfg["n_dl"])
    L, J, K = q_targets.shape[0], q_ul.shape[0], q_dl.shape[0]

    if layout is None:
        layout = sample_layout(
            region_t, region_r, cfg["n_transmit"], cfg["n_receive"], spacing,
            np.random.default_rng([seed, INIT_LAYOUT_STREAM]),
            attempt_cap=cfg["attempt_cap"],
        )

    rho_ul = np.array([usw_path_loss(np.linalg.norm(q), lam) for q in q_ul])
    rho_dl = np.array([usw_path_loss(np.linalg.norm(q), lam) for q in q_dl])
    rho_targets = np.full(L, db_to_amplitude(cfg["target_rt_db"]))

    if cfg["weights"] == "equal":
        total = max(L + J + K, 1)
        w_t = np.full(L, 1.0 / total)
        w_u = np.full(J, 1.0 / total)
        w_d = np.full(K, 1.0 / total)
    else:
        w = cfg["weights"]
        w_t = np.asarray(w["targets"], dtype=float)
        w_u = np.asarray(w["ul"], dtype=float)
        w_d = np.asarray(w["dl"], dtype=float)

    return Scenario(
        wavelength=lam,
        region_t=region_t,
        region_r=region_r,
        layout=layout,
        q_ul=q_ul.reshape(J, 3),
        q_dl=q_dl.reshape(K, 3),
        q_targets=q_targets.reshape(L, 3),
        rho_ul=rho_ul,
        rho_dl=rho_dl,
        rho_targets=rho_targets,
        rho_si=db_to_amplitude(cfg["si_db"]),
        noise_bs=dbm_to_watts(cfg["noise_bs_dbm"]),
        noise_dl=np.full(K, dbm_to_watts(cfg["noise_dl_dbm"])),
        p_dl_max=dbm_to_watts(cfg["p_dl_max_dbm"]),
        p_ul_max=dbm_to_watts(cfg["p_ul_max_dbm"]),
        weight_targets=w_t,
        weight_ul=w_u,
        weight_dl=w_d,
    )
