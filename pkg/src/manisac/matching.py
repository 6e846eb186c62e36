"""Antenna position matching: pair each antenna's initial position with an
optimized destination to minimize total movement distance.

The production matcher is the greedy pass (antennas in index order, nearest
remaining destination).  An exhaustive permutation search serves as the small-
instance optimality oracle, and a polynomial-time optimal assignment (beyond
the greedy/exhaustive pair) is exposed for benchmarking larger instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ComplexityGuardError
from .geometry import AntennaLayout

EXHAUSTIVE_LIMIT = 9  # 9! ~ 3.6e5 permutations


def path_weight(v_init: np.ndarray, v_opt: np.ndarray) -> float:
    """Movement distance between an initial and a destination position."""
    return float(np.linalg.norm(np.asarray(v_init, float) - np.asarray(v_opt, float)))


@dataclass(frozen=True)
class MatchingPlan:
    """Destination permutation with per-antenna and total distances."""

    dest_index: np.ndarray  # dest_index[n] = index into the destination list
    distances: np.ndarray
    total_distance: float

    def __post_init__(self):
        idx = np.asarray(self.dest_index, dtype=int)
        if sorted(idx.tolist()) != list(range(idx.size)):
            raise ValueError("dest_index must be a permutation")
        object.__setattr__(self, "dest_index", idx)
        object.__setattr__(self, "distances", np.asarray(self.distances, float))


def _distance_matrix(init: np.ndarray, opt: np.ndarray) -> np.ndarray:
    init = np.atleast_2d(np.asarray(init, float))
    opt = np.atleast_2d(np.asarray(opt, float))
    if init.shape != opt.shape:
        raise ValueError(
            f"initial and optimized position counts differ: "
            f"{init.shape[0]} vs {opt.shape[0]}"
        )
    return np.linalg.norm(init[:, None, :] - opt[None, :, :], axis=-1)


def _plan_from_permutation(D: np.ndarray, perm: np.ndarray) -> MatchingPlan:
    dist = D[np.arange(D.shape[0]), perm]
    return MatchingPlan(dest_index=perm, distances=dist,
                        total_distance=float(dist.sum()))


def identity_match(init: np.ndarray, opt: np.ndarray) -> MatchingPlan:
    """Antenna n moves to destination n (the no-matching baseline)."""
    D = _distance_matrix(init, opt)
    return _plan_from_permutation(D, np.arange(D.shape[0]))


def greedy_match(init: np.ndarray, opt: np.ndarray) -> MatchingPlan:
    """Index-order greedy: each antenna takes the nearest destination still
    available; exact distance ties go to the lowest destination index."""
    D = _distance_matrix(init, opt)
    n = D.shape[0]
    available = np.ones(n, dtype=bool)
    perm = np.zeros(n, dtype=int)
    for i in range(n):
        row = np.where(available, D[i], np.inf)
        chosen = int(np.argmin(row))  # argmin takes the first (lowest) index on ties
        perm[i] = chosen
        available[chosen] = False
    return _plan_from_permutation(D, perm)


@lru_cache(maxsize=4)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=int)


def exhaustive_match(init: np.ndarray, opt: np.ndarray) -> MatchingPlan:
    """Global optimum by enumerating all pairings (guarded small instances)."""
    D = _distance_matrix(init, opt)
    n = D.shape[0]
    if n > EXHAUSTIVE_LIMIT:
        raise ComplexityGuardError(
            f"exhaustive matching caps at {EXHAUSTIVE_LIMIT} antennas, got {n}"
        )
    perms = _all_permutations(n)
    costs = D[np.arange(n)[None, :], perms].sum(axis=1)
    best = int(np.argmin(costs))  # first minimum: lexicographically smallest
    return _plan_from_permutation(D, perms[best])


def optimal_match(init: np.ndarray, opt: np.ndarray) -> MatchingPlan:
    """Polynomial-time optimal assignment; benchmarking reference for sizes
    beyond the exhaustive guard."""
    D = _distance_matrix(init, opt)
    rows, cols = linear_sum_assignment(D)
    perm = np.zeros(D.shape[0], dtype=int)
    perm[rows] = cols
    return _plan_from_permutation(D, perm)


_METHODS = {
    "greedy": greedy_match,
    "exhaustive": exhaustive_match,
    "identity": identity_match,
    "optimal": optimal_match,
}


def match_positions(init: np.ndarray, opt: np.ndarray, method: str) -> MatchingPlan:
    if method not in _METHODS:
        raise ValueError(f"unknown matching method {method!r}")
    return _METHODS[method](init, opt)


def apm_for_layouts(
    init: AntennaLayout, opt: AntennaLayout, method: str = "greedy"
) -> tuple[MatchingPlan, MatchingPlan]:
    """Match the transmit and receive arrays independently."""
    if init.n_transmit != opt.n_transmit or init.n_receive != opt.n_receive:
        raise ValueError("layouts must have matching antenna counts")
    plan_t = match_positions(init.transmit, opt.transmit, method)
    plan_r = match_positions(init.receive, opt.receive, method)
    return plan_t, plan_r
