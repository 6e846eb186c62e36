"""Outer layer: evaluate candidate antenna layouts and keep the best.

Each candidate layout gets a full inner-layer solve; candidates are
independent, so they can run on a process pool.  Every random draw derives
from the run seed and the candidate index, which keeps results identical for
any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import build_channels
from .config import AO_INIT_STREAM, CANDIDATE_STREAM
from .errors import InfeasibleLayoutError
from .geometry import (
    AntennaLayout,
    Scenario,
    full_aperture_layout,
    half_wavelength_layout,
    sample_layout,
)
from .metrics import DesignVariables, wsr
from .solver import OptimizationTrace, SolverOptions, alternating_optimize

SCHEMES = ("ma", "fpaf", "fpah")


@dataclass
class CandidateResult:
    """One evaluated layout: index, geometry, solution, and its objective."""

    index: int
    layout: AntennaLayout
    dv: DesignVariables
    wsr: float
    trace: OptimizationTrace


def evaluate_layout(
    scenario: Scenario,
    layout: AntennaLayout,
    opts: SolverOptions,
    ao_seed,
    index: int = 0,
) -> CandidateResult:
    """Run the inner optimizer on one layout and cross-check the objective."""
    sc = scenario.with_layout(layout)
    ch = build_channels(sc)
    dv, trace = alternating_optimize(None, ch, sc, opts=opts,
                                     rng=np.random.default_rng(ao_seed))
    recomputed = wsr(dv, ch, sc).wsr
    if abs(recomputed - trace.wsr_values[-1]) > 1e-9 * max(abs(recomputed), 1.0):
        raise AssertionError(
            f"objective round-trip mismatch: {recomputed} vs {trace.wsr_values[-1]}"
        )
    return CandidateResult(index=index, layout=layout, dv=dv, wsr=recomputed,
                           trace=trace)


def _candidate_task(args) -> tuple[int, CandidateResult | None]:
    scenario, opts, seed, index = args
    rng = np.random.default_rng([seed, CANDIDATE_STREAM, index])
    try:
        layout = sample_layout(
            scenario.region_t, scenario.region_r,
            scenario.layout.n_transmit, scenario.layout.n_receive,
            scenario.layout.min_spacing, rng,
        )
    except InfeasibleLayoutError:
        return index, None
    result = evaluate_layout(scenario, layout, opts,
                             [seed, AO_INIT_STREAM, index], index=index)
    return index, result


def random_position_search(
    scenario: Scenario,
    gamma: int,
    seed: int,
    opts: SolverOptions = SolverOptions(),
    threads: int = 1,
) -> tuple[CandidateResult, list[CandidateResult]]:
    """Evaluate ``gamma`` random layout pairs and return the best by WSR
    (lowest index wins exact ties) plus all evaluated candidates."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    tasks = [(scenario, opts, seed, i) for i in range(gamma)]
    if threads > 1 and gamma > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_candidate_task, tasks))
    else:
        outcomes = [_candidate_task(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])
    results = [res for _, res in outcomes if res is not None]
    if not results:
        raise InfeasibleLayoutError(
            f"all {gamma} candidate layouts were infeasible"
        )
    best = results[0]
    for cand in results[1:]:
        if cand.wsr > best.wsr:
            best = cand
    return best, results


def scheme_layout(scheme: str, scenario: Scenario) -> AntennaLayout:
    """Deterministic layout of a fixed-position baseline scheme."""
    n, m = scenario.layout.n_transmit, scenario.layout.n_receive
    spacing = scenario.layout.min_spacing
    if scheme == "fpaf":
        return full_aperture_layout(scenario.region_t, scenario.region_r, n, m, spacing)
    if scheme == "fpah":
        return half_wavelength_layout(
            scenario.wavelength, scenario.region_t, scenario.region_r, n, m, spacing
        )
    raise ValueError(f"no deterministic layout for scheme {scheme!r}")


def run_scheme(
    scheme: str,
    scenario: Scenario,
    gamma: int,
    seed: int,
    opts: SolverOptions = SolverOptions(),
    threads: int = 1,
) -> CandidateResult:
    """Movable-antenna search or a fixed-position baseline on one scenario."""
    scheme = scheme.lower()
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "ma":
        best, _ = random_position_search(scenario, gamma, seed, opts, threads)
        return best
    layout = scheme_layout(scheme, scenario)
    return evaluate_layout(scenario, layout, opts, [seed, AO_INIT_STREAM, 0])
