"""Movable-antenna near-field ISAC simulator."""

from .channels import ChannelSet, build_channels, response_vector, usw_path_loss
from .config import DEFAULT_CONFIG, build_scenario, load_config, solver_options
from .geometry import (
    AntennaLayout,
    MovingRegion,
    Scenario,
    full_aperture_layout,
    half_wavelength_layout,
    make_region_pair,
    rayleigh_distance,
    sample_layout,
)
from .metrics import DesignVariables, RateReport, transmit_covariance, wsr
from .solver import (
    OptimizationTrace,
    SolverOptions,
    alternating_optimize,
    extract_rank1,
    optimal_rx_beamformers,
    solve_sca_subproblem,
    surrogate_eval,
    surrogate_gradients,
)

__version__ = "0.1.0"
