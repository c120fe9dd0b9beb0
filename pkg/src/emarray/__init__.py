"""Multiuser beamforming and antenna selection for electronically movable arrays.

Library layout:

- ``geometry``     candidate grids, steering vectors, channel synthesis
- ``constraints``  selection feasibility (count, spacing, panel membership)
- ``wmmse``        fixed-selection sum-rate maximization
- ``selection``    penalty-based two-loop joint beamforming + selection
- ``refine``       coordinate-descent swap refinement
- ``movable``      continuous-position benchmark (alternating optimization)
- ``powerloss``    grid-quantization power-loss analysis and Monte Carlo check
- ``experiments``  sweep harness, CSV output; ``cli`` exposes it as a command
"""

from .geometry import (
    PC, FC, FPA, ArrayConfig, ChannelPath, ChannelSet,
    build_grid, channel_from_paths, draw_paths, fpa_config,
    load_channels, save_channels, steering_vector, synthesize_channels,
)
from .constraints import (
    ConstraintBundle, SelectionVector,
    build_bundle, enumerate_feasible, is_feasible, min_index_gap,
)
from .wmmse import (
    AuxiliaryState, BeamformerMatrix,
    mse_terms, sum_rate, update_f, update_u, update_v, wmmse_solve,
)
from .selection import (
    PenaltyState, QpSubproblem,
    assemble_qp, penalty_objective, solve_selection_qp, two_loop_select,
)
from .refine import SwapState, refine, swap_step
from .movable import (
    BarrierState, MmaLayout, Rect,
    alternating_optimize, grid_init, optimize_positions,
    position_channel, position_gradient,
)
from .powerloss import (
    PowerLossReport, QuantizationSpec,
    dirichlet_kernel, interval_for_kappa, kappa_db_bandwidth,
    max_power_loss, monte_carlo_validation,
)
from .experiments import ExperimentConfig, ResultRow, emit_csv, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
