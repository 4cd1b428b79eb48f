"""Power-minimizing precoder and tiled-RIS configuration co-design."""

__version__ = "0.1.0"

from .ao import AoResult, initial_alpha, run_ao
from .channel import (ChannelSet, abg_pathloss_db, dump_channels, load_channels,
                      realize_channels, rician_link, spherical_phase)
from .errors import InfeasibleError, NumericalFailureError, ScenarioError
from .precoder import Precoder, check_binding, compute_sinr, solve_po
from .scenario import (Scenario, builtin_preset, load_scenario,
                       load_scenario_path, resolve_scenario, serialize_scenario)
from .tile_solver import (DualState, To2Workspace, alpha_star, build_workspace,
                          dual_function, grad_lambda, grad_mu, mse,
                          optimal_receivers, regularity_check, solve_to2)
from .tiles import (GcQuadratics, TileBasis, TileState, build_gc_quadratics,
                    design_basis, effective_channel, effective_channels,
                    effective_channel_projected, effective_channels_projected,
                    project_unit_circle, stack_cascaded)

__all__ = [
    "AoResult", "ChannelSet", "DualState", "GcQuadratics", "InfeasibleError",
    "NumericalFailureError", "Precoder", "Scenario", "ScenarioError",
    "TileBasis", "TileState", "To2Workspace", "abg_pathloss_db", "alpha_star",
    "build_gc_quadratics", "build_workspace", "builtin_preset", "check_binding",
    "compute_sinr", "design_basis", "dual_function", "dump_channels",
    "effective_channel", "effective_channel_projected", "effective_channels",
    "effective_channels_projected", "grad_lambda", "grad_mu", "initial_alpha",
    "load_channels", "load_scenario", "load_scenario_path", "mse",
    "optimal_receivers", "project_unit_circle", "realize_channels",
    "regularity_check", "resolve_scenario", "rician_link", "run_ao",
    "serialize_scenario", "solve_po", "solve_to2", "spherical_phase",
    "stack_cascaded",
]
