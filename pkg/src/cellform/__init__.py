"""Exact integer programs for grouping parts and machines into manufacturing cells."""

from .analysis import (
    GroupingSolution,
    cost_breakdown,
    decode,
    movements,
    semantic_oracle,
    verify_solution,
)
from .formulations import (
    FormulationOptions,
    build,
    build_formulation_I,
    build_formulation_II,
    build_formulation_III,
    build_formulation_IV,
    build_phase1_aggregate,
    formulation_stats,
    linearize_products,
    rajamani_stats,
)
from .instance import (
    Instance,
    consecutive_pairs,
    derived_stats,
    load_instance,
    example_instance,
    parse_instance,
    render_instance,
    validate_instance,
)
from .milp import Model, SolverOptions, brute_force_model, relaxation_bound, solve_bb

__version__ = "0.1.0"
