"""Solvers for the elementary minimum-cost path problem with a length limit."""

from kepcg.pricing.base import IMPROVING_TOL, EmpplcSolution, SolutionKind
from kepcg.pricing.exact import enumerate_paths_within, solve_exact, solve_held_karp
from kepcg.pricing.local_search import solve_local_search
from kepcg.pricing.color_coding import (
    Arrangement,
    ColoringPlan,
    ColoringStrategy,
    build_arrangement,
    color_vertices,
    colorful_dp,
    solve_color_coding,
    trial_count,
)
from kepcg.pricing.ngroute import (
    DssrMode,
    NgConfig,
    NgConstruction,
    NgSets,
    build_ng_sets,
    ng_dp,
    project_memory,
    solve_ng_dssr,
)

__all__ = [
    "IMPROVING_TOL", "EmpplcSolution", "SolutionKind",
    "enumerate_paths_within", "solve_exact", "solve_held_karp", "solve_local_search",
    "Arrangement", "ColoringPlan", "ColoringStrategy", "build_arrangement",
    "color_vertices", "colorful_dp", "solve_color_coding", "trial_count",
    "DssrMode", "NgConfig", "NgConstruction", "NgSets", "build_ng_sets",
    "ng_dp", "project_memory", "solve_ng_dssr",
]
