"""Kidney-exchange clearing by column generation with chain pricing."""

from kepcg.cg import CgConfig, CgTrace, add_column, solve_kep
from kepcg.errors import (
    KepError,
    ParameterError,
    ParseError,
    SizeLimitError,
    SolverError,
    UnsupportedParameterError,
    ValidationError,
)
from kepcg.exchange import (
    Exchange,
    ExchangeKind,
    enumerate_chains,
    enumerate_cycles,
    enumerate_exchanges,
    expand_subpaths,
    reduced_cost,
)
from kepcg.graph import (
    PricingGraph,
    build_pricing_graph,
    compute_extended_sets,
    compute_hop_distances,
    load_pricing,
    prepare_pricing_graph,
    preprocess,
    save_pricing,
)
from kepcg.instance import (
    CompatibilityInstance,
    GeneratorParams,
    KepSolution,
    SolveStatus,
    g1_fixture,
    generate,
    load_instance,
    save_instance,
)
from kepcg.master import RestrictedMaster, lagrangian_ub, solve_restricted_ip, solve_rmp

__version__ = "0.1.0"
