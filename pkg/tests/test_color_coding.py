import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factories import clustered_pricing, random_pricing, raw_pricing
from kepcg.errors import ParameterError
from kepcg.graph import build_pricing_graph, is_valid_path, path_cost, prepare
from kepcg.instance import g1_fixture
from kepcg.pricing import (
    Arrangement,
    ColoringPlan,
    ColoringStrategy,
    build_arrangement,
    color_vertices,
    colorful_dp,
    solve_color_coding,
    solve_exact,
    trial_count,
)
from kepcg.pricing.color_coding import arrangement_metrics, guarantee_holds, trial_rng
from oracles import all_paths


def test_trial_count_values():
    assert trial_count(0.99, 4) == 47
    assert trial_count(0.99, 2) == 7
    # independent arithmetic: smallest t with 1 - (1 - C!/C^C)^t >= rho
    for C in range(2, 8):
        p = math.factorial(C) / C ** C
        t = next(t for t in itertools.count(1) if 1 - (1 - p) ** t >= 0.99 - 1e-12)
        assert trial_count(0.99, C) == t
    with pytest.raises(ParameterError):
        trial_count(1.0, 4)


def test_plan_validation():
    with pytest.raises(ParameterError):
        ColoringPlan(colors=1).validate()
    with pytest.raises(ParameterError):
        ColoringPlan(colors=21).validate()
    with pytest.raises(ParameterError):
        ColoringPlan(rho=0.0).validate()


def test_perm_blocks_are_rainbow():
    order = tuple(range(23))
    arr = Arrangement(order, 0, 0)
    for shift in range(5):
        plan = ColoringPlan(colors=5, shift_offset=shift)
        col = color_vertices(plan, arr, trial_rng(3, shift))
        rotated = order[shift:] + order[:shift]
        for start in range(0, len(order), 5):
            block = [col[v] for v in rotated[start:start + 5]]
            assert len(set(block)) == len(block)
        assert set(col.values()) <= set(range(1, 6))


def test_uniform_coloring_range():
    arr = Arrangement(tuple(range(50)), 0, 0)
    col = color_vertices(ColoringPlan(ColoringStrategy.UNIFORM, colors=3), arr, trial_rng(0, 0))
    assert set(col.values()) == {1, 2, 3}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 10), st.integers(1, 6), st.integers(2, 6))
def test_colorful_dp_matches_filtered_brute_force(seed, n, L, C):
    g = prepare(raw_pricing(seed, n, L))
    if not g.vertices:
        return
    rng = np.random.default_rng(seed)
    coloring = {v: int(rng.integers(1, C + 1)) for v in g.vertices}
    colorful = [(p, c) for p, c in all_paths(g) if len({coloring[v] for v in p}) == len(p)]
    sol = colorful_dp(g, coloring)
    if not colorful:
        assert sol.path is None
        return
    assert sol.cost == pytest.approx(min(c for _, c in colorful), abs=1e-9)
    assert is_valid_path(g, sol.path)
    assert len({coloring[v] for v in sol.path}) == len(sol.path)
    assert path_cost(g, sol.path) == pytest.approx(sol.cost)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_color_coding_never_beats_oracle(seed):
    g = random_pricing(seed, max_vertices=18, max_l=6)
    opt = solve_exact(g).cost
    res = solve_color_coding(g, ColoringPlan(colors=g.L + 1 if g.L >= 1 else 2, seed=seed,
                                             max_trials=20), time_limit_s=5.0)
    assert res.best.cost >= opt - 1e-9
    if res.best.path is not None:
        assert is_valid_path(g, res.best.path)
    if res.first_negative is not None:
        assert res.first_negative.cost < 0
        assert res.best.cost <= res.first_negative.cost


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_arrangement_no_worse_than_identity(seed):
    g = random_pricing(seed, max_vertices=20, max_l=5)
    arr = build_arrangement(g, iter_budget=3000, seed=seed)
    assert sorted(arr.order) == sorted(g.vertices)
    ident, _ = arrangement_metrics(tuple(g.vertices), g.gamma)
    assert (arr.delta_sum, arr.delta_max) == arrangement_metrics(arr.order, g.gamma)
    assert arr.delta_sum <= ident


def test_arrangement_recovers_clusters():
    g = clustered_pricing(0, clusters=5, L=4)
    arr = build_arrangement(g)
    assert arr.delta_max <= 4


def test_guarantee_on_clustered_instance():
    g = clustered_pricing(1)
    arr = build_arrangement(g)
    plan = ColoringPlan(colors=5)
    assert guarantee_holds(plan, arr)
    res = solve_color_coding(g, plan, arr, time_limit_s=1e-9)
    assert res.proven_optimal and res.trials_run == 5
    assert res.best.cost == pytest.approx(solve_exact(g).cost)
    assert not guarantee_holds(ColoringPlan(ColoringStrategy.UNIFORM, colors=5), arr)
    assert not guarantee_holds(ColoringPlan(colors=5, shift_offset=1), arr)


def test_time_limit_runs_at_least_one_trial():
    g = random_pricing(11, max_vertices=20, max_l=7)
    res = solve_color_coding(g, ColoringPlan(colors=4), time_limit_s=1e-9)
    assert res.trials_run >= 1


def test_deterministic_per_seed():
    g = random_pricing(5, max_vertices=20, max_l=6)
    plan = ColoringPlan(colors=4, seed=9, max_trials=12)
    a = solve_color_coding(g, plan, time_limit_s=60, record_log=True)
    b = solve_color_coding(g, plan, time_limit_s=60, record_log=True)
    assert a.best == b.best and a.log == b.log


def test_g1_colors():
    g1 = g1_fixture()
    g = prepare(build_pricing_graph(g1, {v: 0.0 for v in g1.vertices}))
    res = solve_color_coding(g, ColoringPlan(colors=5), time_limit_s=1.0)
    assert res.best.path == (1, 3, 5, 7)
