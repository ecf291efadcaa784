"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
The desk-scale bench (criteria 7 and 10) takes several minutes.
"""

import math
import time

import numpy as np
import pytest

from factories import clustered_pricing, random_instance, random_pricing, raw_pricing
from kepcg.cg import CgConfig, solve_kep
from kepcg.cli import extract_pricing_instances, run_bench
from kepcg.errors import SizeLimitError
from kepcg.exchange import enumerate_exchanges
from kepcg.graph import prepare
from kepcg.instance import GeneratorParams, SolveStatus, g1_fixture, generate
from kepcg.master import lagrangian_ub
from kepcg.pricing import (
    Arrangement,
    ColoringPlan,
    DssrMode,
    NgConfig,
    build_arrangement,
    color_vertices,
    ng_dp,
    solve_color_coding,
    solve_exact,
    solve_ng_dssr,
    trial_count,
)
from kepcg.pricing.base import IMPROVING_TOL
from kepcg.pricing.color_coding import trial_rng
from oracles import all_paths, exchange_list, exhaustive_packing, rational_packing_lp


VERDICTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str):
    line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    VERDICTS.append(line)
    print("\n" + line)
    assert ok, f"criterion {number} failed: {detail}"


@pytest.fixture(scope="module")
def bench():
    t0 = time.perf_counter()
    report = run_bench(config=CgConfig(cc_time_limit_s=600.0))
    return report, time.perf_counter() - t0


def test_01_fixture_exactness():
    expected = {("cycle", (4, 6)), ("cycle", (5, 7, 6)),
                ("chain", (1, 3)), ("chain", (1, 3, 5)), ("chain", (1, 3, 5, 7)),
                ("chain", (2, 3)), ("chain", (2, 3, 5)), ("chain", (2, 3, 5, 7))}
    g1 = g1_fixture(k=3, l=4)
    t0 = time.perf_counter()
    got = enumerate_exchanges(g1)
    ms = (time.perf_counter() - t0) * 1000
    keys = {(e.kind.value, e.vertices) for e in got}
    ok = keys == expected and len(got) == 8 and ms < 10
    verdict(1, "fixture exactness", ok, f"{len(got)} exchanges, match={keys == expected}, {ms:.2f} ms")


def test_02_oracle_equivalence():
    t0 = time.perf_counter()
    bad = {"a": 0, "b": 0, "c": 0}
    n_inst = 220
    for seed in range(n_inst):
        g = random_pricing(10_000 + seed, max_vertices=20, max_l=7)
        opt = solve_exact(g, prune=True).cost
        every = frozenset(g.vertices)
        full = ng_dp(g, {v: every for v in g.vertices})
        if full.bound != opt:
            bad["a"] += 1
        lim = solve_ng_dssr(g, config=NgConfig(mode=DssrMode.LIMITED, lam=3, seed=seed))
        if lim.bound > opt + 1e-9:
            bad["b"] += 1
        if lim.solution.path is not None and lim.elementary and abs(lim.bound - min(opt, 0.0)) > 1e-9 \
                and abs(lim.bound - opt) > 1e-9:
            bad["b"] += 1
        cc = solve_color_coding(g, ColoringPlan(colors=max(2, g.L + 1), seed=seed, max_trials=10),
                                time_limit_s=60.0)
        if cc.best.cost < opt - 1e-9:
            bad["c"] += 1
    secs = time.perf_counter() - t0
    ok = sum(bad.values()) == 0 and secs < 60
    verdict(2, "oracle equivalence", ok,
            f"{n_inst} instances, violations a={bad['a']} b={bad['b']} c={bad['c']}, {secs:.1f} s")


def test_03_arrangement_guarantee():
    hits = 0
    n_inst = 50
    details = []
    for seed in range(n_inst):
        L = 3 + seed % 4
        g = clustered_pricing(seed, clusters=3 + seed % 3, L=L)
        C = L + 1
        arr = build_arrangement(g, seed=seed)
        res = solve_color_coding(g, ColoringPlan(colors=C, seed=seed), arr, time_limit_s=1e-9)
        opt = solve_exact(g).cost
        good = (arr.delta_max < C and res.proven_optimal and res.trials_run == C
                and abs(res.best.cost - opt) <= 1e-9)
        hits += good
        if not good:
            details.append((seed, arr.delta_max, C, res.trials_run, res.best.cost, opt))
    verdict(3, "delta guarantee", hits == n_inst, f"{hits}/{n_inst} optimal in exactly C trials {details[:3]}")


def test_04_trial_count():
    a, b = trial_count(0.99, 4), trial_count(0.99, 2)
    # independent arithmetic: ln(0.01)/ln(1 - 24/256) = 46.8..., ln(0.01)/ln(1/2) = 6.64...
    ra = math.ceil(math.log(0.01) / math.log(1 - 24 / 256))
    rb = math.ceil(math.log(0.01) / math.log(0.5))
    ok = (a, b) == (47, 7) == (ra, rb)
    verdict(4, "trial-count formula", ok, f"trial_count(0.99,4)={a}, trial_count(0.99,2)={b}")


def test_05_sign_property():
    total, agree_cc, agree_ng, skipped = 0, 0, 0, 0
    misses = []
    for seed in range(1, 11):
        l = (4, 7)[seed % 2]
        inst = generate(GeneratorParams(50, seed=seed, l=l))
        picked = extract_pricing_instances(inst, CgConfig(cc_time_limit_s=600.0))
        for tag in ("first", "middle"):
            g = prepare(picked[tag])
            try:
                opt = solve_exact(g, node_budget=3_000_000, prune=True).cost
            except SizeLimitError:
                skipped += 1
                continue
            total += 1
            neg = opt < -IMPROVING_TOL
            cc = solve_color_coding(g, ColoringPlan(colors=g.L + 1, seed=seed), time_limit_s=1.0)
            ng = solve_ng_dssr(g, g.alpha)
            cc_ok = (cc.best.cost < -IMPROVING_TOL) == neg
            ng_ok = (ng.bound < -IMPROVING_TOL) == neg
            agree_cc += cc_ok
            agree_ng += ng_ok
            if not (cc_ok and ng_ok):
                misses.append((seed, tag, opt, cc.best.cost, ng.bound))
    ok = total > 0 and agree_cc == total and agree_ng == total
    verdict(5, "sign property", ok, f"cc {agree_cc}/{total}, ng {agree_ng}/{total}, "
                                    f"oracle-unsolvable {skipped} {misses[:3]}")


def test_06_cg_correctness():
    n_inst, checked, violations = 50, 0, []
    for seed in range(n_inst):
        rng = np.random.default_rng(seed)
        n_alt = int(rng.integers(1, 4))
        n_pairs = int(rng.integers(6, 21 - n_alt))
        inst = random_instance(20_000 + seed, n_pairs, n_alt, float(rng.uniform(0.1, 0.3)),
                               k=3, l=int(rng.integers(2, 6)), unit=bool(seed % 2))
        sol, _ = solve_kep(inst, CgConfig(cc_time_limit_s=600.0, cc_max_trials=8, seed=seed))
        cols = exchange_list(inst)
        full = float(rational_packing_lp(cols, inst.vertices))
        best = exhaustive_packing(cols, inst.vertices)
        if sol.status is SolveStatus.OPTIMAL_LP:
            checked += 1
            if abs(sol.upper_bound - full) > 1e-6 or abs(sol.objective - best) > 1e-6:
                violations.append((seed, sol.upper_bound, full, sol.objective, best))
    ok = not violations and checked > 0
    verdict(6, "CG correctness", ok, f"{checked}/{n_inst} ended OptimalLP, violations {violations[:3]}")


def test_07_bench_gap(bench):
    report, secs = bench
    agg = report.aggregates
    n = agg["instances"]
    zero_frac = agg["gap_zero"] / n
    ok = n == 30 and agg["mean_gap"] <= 0.01 and zero_frac >= 0.8 and secs < 1800
    verdict(7, "desk-scale gap", ok,
            f"{n} instances, mean gap {agg['mean_gap']:.4%}, gap=0 on {agg['gap_zero']}/{n}, {secs:.0f} s")


def test_08_preprocessing_safety():
    violations, paths_seen = 0, 0
    for seed in range(500):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 26))
        L = int(rng.integers(1, 7))
        g = raw_pricing(30_000 + seed, n, L, density=float(rng.uniform(0.03, 0.15)))
        pg = prepare(g)
        for path, _ in all_paths(g):
            paths_seen += 1
            if any(v in pg.removed_vertices for v in path) or \
                    any((u, v) in pg.removed_arcs for u, v in zip(path, path[1:])):
                violations += 1
    verdict(8, "preprocessing safety", violations == 0,
            f"500 instances, {paths_seen} oracle paths, {violations} violations")


def test_09_perm_statistics():
    n, C, reps = 30, 5, 10_000
    arr = Arrangement(tuple(range(n)), 0, 0)
    plan = ColoringPlan(colors=C)
    collisions = 0
    cross_same = cross_total = 0
    boundary_same = 0
    for t in range(reps):
        col = color_vertices(plan, arr, trial_rng(12345, t))
        arr_col = np.array([col[v] for v in range(n)])
        blocks = arr_col.reshape(-1, C)
        collisions += sum(len(set(b)) != len(b) for b in blocks)
        same = arr_col[:, None] == arr_col[None, :]
        block_id = np.arange(n) // C
        cross = block_id[:, None] < block_id[None, :]
        cross_same += int(same[cross].sum())
        cross_total += int(cross.sum())
        # the pair straddling the first interval boundary
        boundary_same += int(arr_col[C - 1] == arr_col[C])
    p = 1 / C
    pooled = cross_same / cross_total
    pooled_sigma = math.sqrt(p * (1 - p) / cross_total)
    pair = boundary_same / reps
    pair_sigma = math.sqrt(p * (1 - p) / reps)
    ok = (collisions == 0 and abs(pooled - p) <= 3 * pooled_sigma
          and abs(pair - p) <= 3 * pair_sigma)
    verdict(9, "PERM statistics", ok,
            f"collisions {collisions}, cross-interval freq {pooled:.4f}, "
            f"boundary pair {pair:.4f} (p={p}, 3sigma={3 * pair_sigma:.4f})")


def test_10_bound_sandwich(bench):
    report, _ = bench
    bench_bad = [r["key"] for r in report.rows if r["ip_lb"] > r["lp_ub"] + 1e-6]
    lag_bad, checks = [], 0
    for seed in range(30):
        inst = random_instance(40_000 + seed, 10 + seed % 8, 1 + seed % 3, 0.25, k=3, l=3 + seed % 3)
        cols = exchange_list(inst)
        full = float(rational_packing_lp(cols, inst.vertices))
        duals_seen = []
        sol, trace = solve_kep(inst, CgConfig(cc_time_limit_s=600.0, cc_max_trials=4),
                               on_pricing=lambda it, g: duals_seen.append(dict(g.alpha)))
        for rec, duals in zip(trace.iterations, duals_seen):
            max_rc = max(w - sum(duals[v] for v in vs) for vs, w in cols)
            checks += 1
            if lagrangian_ub(rec.rmp_value, max_rc, inst.num_vertices) < full - 1e-6:
                lag_bad.append((seed, rec.iteration))
        if sol.upper_bound < full - 1e-6 or sol.objective > sol.upper_bound + 1e-6:
            lag_bad.append((seed, "final"))
    ok = not bench_bad and not lag_bad
    verdict(10, "bound sandwich", ok,
            f"bench violations {len(bench_bad)}/{len(report.rows)}, "
            f"lagrangian checks {checks} with {len(lag_bad)} violations")
