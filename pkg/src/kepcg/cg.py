"""Column generation for the exchange formulation with chain pricing.

All cycles are enumerated up front.  Each iteration solves the restricted
master LP, then prices chains: color coding first (a time-boxed feasible
search), and the ng-route relaxation when color coding finds nothing.  The
loop stops when the relaxation proves that no chain has a positive reduced
cost, and a restricted integer program over the generated columns gives
the final packing.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

from kepcg.errors import SizeLimitError
from kepcg.exchange import Exchange, enumerate_cycles, expand_subpaths, make_chain
from kepcg.graph import PricingGraph, build_pricing_graph, prepare, reprice
from kepcg.instance import CompatibilityInstance, KepSolution, SolveStatus
from kepcg.master import (
    RestrictedMaster,
    is_integral,
    lagrangian_ub,
    solve_restricted_ip,
    solve_rmp,
)
from kepcg.pricing.base import IMPROVING_TOL
from kepcg.pricing.color_coding import (
    ColoringPlan,
    ColoringStrategy,
    build_arrangement,
    solve_color_coding,
)
from kepcg.pricing.exact import enumerate_paths_within
from kepcg.pricing.ngroute import DssrMode, NgConfig, solve_ng_dssr

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CgConfig:
    """Knobs of the column-generation loop.

    ``colors`` defaults to ``L + 1``.  ``cc_max_trials`` replaces the
    time budget of color coding with a trial budget, which makes a whole
    solve reproducible.  With ``cc_stop_on_negative`` color coding returns
    after the first complete shift round that found an improving chain.
    ``close_gap`` enumerates, after a certified LP, every chain whose
    reduced cost leaves room to beat the restricted IP, and re-solves it.
    """

    cc_time_limit_s: float = 1.0
    cc_max_trials: int | None = None
    cc_stop_on_negative: bool = True
    colors: int | None = None
    strategy: ColoringStrategy = ColoringStrategy.PERM
    rho: float = 0.99
    seed: int = 0
    arrangement_budget: int = 200_000
    ng: NgConfig = field(default_factory=NgConfig)
    subpath_expansion: bool = True
    escalate_unlimited: bool = True
    total_time_limit_s: float = 3600.0
    ip_time_limit_s: float = 600.0
    close_gap: bool = True
    gap_enum_budget: int = 2_000_000

    def validate(self):
        for name in ("cc_time_limit_s", "total_time_limit_s", "ip_time_limit_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.arrangement_budget <= 0:
            raise ValueError("arrangement_budget must be positive")


@dataclass
class IterationRecord:
    iteration: int
    rmp_value: float
    algo: str
    best_cost: float | None
    columns_added: int
    pool_size: int
    elapsed_s: float
    note: str = ""


@dataclass
class CgTrace:
    iterations: list[IterationRecord] = field(default_factory=list)
    ng_calls: int = 0
    cc_trials: int = 0
    status: SolveStatus | None = None
    events: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ng_calls": self.ng_calls,
            "cc_trials": self.cc_trials,
            "status": None if self.status is None else self.status.value,
            "events": list(self.events),
            "iterations": [vars(r) for r in self.iterations],
        }


def add_column(master: RestrictedMaster, e: Exchange, expand: bool = True,
               inst: CompatibilityInstance | None = None) -> int:
    """Insert ``e`` (and its prefixes when ``expand`` and ``e`` is a chain).

    Returns how many columns were new; duplicates are skipped.
    """
    inst = inst or master.inst
    cols = expand_subpaths(e, inst) if expand and e.kind.value == "chain" else [e]
    return sum(master.add(c) for c in cols)


def _elementary_prefix(walk) -> tuple[int, ...]:
    seen = set()
    for k, v in enumerate(walk):
        if v in seen:
            return tuple(walk[:k])
        seen.add(v)
    return tuple(walk)


def _improving_prefix(inst, walk, duals) -> bool:
    if walk is None:
        return False
    prefix = _elementary_prefix(walk)
    if len(prefix) < 2:
        return False
    chain = make_chain(inst, prefix)
    return chain.weight - sum(duals[v] for v in prefix) > IMPROVING_TOL


def _close_gap(inst, master, g: PricingGraph, gap: float, budget: int, trace: CgTrace) -> int:
    # with certified duals, obj(x) <= z_lp + sum of rc over chosen columns,
    # so a packing beating the incumbent only uses columns with rc >= -gap
    try:
        paths = enumerate_paths_within(g, gap + 1e-6, budget)
    except SizeLimitError:
        trace.events.append("gap closing skipped: enumeration budget exceeded")
        return 0
    added = sum(master.add(make_chain(inst, p), validate=False) for p, _ in paths)
    trace.events.append(f"gap closing: {len(paths)} chains within {gap:.6g}, {added} new")
    return added


PricingHook = Callable[[int, PricingGraph], None]


def solve_kep(inst: CompatibilityInstance, config: CgConfig = CgConfig(),
              on_pricing: PricingHook | None = None) -> tuple[KepSolution, CgTrace]:
    """Solve the LP relaxation by column generation, then the restricted IP.

    ``on_pricing(iteration, graph)`` is called with every pricing graph,
    which is how pricing instances are extracted for offline study.
    """
    config.validate()
    t0 = time.perf_counter()
    trace = CgTrace()
    timings = {}
    master = RestrictedMaster(inst)
    for c in enumerate_cycles(inst):
        master.add(c, validate=False)
    timings["cycles"] = time.perf_counter() - t0
    n_vertices = inst.num_vertices

    base = None
    arrangement = None
    plan = None
    if inst.altruists and inst.l >= 2:
        t = time.perf_counter()
        base = prepare(build_pricing_graph(inst, {v: 0.0 for v in inst.vertices}))
        colors = config.colors or (inst.l + 1)
        plan = ColoringPlan(config.strategy, colors, 0, config.seed, config.rho, config.cc_max_trials)
        arrangement = build_arrangement(base, config.arrangement_budget, config.seed)
        timings["arrangement"] = time.perf_counter() - t

    status = SolveStatus.OPTIMAL_LP
    upper_bound = None
    lp = None
    iteration = 0
    t_lp = t_cc = t_ng = 0.0
    while True:
        t = time.perf_counter()
        lp = solve_rmp(master)
        t_lp += time.perf_counter() - t
        z_bar = lp.value
        if base is None:
            trace.events.append("no chain pricing: pool holds every exchange")
            upper_bound = z_bar
            trace.iterations.append(IterationRecord(iteration, z_bar, "none", None, 0, len(master),
                                                    time.perf_counter() - t0))
            break
        g = reprice(base, inst, lp.duals)
        if on_pricing is not None:
            on_pricing(iteration, g)

        if time.perf_counter() - t0 > config.total_time_limit_s:
            t = time.perf_counter()
            ng = solve_ng_dssr(g, lp.duals, config.ng)
            t_ng += time.perf_counter() - t
            trace.ng_calls += 1
            status = SolveStatus.TIME_LIMIT
            upper_bound = lagrangian_ub(z_bar, -ng.bound, n_vertices)
            trace.events.append(f"time limit at iteration {iteration}; ng bound {ng.bound:.6g}")
            trace.iterations.append(IterationRecord(iteration, z_bar, "ng", ng.bound, 0, len(master),
                                                    time.perf_counter() - t0, "time limit"))
            break

        t = time.perf_counter()
        cc = solve_color_coding(g, plan, arrangement, config.cc_time_limit_s,
                                stop_on_negative=config.cc_stop_on_negative)
        t_cc += time.perf_counter() - t
        trace.cc_trials += cc.trials_run
        if cc.best.is_negative and len(cc.best.path) >= 2:
            added = add_column(master, make_chain(inst, cc.best.path), config.subpath_expansion)
            if added:
                trace.iterations.append(IterationRecord(iteration, z_bar, "cc", cc.best.cost, added,
                                                        len(master), time.perf_counter() - t0))
                iteration += 1
                continue
            trace.events.append(f"iteration {iteration}: color-coding chain already pooled")

        t = time.perf_counter()
        ng = solve_ng_dssr(g, lp.duals, config.ng)
        t_ng += time.perf_counter() - t
        trace.ng_calls += 1
        sol = ng.solution
        if ng.bound >= -IMPROVING_TOL:
            upper_bound = z_bar
            trace.iterations.append(IterationRecord(iteration, z_bar, "ng", ng.bound, 0, len(master),
                                                    time.perf_counter() - t0, "certified"))
            break
        added = 0
        if (not sol.elementary and config.escalate_unlimited
                and config.ng.mode in (DssrMode.LIMITED, DssrMode.PREDEFINED)
                and not _improving_prefix(inst, sol.path, lp.duals)):
            # the limited descent stalled; unlimited memories always end elementary
            t = time.perf_counter()
            ng = solve_ng_dssr(g, lp.duals, replace(config.ng, mode=DssrMode.UNLIMITED))
            t_ng += time.perf_counter() - t
            trace.ng_calls += 1
            trace.events.append(f"iteration {iteration}: escalated to unlimited DSSR")
            sol = ng.solution
            if ng.bound >= -IMPROVING_TOL:
                upper_bound = z_bar
                trace.iterations.append(IterationRecord(iteration, z_bar, "ng", ng.bound, 0, len(master),
                                                        time.perf_counter() - t0, "certified"))
                break
        if sol.path is not None:
            candidate = sol.path if sol.elementary else _elementary_prefix(sol.path)
            if _improving_prefix(inst, candidate, lp.duals):
                added = add_column(master, make_chain(inst, candidate), config.subpath_expansion)
        if added:
            note = "" if sol.elementary else "elementary prefix of ng walk"
            trace.iterations.append(IterationRecord(iteration, z_bar, "ng", ng.bound, added,
                                                    len(master), time.perf_counter() - t0, note))
            iteration += 1
            continue
        # negative relaxed bound and nothing to add: the descent is exhausted
        status = SolveStatus.UPPER_BOUND_ONLY
        upper_bound = lagrangian_ub(z_bar, -ng.bound, n_vertices)
        trace.events.append(f"iteration {iteration}: ng walk {sol.path} non-elementary with "
                            f"bound {ng.bound:.6g} and no improving prefix")
        trace.iterations.append(IterationRecord(iteration, z_bar, "ng", ng.bound, 0, len(master),
                                                time.perf_counter() - t0, "unresolved"))
        break

    timings.update(lp=t_lp, color_coding=t_cc, ng=t_ng)
    t = time.perf_counter()
    if is_integral(lp.primal):
        chosen = [master.columns[c] for c in range(len(master)) if lp.primal[c] > 0.5]
        objective = float(sum(e.weight for e in chosen))
        ip_status = SolveStatus.OPTIMAL_LP
        nodes = 0
    else:
        ip = solve_restricted_ip(master, config.ip_time_limit_s, lp)
        chosen, objective, ip_status, nodes = ip.chosen, ip.objective, ip.status, ip.ip_nodes
        if ip_status is SolveStatus.TIME_LIMIT:
            trace.events.append("restricted IP hit its time limit")
    if (config.close_gap and status is SolveStatus.OPTIMAL_LP and base is not None
            and ip_status is not SolveStatus.TIME_LIMIT and upper_bound - objective > 1e-6):
        added = _close_gap(inst, master, reprice(base, inst, lp.duals), upper_bound - objective,
                           config.gap_enum_budget, trace)
        if added:
            ip = solve_restricted_ip(master, config.ip_time_limit_s)
            if ip.objective > objective:
                chosen, objective, nodes = ip.chosen, ip.objective, nodes + ip.ip_nodes
            if ip.status is SolveStatus.TIME_LIMIT:
                trace.events.append("restricted IP hit its time limit after gap closing")
    timings["ip"] = time.perf_counter() - t
    timings["total"] = time.perf_counter() - t0
    trace.status = status
    # the IP optimum over pooled columns never exceeds the LP bound
    upper_bound = max(upper_bound, objective)
    sol = KepSolution(chosen, objective, upper_bound, status, timings, ip_nodes=nodes)
    log.info("solve_kep: obj=%s ub=%s status=%s iterations=%d ng_calls=%d",
             objective, upper_bound, status.value, len(trace.iterations), trace.ng_calls)
    sol.pool = master
    return sol, trace
