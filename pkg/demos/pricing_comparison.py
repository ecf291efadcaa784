"""
Four ways to price a chain
==========================

Take the middle pricing graph of a real solve and hand it to the exact
search, local search, color coding and the ng-route relaxation.  The
first three return feasible chains (upper bounds on the optimum cost);
ng-route returns a lower bound.
"""

import time

from kepcg import CgConfig
from kepcg.cli import extract_pricing_instances
from kepcg.graph import prepare
from kepcg.instance import GeneratorParams, generate
from kepcg.pricing import (
    ColoringPlan,
    solve_color_coding,
    solve_exact,
    solve_local_search,
    solve_ng_dssr,
)

inst = generate(GeneratorParams(50, seed=3, l=5))
g = prepare(extract_pricing_instances(inst, CgConfig(cc_max_trials=6))["middle"])
print(f"{len(g.vertices)} vertices, {g.num_arcs} arcs, L={g.L}")


def timed(label, fn):
    t = time.perf_counter()
    out = fn()
    print(f"{label:14s} {time.perf_counter() - t:7.3f} s  ", end="")
    return out


opt = timed("exact", lambda: solve_exact(g, prune=True))
print(f"cost {opt.cost:+.4f}  {opt.path}")

first, best = timed("local search", lambda: solve_local_search(g, time_limit_s=0.5))
print(f"cost {best.cost:+.4f}, first negative {first.cost:+.4f}")

cc = timed("color coding", lambda: solve_color_coding(g, ColoringPlan(colors=g.L + 1), time_limit_s=1.0))
print(f"cost {cc.best.cost:+.4f} after {cc.trials_run} trials")

ng = timed("ng-route", lambda: solve_ng_dssr(g, g.alpha))
print(f"bound {ng.bound:+.4f}  elementary={ng.elementary}")
