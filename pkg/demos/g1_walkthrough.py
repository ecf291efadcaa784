"""
A tiny pool, end to end
=======================

Seven vertices, two altruists.  We list every exchange, price chains under
zero duals and then let column generation pick the packing.
"""

from kepcg import solve_kep
from kepcg.exchange import enumerate_exchanges
from kepcg.graph import build_pricing_graph, prepare
from kepcg.instance import g1_fixture
from kepcg.pricing import solve_exact

inst = g1_fixture(k=3, l=4)
print("altruists:", sorted(inst.altruists), " pairs:", sorted(inst.pairs))

# every cycle with <= 3 pairs and every chain with <= 4 vertices
for e in enumerate_exchanges(inst):
    print(f"  {e.kind.value:5s} {e.vertices}  weight {e.weight:g}")

# with zero duals the cheapest pricing path is the longest chain
g = prepare(build_pricing_graph(inst, {v: 0.0 for v in inst.vertices}))
print("removed by preprocessing:", sorted(g.removed_vertices))
print("best chain under zero duals:", solve_exact(g).path)

sol, trace = solve_kep(inst)
print("objective", sol.objective, "upper bound", sol.upper_bound, sol.status.value)
for rec in trace.iterations:
    print(f"  it {rec.iteration}: lp {rec.rmp_value:.3f} via {rec.algo}, +{rec.columns_added} columns")
