"""Exact EMPPLC solvers used as ground truth.

``solve_exact`` enumerates elementary source paths depth-first in
lexicographic order.  ``solve_held_karp`` is an independent dynamic
program over (visited set, end vertex) states used to cross-check it.
"""

from __future__ import annotations

import math

from kepcg.errors import SizeLimitError
from kepcg.graph import PricingGraph
from kepcg.pricing.base import EmpplcSolution, SolutionKind

DEFAULT_NODE_BUDGET = 2_000_000


def walk_completion_bounds(g: PricingGraph) -> list[dict[int, float]]:
    """``lb[r][i]``: cheapest walk leaving ``i`` with at most ``r`` arcs.

    Walks may repeat vertices, so this under-estimates every elementary
    completion and is safe to prune with even when costs are negative.
    """
    lb = [{v: 0.0 for v in g.vertices}]
    for _ in range(g.L):
        prev = lb[-1]
        cur = {}
        for u in g.vertices:
            best = 0.0
            for v, c in g.arcs[u].items():
                if c + prev[v] < best:
                    best = c + prev[v]
            cur[u] = best
        lb.append(cur)
    return lb


def solve_exact(g: PricingGraph, node_budget: int = DEFAULT_NODE_BUDGET,
                prune: bool = False) -> EmpplcSolution:
    """Minimum-cost elementary source path with 1..L arcs.

    Ties go to the lexicographically smallest vertex list, which is the
    first one met in DFS order.  With ``prune=True`` a branch is cut when
    its cost plus a walk lower bound cannot beat the incumbent.  Raises
    :class:`SizeLimitError` once more than ``node_budget`` paths are visited.
    """
    L = g.L
    succ = {u: sorted(nbrs.items()) for u, nbrs in g.arcs.items()}
    lb = walk_completion_bounds(g) if prune else None
    best_cost = math.inf
    best_path: tuple[int, ...] | None = None
    visited = 0
    path: list[int] = []
    on_path: set[int] = set()

    def dfs(u: int, cost: float):
        nonlocal best_cost, best_path, visited
        visited += 1
        if visited > node_budget:
            raise SizeLimitError(f"exact EMPPLC search exceeded {node_budget} nodes")
        if cost < best_cost:
            best_cost, best_path = cost, tuple(path)
        remaining = L - len(path)
        if remaining == 0:
            return
        for v, c in succ[u]:
            if v in on_path:
                continue
            nc = cost + c
            if lb is not None and nc + lb[remaining - 1][v] >= best_cost:
                continue
            path.append(v)
            on_path.add(v)
            dfs(v, nc)
            path.pop()
            on_path.discard(v)

    for u, c in sorted(g.source_arcs.items()):
        if lb is not None and c + lb[L - 1][u] >= best_cost:
            continue
        path.append(u)
        on_path.add(u)
        dfs(u, c)
        path.pop()
        on_path.discard(u)

    if best_path is None:
        return EmpplcSolution(None, 0.0, SolutionKind.EXACT, is_proven_optimal=True)
    return EmpplcSolution(best_path, best_cost, SolutionKind.EXACT, is_proven_optimal=True)


def enumerate_paths_within(g: PricingGraph, max_cost: float,
                           node_budget: int = DEFAULT_NODE_BUDGET) -> list[tuple[tuple[int, ...], float]]:
    """Every elementary source path with at least two vertices and cost <= ``max_cost``.

    Branches are cut with the same walk bound as ``solve_exact``.  Raises
    :class:`SizeLimitError` past ``node_budget`` visited paths.
    """
    lb = walk_completion_bounds(g)
    succ = {u: sorted(nbrs.items()) for u, nbrs in g.arcs.items()}
    found = []
    visited = 0
    path: list[int] = []

    def dfs(u: int, cost: float):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise SizeLimitError(f"path enumeration exceeded {node_budget} nodes")
        if len(path) >= 2 and cost <= max_cost:
            found.append((tuple(path), cost))
        remaining = g.L - len(path)
        if remaining == 0:
            return
        for v, c in succ[u]:
            if v in path or cost + c + lb[remaining - 1][v] > max_cost:
                continue
            path.append(v)
            dfs(v, cost + c)
            path.pop()

    for u, c in sorted(g.source_arcs.items()):
        if c + lb[g.L - 1][u] > max_cost:
            continue
        path.append(u)
        dfs(u, c)
        path.pop()
    return found


def solve_held_karp(g: PricingGraph, state_budget: int = DEFAULT_NODE_BUDGET) -> EmpplcSolution:
    """Layered DP over ``(visited bitmask, end vertex)``.

    Exponential in the number of vertices; meant for small test graphs.
    """
    index = {v: i for i, v in enumerate(g.vertices)}
    # layer[(mask, end)] = (cost, previous state)
    layer = {(1 << index[u], u): (c, None) for u, c in g.source_arcs.items()}
    layers = [layer]
    n_states = len(layer)
    for _ in range(g.L - 1):
        nxt = {}
        for (mask, u), (cost, _) in layer.items():
            for v, c in g.arcs[u].items():
                bit = 1 << index[v]
                if mask & bit:
                    continue
                key = (mask | bit, v)
                nc = cost + c
                if key not in nxt or nc < nxt[key][0]:
                    nxt[key] = (nc, (mask, u))
        n_states += len(nxt)
        if n_states > state_budget:
            raise SizeLimitError(f"Held-Karp DP exceeded {state_budget} states")
        if not nxt:
            break
        layers.append(nxt)
        layer = nxt

    best = None
    for depth, lay in enumerate(layers):
        for key, (cost, _) in lay.items():
            if best is None or cost < best[0]:
                best = (cost, depth, key)
    if best is None:
        return EmpplcSolution(None, 0.0, SolutionKind.EXACT, is_proven_optimal=True)
    cost, depth, key = best
    path = []
    while key is not None:
        path.append(key[1])
        key = layers[depth][key][1]
        depth -= 1
    return EmpplcSolution(tuple(reversed(path)), cost, SolutionKind.EXACT, is_proven_optimal=True)
