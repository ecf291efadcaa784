"""Local-search heuristic for EMPPLC.

Neighborhood: insert, remove or exchange a run of up to three consecutive
vertices.  The search is first-improvement and restarts greedily from a
random altruist whenever it reaches a local optimum.
"""

from __future__ import annotations

import time

import numpy as np

from kepcg.graph import SOURCE, PricingGraph, path_cost
from kepcg.pricing.base import IMPROVING_TOL, EmpplcSolution, SolutionKind, lex_better

MAX_RUN = 3


def _greedy_from(g: PricingGraph, start: int) -> list[int]:
    path = [start]
    on = {start}
    while len(path) < g.L:
        options = [(c, v) for v, c in g.arcs[path[-1]].items() if v not in on and c < 0]
        if not options:
            break
        _, v = min(options)
        path.append(v)
        on.add(v)
    return path


def _runs(g: PricingGraph, prev: int, k: int, forbidden: set[int], end: int | None):
    """Vertex runs ``q_1..q_k`` with arcs ``prev->q_1->...->q_k(->end)``.

    Yields ``(run, cost)`` where cost covers every arc of the detour.
    """
    first = g.source_arcs if prev == SOURCE else g.arcs[prev]
    stack = [((v,), c) for v, c in sorted(first.items(), reverse=True) if v not in forbidden]
    while stack:
        run, cost = stack.pop()
        last = run[-1]
        if len(run) == k:
            if end is None:
                yield run, cost
            elif end in g.arcs[last]:
                yield run, cost + g.arcs[last][end]
            continue
        for v, c in sorted(g.arcs[last].items(), reverse=True):
            if v not in forbidden and v not in run and v != end:
                stack.append((run + (v,), cost + c))


def _arc(g: PricingGraph, u: int, v: int) -> float | None:
    nbrs = g.source_arcs if u == SOURCE else g.arcs[u]
    return nbrs.get(v)


def _improve(g: PricingGraph, path: list[int], cost: float) -> tuple[list[int], float] | None:
    """First improving neighbor of ``path``, or None at a local optimum."""
    n = len(path)
    on = set(path)
    ext = [SOURCE] + path
    # removal of path[p:p+k]
    for p in range(n):
        for k in range(1, MAX_RUN + 1):
            if p + k > n or (p == 0 and k == n):
                continue
            prev, nxt = ext[p], (path[p + k] if p + k < n else None)
            if p == 0 and nxt not in g.source_arcs:
                continue
            old = sum(_arc(g, a, b) for a, b in zip(ext[p:p + k + 1], ext[p + 1:p + k + 2]))
            if nxt is None:
                new = 0.0
            else:
                bridge = _arc(g, prev, nxt)
                if bridge is None:
                    continue
                new = bridge
            if new - old < -1e-12:
                return path[:p] + path[p + k:], cost + new - old
    # insertion before path[p] (p == n appends)
    for p in range(n + 1):
        prev, nxt = ext[p], (path[p] if p < n else None)
        old = _arc(g, prev, nxt) if nxt is not None else 0.0
        for k in range(1, min(MAX_RUN, g.L - n) + 1):
            for run, detour in _runs(g, prev, k, on, nxt):
                if detour - old < -1e-12:
                    return path[:p] + list(run) + path[p:], cost + detour - old
    # exchange of path[p:p+k] for a fresh run of the same size
    for p in range(n):
        for k in range(1, MAX_RUN + 1):
            if p + k > n:
                continue
            prev, nxt = ext[p], (path[p + k] if p + k < n else None)
            seg = path[p:p + k]
            old = sum(_arc(g, a, b) for a, b in zip(ext[p:p + k + 1], ext[p + 1:p + k + 1]))
            if nxt is not None:
                old += g.arcs[seg[-1]][nxt]
            keep = on.difference(seg)
            for run, detour in _runs(g, prev, k, keep, nxt):
                if detour - old < -1e-12:
                    return path[:p] + list(run) + path[p + k:], cost + detour - old
    return None


def solve_local_search(g: PricingGraph, time_limit_s: float = 1.0, seed: int = 0,
                       max_restarts: int | None = None):
    """Run the local search; returns ``(first_negative, best)``.

    ``first_negative`` is the first path of negative cost met; when none is
    found it is the best path, as both then describe the same answer.
    """
    if time_limit_s <= 0:
        raise ValueError("time_limit_s must be positive")
    empty = EmpplcSolution(None, 0.0, SolutionKind.HEURISTIC)
    if not g.source_arcs:
        return empty, empty
    rng = np.random.default_rng(seed)
    deadline = time.perf_counter() + time_limit_s
    altruists = sorted(g.source_arcs)

    best_cost, best_path = float("inf"), None
    first_neg = None
    start = min(altruists, key=lambda u: (g.source_arcs[u], u))
    restarts = 0
    while True:
        path = _greedy_from(g, start)
        cost = path_cost(g, path)
        while True:
            if lex_better(cost, path, best_cost, best_path):
                best_cost, best_path = cost, tuple(path)
            if first_neg is None and cost < -IMPROVING_TOL:
                first_neg = (tuple(path), cost)
            if time.perf_counter() >= deadline:
                break
            step = _improve(g, path, cost)
            if step is None:
                break
            path, cost = step
        restarts += 1
        if time.perf_counter() >= deadline or (max_restarts is not None and restarts > max_restarts):
            break
        start = altruists[int(rng.integers(len(altruists)))]

    # recompute to shed accumulated rounding from incremental updates
    best = EmpplcSolution(best_path, path_cost(g, best_path), SolutionKind.HEURISTIC)
    if first_neg is None:
        return best, best
    return EmpplcSolution(first_neg[0], path_cost(g, first_neg[0]), SolutionKind.HEURISTIC), best
