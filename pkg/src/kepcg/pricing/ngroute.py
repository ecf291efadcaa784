"""ng-route relaxation of EMPPLC with decremental state-space relaxation.

A forward ng-path keeps a memory ``Pi`` of the vertices it may not revisit.
Extending a path ending with memory ``Pi'`` by vertex ``i`` is allowed when
``i`` is not in ``Pi'`` and yields memory ``(Pi' & eta_i) | {i}``, so a path
forgets every vertex missing from the ng-set of a vertex visited later.
Every elementary path is an ng-path, hence the cheapest ng-path is a lower
bound, and it is the optimum whenever it happens to be elementary.

DSSR starts from empty memories and grows them with the vertices that the
returned walk repeats.  Iterations alternate between the forward and the
backward program; the label costs of one direction serve as completion
bounds in the next, and labels that cannot complete below zero are dropped.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from kepcg.errors import ParameterError
from kepcg.graph import PricingGraph, compute_extended_sets
from kepcg.pricing.base import EmpplcSolution, SolutionKind

PRUNE_EPS = 1e-9


class NgConstruction(str, enum.Enum):
    UNIFORM = "uniform"
    DUAL = "dual"


class DssrMode(str, enum.Enum):
    NONE = "none"
    LIMITED = "limited"
    PREDEFINED = "predefined"
    UNLIMITED = "unlimited"  # tests only: no control on memory growth


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class NgSets:
    eta: dict[int, frozenset[int]]
    lam: int
    construction: NgConstruction


def build_ng_sets(g: PricingGraph, duals: Mapping[int, float] | None = None, lam: int = 5,
                  construction: NgConstruction = NgConstruction.DUAL, seed: int = 0) -> NgSets:
    """ng-set of every vertex: itself plus at most ``lam`` other vertices.

    DUAL keeps the ``lam`` extended predecessors with the largest duals
    (ties by id); UNIFORM draws ``lam`` other vertices at random.
    """
    if lam < 0:
        raise ParameterError(f"ng-set size must be >= 0, got {lam}")
    duals = g.alpha if duals is None else duals
    eta = {}
    if construction is NgConstruction.DUAL:
        gamma_pred = g.gamma_pred if g.gamma_pred is not None else compute_extended_sets(g)[1]
        for v in g.vertices:
            cands = sorted((u for u in gamma_pred[v] if u != v),
                           key=lambda u: (-duals.get(u, 0.0), u))
            eta[v] = frozenset(cands[:lam]) | {v}
    else:
        rng = np.random.default_rng(seed)
        verts = np.asarray(g.vertices)
        for a, v in enumerate(g.vertices):
            others = np.delete(verts, a)
            pick = rng.choice(others, size=min(lam, len(others)), replace=False) if lam else []
            eta[v] = frozenset(int(x) for x in pick) | {v}
    return NgSets(eta, lam, construction)


def project_memory(pi_prev, j: int, i: int, sets: NgSets | Mapping[int, frozenset[int]]):
    """Memory after extending a path that ends at ``j`` by ``i``.

    Returns None when ``i`` is remembered, i.e. the extension is forbidden.
    """
    eta = sets.eta if isinstance(sets, NgSets) else sets
    if i in pi_prev:
        return None
    return (frozenset(pi_prev) & eta[i]) | {i}


# --------------------------------------------------------------------------
# Labeling
# --------------------------------------------------------------------------

@dataclass
class NgResult:
    """Outcome of one ng labeling pass.

    ``label_costs[l, a]`` is the cheapest surviving label of length ``l``
    at vertex index ``a`` (prefix cost forward, suffix cost backward).
    """

    bound: float
    path: tuple[int, ...] | None
    elementary: bool
    direction: Direction
    label_costs: np.ndarray
    pruned: int = 0
    labels: int = 0


class _Label:
    __slots__ = ("cost", "pi", "v", "parent")

    def __init__(self, cost, pi, v, parent):
        self.cost = cost
        self.pi = pi
        self.v = v
        self.parent = parent


def _insert(bucket: list, label: _Label, dominance: bool) -> bool:
    """Add ``label`` to a (length, vertex) bucket unless an existing label wins."""
    pi, cost = label.pi, label.cost
    if dominance:
        for other in bucket:
            if other.pi & ~pi == 0 and other.cost <= cost:
                return False
        bucket[:] = [o for o in bucket if not (pi & ~o.pi == 0 and cost <= o.cost)]
        bucket.append(label)
        return True
    for k, other in enumerate(bucket):
        if other.pi == pi:
            if cost < other.cost:
                bucket[k] = label
                return True
            return False
    bucket.append(label)
    return True


def _prefix_min(costs: np.ndarray, start: int) -> np.ndarray:
    """``out[r, a] = min(costs[start..r, a])``; rows below ``start`` are inf."""
    out = np.full_like(costs, np.inf)
    if start < len(costs):
        out[start:] = np.minimum.accumulate(costs[start:], axis=0)
    return out


def ng_dp(g: PricingGraph, memory: Mapping[int, frozenset[int]] | NgSets,
          direction: Direction = Direction.FORWARD, completion: np.ndarray | None = None,
          ub: float = 0.0, dominance: bool = True) -> NgResult:
    """Cheapest ng-path under the given memories.

    ``completion`` holds the label costs of an earlier pass in the opposite
    direction.  When given, labels whose cost plus best completion exceeds
    ``ub`` are dropped; every path of cost ``<= ub`` survives, so the
    returned bound is ``min(best, ub)`` and stays a valid lower bound.
    """
    eta = memory.eta if isinstance(memory, NgSets) else memory
    verts = g.vertices
    n, L = len(verts), g.L
    index = {v: a for a, v in enumerate(verts)}
    bit = [1 << a for a in range(n)]
    mem = [sum(bit[index[u]] for u in eta.get(v, ()) if u in index) | bit[a]
           for a, v in enumerate(verts)]
    src = {index[u]: c for u, c in g.source_arcs.items()}
    costs = np.full((L + 1, n), np.inf)

    comp = None
    if completion is not None:
        # forward labels complete with a suffix of 0..r arcs (the empty suffix
        # costs 0); backward labels need a prefix of 1..r arcs
        comp = _prefix_min(completion, 0 if direction is Direction.FORWARD else 1)
        if direction is Direction.FORWARD:
            comp[0, :] = np.minimum(comp[0, :], 0.0)
            comp = np.minimum(comp, 0.0)
    limit = ub + PRUNE_EPS
    pruned = 0
    n_labels = 0
    best = None

    if direction is Direction.FORWARD:
        adj = [[(index[v], c) for v, c in sorted(g.arcs[u].items())] for u in verts]
        layer: dict[int, list[_Label]] = {}
        for a, c in sorted(src.items()):
            if comp is not None and c + comp[L - 1, a] > limit:
                pruned += 1
                continue
            layer.setdefault(a, []).append(_Label(c, bit[a], a, None))
        for length in range(1, L + 1):
            for a, bucket in layer.items():
                for lab in bucket:
                    n_labels += 1
                    if lab.cost < costs[length, a]:
                        costs[length, a] = lab.cost
                    if best is None or lab.cost < best.cost:
                        best = lab
            if length == L:
                break
            nxt: dict[int, list[_Label]] = {}
            rest = L - length - 1
            for a, bucket in layer.items():
                for lab in bucket:
                    for b, c in adj[a]:
                        if lab.pi & bit[b]:
                            continue
                        nc = lab.cost + c
                        if comp is not None and nc + comp[rest, b] > limit:
                            pruned += 1
                            continue
                        _insert(nxt.setdefault(b, []), _Label(nc, (lab.pi & mem[b]) | bit[b], b, lab),
                                dominance)
            layer = nxt
        best_cost = None if best is None else best.cost
        path = None
        if best is not None:
            walk, lab = [], best
            while lab is not None:
                walk.append(verts[lab.v])
                lab = lab.parent
            path = tuple(reversed(walk))
    else:
        radj = [[(index[u], c) for u, c in sorted(g.pred[v].items())] for v in verts]
        layer = {}
        for a in range(n):
            if comp is not None and comp[L, a] > limit:
                pruned += 1
                continue
            layer[a] = [_Label(0.0, bit[a], a, None)]
        best_total = None
        for length in range(0, L):
            for a, bucket in layer.items():
                for lab in bucket:
                    n_labels += 1
                    if lab.cost < costs[length, a]:
                        costs[length, a] = lab.cost
                    if a in src:
                        total = lab.cost + src[a]
                        if best_total is None or total < best_total:
                            best_total, best = total, lab
            if length == L - 1:
                break
            nxt = {}
            for a, bucket in layer.items():
                for lab in bucket:
                    for b, c in radj[a]:
                        if lab.pi & bit[b]:
                            continue
                        nc = lab.cost + c
                        if comp is not None and nc + comp[L - length - 1, b] > limit:
                            pruned += 1
                            continue
                        _insert(nxt.setdefault(b, []), _Label(nc, (lab.pi & mem[b]) | bit[b], b, lab),
                                dominance)
            layer = nxt
        best_cost = best_total
        path = None
        if best is not None:
            walk, lab = [], best
            while lab is not None:
                walk.append(verts[lab.v])
                lab = lab.parent
            path = tuple(walk)

    if path is None:
        bound = ub if (comp is not None and pruned) else 0.0
        return NgResult(bound, None, True, direction, costs, pruned, n_labels)
    if comp is not None and best_cost > ub:
        return NgResult(ub, None, True, direction, costs, pruned, n_labels)
    elementary = len(set(path)) == len(path)
    return NgResult(best_cost, path, elementary, direction, costs, pruned, n_labels)


# --------------------------------------------------------------------------
# DSSR
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NgConfig:
    mode: DssrMode = DssrMode.LIMITED
    lam: int = 5
    construction: NgConstruction = NgConstruction.DUAL
    size_limit: int | None = None
    filtering: bool = True
    alternate: bool = True
    dominance: bool = True
    seed: int = 0
    max_iterations: int = 10_000

    def validate(self):
        if self.lam < 0:
            raise ParameterError(f"ng-set size must be >= 0, got {self.lam}")
        if self.mode is DssrMode.LIMITED and self.limit < 1:
            raise ParameterError(f"limited DSSR needs a size limit >= 1, got {self.limit}")

    @property
    def limit(self) -> int:
        return self.lam if self.size_limit is None else self.size_limit


@dataclass
class NgOutcome:
    solution: EmpplcSolution
    iterations: int
    history: list[dict] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return self.solution.cost

    @property
    def elementary(self) -> bool:
        return self.solution.elementary


def _repeats(walk) -> list[tuple[int, list[int]]]:
    """``(v, between)`` for each pair of consecutive visits of a vertex."""
    last = {}
    out = []
    for pos, v in enumerate(walk):
        if v in last:
            out.append((v, list(walk[last[v] + 1:pos])))
        last[v] = pos
    return out


def _augment(mu: dict[int, set[int]], walk, config: NgConfig, eta) -> bool:
    added = False
    for v, between in _repeats(walk):
        for x in between:
            if v in mu[x]:
                continue
            if config.mode is DssrMode.PREDEFINED and v not in eta[x]:
                continue
            if config.mode is DssrMode.LIMITED and len(mu[x]) >= config.limit:
                continue
            mu[x].add(v)
            added = True
    return added


def solve_ng_dssr(g: PricingGraph, duals: Mapping[int, float] | None = None,
                  config: NgConfig = NgConfig()) -> NgOutcome:
    """Lower bound on the EMPPLC optimum by ng-route relaxation.

    The reported bound is the best over all iterations; the path is the
    walk of the last iteration and is optimal whenever it is elementary.
    """
    config.validate()
    sets = build_ng_sets(g, duals, config.lam, config.construction, config.seed)
    if config.mode is DssrMode.NONE:
        res = ng_dp(g, sets, Direction.FORWARD, dominance=config.dominance)
        sol = EmpplcSolution(res.path, res.bound, SolutionKind.RELAXATION_BOUND,
                             is_proven_optimal=res.elementary, elementary=res.elementary)
        return NgOutcome(sol, 1, [{"iteration": 0, "direction": "forward", "bound": res.bound,
                                   "elementary": res.elementary, "labels": res.labels}])

    mu = {v: set() for v in g.vertices}
    direction = Direction.FORWARD
    completion = None
    bound = -np.inf
    history = []
    res = None
    for k in range(config.max_iterations):
        memory = {v: frozenset(mu[v]) | {v} for v in g.vertices}
        res = ng_dp(g, memory, direction, completion, 0.0, config.dominance)
        bound = max(bound, res.bound)
        history.append({"iteration": k, "direction": direction.value, "bound": res.bound,
                        "elementary": res.elementary, "labels": res.labels,
                        "pruned": res.pruned, "memory": sum(len(s) for s in mu.values())})
        if res.path is None or res.elementary:
            break
        if not _augment(mu, res.path, config, sets.eta):
            break
        if config.alternate:
            completion = res.label_costs if config.filtering else None
            direction = Direction.BACKWARD if direction is Direction.FORWARD else Direction.FORWARD
    sol = EmpplcSolution(res.path, float(bound), SolutionKind.RELAXATION_BOUND,
                         is_proven_optimal=res.elementary and res.path is not None,
                         elementary=res.elementary)
    return NgOutcome(sol, len(history), history)
