"""Source-augmented pricing graph and the length-based reductions on it.

Arc costs are the negated reduced-cost contributions, ``c_uv = -w_uv +
alpha_v`` and ``c_su = alpha_u`` for every altruist ``u``, so the cost of a
source path equals minus the reduced cost of the chain it encodes.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from kepcg.errors import ParseError, ValidationError
from kepcg.instance import FORMAT_VERSION, CompatibilityInstance, _require

SOURCE = -1


@dataclass(frozen=True)
class HopDistances:
    """All-pairs arc-count distances; unreachable pairs hold ``inf``."""

    index: dict[int, int]
    table: np.ndarray
    inf: int

    def __call__(self, i: int, j: int) -> int:
        return int(self.table[self.index[i], self.index[j]])

    def from_source(self, j: int) -> int:
        return self(SOURCE, j)


@dataclass(frozen=True)
class PricingGraph:
    """EMPPLC input graph.

    ``vertices`` excludes the source.  ``arcs`` maps every vertex to its
    successor costs; ``source_arcs`` maps each altruist to ``c_su``.
    ``dist``, ``gamma`` and ``gamma_pred`` are filled in by :func:`prepare`.
    """

    vertices: tuple[int, ...]
    source_arcs: dict[int, float]
    arcs: dict[int, dict[int, float]]
    L: int
    alpha: dict[int, float] = field(default_factory=dict)
    removed_vertices: frozenset[int] = frozenset()
    removed_arcs: frozenset[tuple[int, int]] = frozenset()
    dist: HopDistances | None = None
    gamma: dict[int, frozenset[int]] | None = None
    gamma_pred: dict[int, frozenset[int]] | None = None

    @cached_property
    def pred(self) -> dict[int, dict[int, float]]:
        out = {v: {} for v in self.vertices}
        for u, nbrs in self.arcs.items():
            for v, c in nbrs.items():
                out[v][u] = c
        return out

    @property
    def num_arcs(self) -> int:
        return len(self.source_arcs) + sum(len(n) for n in self.arcs.values())

    def cost(self, u: int, v: int) -> float:
        if u == SOURCE:
            return self.source_arcs[v]
        return self.arcs[u][v]


def build_pricing_graph(inst: CompatibilityInstance, duals: Mapping[int, float]) -> PricingGraph:
    missing = [v for v in inst.vertices if v not in duals]
    if missing:
        raise ValidationError(f"missing dual values for vertices {missing[:10]}")
    alpha = {v: float(duals[v]) for v in inst.vertices}
    arcs = {v: {} for v in inst.vertices}
    for u, v, w in inst.arcs:
        arcs[u][v] = -w + alpha[v]
    source_arcs = {u: alpha[u] for u in sorted(inst.altruists)}
    return PricingGraph(tuple(inst.vertices), source_arcs, arcs, inst.l, alpha)


def reprice(g: PricingGraph, inst: CompatibilityInstance, duals: Mapping[int, float]) -> PricingGraph:
    """Same surviving topology and distance tables as ``g``, new dual costs."""
    alpha = {v: float(duals[v]) for v in inst.vertices}
    succ = inst.succ
    arcs = {u: {v: -succ[u][v] + alpha[v] for v in nbrs} for u, nbrs in g.arcs.items()}
    source_arcs = {u: alpha[u] for u in g.source_arcs}
    return replace(g, source_arcs=source_arcs, arcs=arcs, alpha=alpha)


def compute_hop_distances(g: PricingGraph) -> HopDistances:
    """One BFS per vertex (and one from the source)."""
    nodes = (SOURCE,) + g.vertices
    index = {v: i for i, v in enumerate(nodes)}
    inf = len(g.vertices) + 1
    table = np.full((len(nodes), len(nodes)), inf, dtype=np.int64)
    adj = {SOURCE: list(g.source_arcs)}
    adj.update({u: list(nbrs) for u, nbrs in g.arcs.items()})
    for start in nodes:
        row = table[index[start]]
        row[index[start]] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            du = row[index[u]]
            for v in adj.get(u, ()):
                if row[index[v]] == inf:
                    row[index[v]] = du + 1
                    queue.append(v)
    return HopDistances(index, table, inf)


def preprocess(g: PricingGraph, dist: HopDistances | None = None) -> PricingGraph:
    """Drop vertices with ``d(s,i) > L`` and arcs with ``d(s,i) + 1 > L``.

    Distances are taken before any removal; the returned graph carries
    distances recomputed on what survives.
    """
    dist = dist or compute_hop_distances(g)
    L = g.L
    ds = {v: dist.from_source(v) for v in g.vertices}
    # the sentinel may be <= L, so reachability is tested explicitly
    keep = tuple(v for v in g.vertices if ds[v] < dist.inf and ds[v] <= L)
    keep_set = set(keep)
    removed_arcs = set(g.removed_arcs)
    arcs = {}
    for u in keep:
        arcs[u] = {}
        for v, c in g.arcs[u].items():
            if ds[u] + 1 <= L and v in keep_set:
                arcs[u][v] = c
            else:
                removed_arcs.add((u, v))
    for u in g.vertices:
        if u not in keep_set:
            removed_arcs.update((u, v) for v in g.arcs[u])
    source_arcs = {u: c for u, c in g.source_arcs.items() if u in keep_set}
    out = PricingGraph(
        keep, source_arcs, arcs, L, g.alpha,
        removed_vertices=frozenset(g.removed_vertices | (set(g.vertices) - keep_set)),
        removed_arcs=frozenset(removed_arcs),
    )
    return replace(out, dist=compute_hop_distances(out))


def compute_extended_sets(g: PricingGraph, dist: HopDistances | None = None):
    """Extended neighborhoods and extended predecessors of every vertex.

    ``j`` is in ``gamma_pred[i]`` when ``d(s,j) + d(j,i) <= L``; ``gamma[i]``
    is the symmetric closure of that relation.
    """
    dist = dist or g.dist or compute_hop_distances(g)
    idx = [dist.index[v] for v in g.vertices]
    sub = dist.table[np.ix_(idx, idx)]
    ds = dist.table[dist.index[SOURCE], idx]
    # reach[j, i]: j can precede i on a source path of length <= L
    reach = ((ds[:, None] + sub) <= g.L) & (sub < dist.inf) & (ds[:, None] < dist.inf)
    both = reach | reach.T
    verts = np.asarray(g.vertices)
    gamma_pred = {v: frozenset(verts[reach[:, a]].tolist()) for a, v in enumerate(g.vertices)}
    gamma = {v: frozenset(verts[both[:, a]].tolist()) for a, v in enumerate(g.vertices)}
    return gamma, gamma_pred


def prepare(g: PricingGraph) -> PricingGraph:
    """Preprocess ``g`` and attach distances and extended sets."""
    g2 = preprocess(g)
    gamma, gamma_pred = compute_extended_sets(g2)
    return replace(g2, gamma=gamma, gamma_pred=gamma_pred)


def prepare_pricing_graph(inst: CompatibilityInstance, duals: Mapping[int, float]) -> PricingGraph:
    return prepare(build_pricing_graph(inst, duals))


def path_cost(g: PricingGraph, path) -> float:
    """Cost of the source path ``(s, *path)``."""
    total = g.source_arcs[path[0]]
    for u, v in zip(path, path[1:]):
        total += g.arcs[u][v]
    return total


def is_valid_path(g: PricingGraph, path) -> bool:
    """Elementary source path with 1..L arcs over existing arcs."""
    if not path or len(path) > g.L or len(set(path)) != len(path):
        return False
    if path[0] not in g.source_arcs:
        return False
    return all(v in g.arcs.get(u, {}) for u, v in zip(path, path[1:]))


# --------------------------------------------------------------------------
# EMPPLC instance files
# --------------------------------------------------------------------------

def pricing_to_dict(g: PricingGraph) -> dict:
    data = {
        "format": FORMAT_VERSION,
        "l": g.L,
        "vertices": list(g.vertices),
        "source_arcs": [{"to": u, "c": c} for u, c in sorted(g.source_arcs.items())],
        "arcs": [{"from": u, "to": v, "c": c}
                 for u in g.vertices for v, c in sorted(g.arcs[u].items())],
    }
    if g.alpha:
        data["duals"] = [{"id": v, "alpha": g.alpha[v]} for v in g.vertices if v in g.alpha]
    return data


def pricing_from_dict(data: dict) -> PricingGraph:
    fmt = _require(data, "format", int, "")
    if fmt != FORMAT_VERSION:
        raise ParseError(f"unsupported format {fmt}", "format")
    L = _require(data, "l", int, "")
    if L < 1:
        raise ValidationError(f"l must be >= 1, got {L}")
    vertices = set(data.get("vertices", []))
    source_arcs = {}
    for idx, arc in enumerate(_require(data, "source_arcs", list, "")):
        where = f"source_arcs[{idx}]"
        source_arcs[_require(arc, "to", int, where)] = float(_require(arc, "c", float, where))
    arcs_raw = []
    for idx, arc in enumerate(_require(data, "arcs", list, "")):
        where = f"arcs[{idx}]"
        arcs_raw.append((_require(arc, "from", int, where), _require(arc, "to", int, where),
                         float(_require(arc, "c", float, where))))
    vertices |= set(source_arcs)
    vertices |= {u for u, _, _ in arcs_raw} | {v for _, v, _ in arcs_raw}
    if any(v < 0 for v in vertices):
        raise ValidationError("vertex ids must be non-negative")
    arcs = {v: {} for v in sorted(vertices)}
    for u, v, c in arcs_raw:
        if u == v:
            raise ValidationError(f"self-loop on {u}")
        if v in arcs[u]:
            raise ValidationError(f"duplicate arc ({u},{v})")
        arcs[u][v] = c
    alpha = {}
    for idx, entry in enumerate(data.get("duals", [])):
        where = f"duals[{idx}]"
        alpha[_require(entry, "id", int, where)] = float(_require(entry, "alpha", float, where))
    return PricingGraph(tuple(sorted(vertices)), source_arcs, arcs, L, alpha)


def save_pricing(g: PricingGraph, path) -> None:
    Path(path).write_text(json.dumps(pricing_to_dict(g), indent=1) + "\n")


def load_pricing(path) -> PricingGraph:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc})") from exc
    return pricing_from_dict(data)


def debug_dump(g: PricingGraph) -> dict:
    """Distances from the source and extended sets, for the CLI debug flag."""
    dist = g.dist or compute_hop_distances(g)
    out = {"d_source": {str(v): dist.from_source(v) for v in g.vertices}}
    if g.gamma is not None:
        out["gamma"] = {str(v): sorted(g.gamma[v]) for v in g.vertices}
        out["gamma_pred"] = {str(v): sorted(g.gamma_pred[v]) for v in g.vertices}
    return out
