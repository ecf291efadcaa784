"""Exchanges (master-problem columns): cycles among pairs and altruist chains."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from kepcg.errors import SizeLimitError, UnsupportedParameterError, ValidationError
from kepcg.instance import CompatibilityInstance

MAX_CYCLE_K = 4


class ExchangeKind(str, enum.Enum):
    CYCLE = "cycle"
    CHAIN = "chain"


@dataclass(frozen=True)
class Exchange:
    """A cycle (lowest id first) or a chain (altruist first).

    Equality and hashing only look at ``(kind, vertices)``.
    """

    kind: ExchangeKind
    vertices: tuple[int, ...]
    weight: float = field(default=0.0, compare=False)
    column_id: int = field(default=-1, compare=False)

    @property
    def key(self) -> tuple[ExchangeKind, tuple[int, ...]]:
        return self.kind, self.vertices

    @property
    def arcs(self) -> list[tuple[int, int]]:
        vs = self.vertices
        out = list(zip(vs, vs[1:]))
        if self.kind is ExchangeKind.CYCLE:
            out.append((vs[-1], vs[0]))
        return out

    def __str__(self):
        return "-".join(map(str, self.vertices))


def exchange_weight(inst: CompatibilityInstance, kind: ExchangeKind, vertices) -> float:
    succ = inst.succ
    vs = tuple(vertices)
    arcs = list(zip(vs, vs[1:]))
    if kind is ExchangeKind.CYCLE:
        arcs.append((vs[-1], vs[0]))
    try:
        return sum(succ[u][v] for u, v in arcs)
    except KeyError as exc:
        raise ValidationError(f"exchange {vs} uses a missing arc") from exc


def validate_exchange(inst: CompatibilityInstance, e: Exchange) -> None:
    vs = e.vertices
    if len(set(vs)) != len(vs):
        raise ValidationError(f"exchange {vs} repeats a vertex")
    if e.kind is ExchangeKind.CYCLE:
        if not 2 <= len(vs) <= inst.k:
            raise ValidationError(f"cycle {vs} has size outside [2, {inst.k}]")
        if any(v not in inst.pairs for v in vs):
            raise ValidationError(f"cycle {vs} contains a non-pair vertex")
        if vs[0] != min(vs):
            raise ValidationError(f"cycle {vs} is not in canonical form")
    else:
        if not 2 <= len(vs) <= inst.l:
            raise ValidationError(f"chain {vs} has size outside [2, {inst.l}]")
        if vs[0] not in inst.altruists:
            raise ValidationError(f"chain {vs} does not start at an altruist")
    expected = exchange_weight(inst, e.kind, vs)
    if abs(expected - e.weight) > 1e-9:
        raise ValidationError(f"exchange {vs} has weight {e.weight}, arcs sum to {expected}")


def make_chain(inst: CompatibilityInstance, vertices: Iterable[int]) -> Exchange:
    vs = tuple(vertices)
    e = Exchange(ExchangeKind.CHAIN, vs, exchange_weight(inst, ExchangeKind.CHAIN, vs))
    validate_exchange(inst, e)
    return e


def make_cycle(inst: CompatibilityInstance, vertices: Iterable[int]) -> Exchange:
    """Build a cycle, rotating it so the lowest id comes first."""
    vs = tuple(vertices)
    if not vs:
        raise ValidationError("empty cycle")
    i = vs.index(min(vs))
    vs = vs[i:] + vs[:i]
    e = Exchange(ExchangeKind.CYCLE, vs, exchange_weight(inst, ExchangeKind.CYCLE, vs))
    validate_exchange(inst, e)
    return e


def enumerate_cycles(inst: CompatibilityInstance) -> list[Exchange]:
    """All canonical cycles of at most ``inst.k`` pairs, sorted by vertex list.

    Each DFS starts at its smallest vertex and only visits larger ids, so
    every cycle is produced once and already in canonical form.
    """
    if inst.k > MAX_CYCLE_K:
        raise UnsupportedParameterError(
            f"cycle enumeration supports k <= {MAX_CYCLE_K}, got {inst.k}")
    succ = inst.succ
    pairs = inst.pairs
    found: list[tuple[int, ...]] = []

    def dfs(path: list[int], start: int):
        for v in sorted(succ[path[-1]]):
            if v == start and len(path) >= 2:
                found.append(tuple(path))
            elif v > start and v in pairs and v not in path and len(path) < inst.k:
                path.append(v)
                dfs(path, start)
                path.pop()

    for v1 in sorted(pairs):
        dfs([v1], v1)
    found.sort()
    return [Exchange(ExchangeKind.CYCLE, c, exchange_weight(inst, ExchangeKind.CYCLE, c))
            for c in found]


def enumerate_chains(inst: CompatibilityInstance, max_count: int = 200_000) -> list[Exchange]:
    succ = inst.succ
    found: list[tuple[int, ...]] = []

    def dfs(path: list[int]):
        if len(path) >= 2:
            found.append(tuple(path))
            if len(found) > max_count:
                raise SizeLimitError(f"more than {max_count} chains; instance too large to enumerate")
        if len(path) == inst.l:
            return
        for v in sorted(succ[path[-1]]):
            if v not in path:
                path.append(v)
                dfs(path)
                path.pop()

    for a in sorted(inst.altruists):
        dfs([a])
    found.sort()
    return [Exchange(ExchangeKind.CHAIN, c, exchange_weight(inst, ExchangeKind.CHAIN, c))
            for c in found]


def enumerate_exchanges(inst: CompatibilityInstance, max_count: int = 200_000) -> list[Exchange]:
    """Every valid cycle and chain.  Only meant for small instances."""
    return enumerate_cycles(inst) + enumerate_chains(inst, max_count)


def reduced_cost(e: Exchange, duals: Mapping[int, float]) -> float:
    return e.weight - sum(duals[v] for v in e.vertices)


def expand_subpaths(chain: Exchange, inst: CompatibilityInstance) -> list[Exchange]:
    """Prefixes of ``chain`` with 2..len vertices, shortest first."""
    if chain.kind is not ExchangeKind.CHAIN or len(chain.vertices) < 2:
        raise ValidationError(f"expand_subpaths needs a chain with >= 2 vertices, got {chain}")
    return [make_chain(inst, chain.vertices[:n]) for n in range(2, len(chain.vertices) + 1)]
