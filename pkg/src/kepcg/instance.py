"""Compatibility graphs, a seeded pool generator and JSON serialization.

A pool is a directed graph whose vertices are incompatible patient/donor
pairs and altruistic (non-directed) donors.  An arc ``(u, v)`` means the
donor of ``u`` can give to the patient of ``v``; arcs therefore never enter
an altruist.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from kepcg.errors import ParameterError, ParseError, ValidationError

if TYPE_CHECKING:
    from kepcg.exchange import Exchange

FORMAT_VERSION = 1

# Donor blood type -> patient blood types it can give to.
BLOOD_TYPES = ("O", "A", "B", "AB")
_ABO_OK = {
    "O": {"O", "A", "B", "AB"},
    "A": {"A", "AB"},
    "B": {"B", "AB"},
    "AB": {"AB"},
}


@dataclass(frozen=True)
class CompatibilityInstance:
    """A kidney exchange pool.

    ``arcs`` holds ``(from, to, weight)`` triples sorted by ``(from, to)``.
    ``k`` bounds the number of pairs in a cycle, ``l`` the number of
    vertices (altruist included) in a chain.
    """

    pairs: frozenset[int]
    altruists: frozenset[int]
    arcs: tuple[tuple[int, int, float], ...]
    k: int = 3
    l: int = 4

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        object.__setattr__(self, "altruists", frozenset(self.altruists))
        arcs = tuple(sorted((int(u), int(v), float(w)) for u, v, w in self.arcs))
        object.__setattr__(self, "arcs", arcs)
        self._validate()

    def _validate(self):
        if self.pairs & self.altruists:
            raise ValidationError(f"vertices both pair and altruist: {sorted(self.pairs & self.altruists)}")
        if any(v < 0 for v in self.vertices):
            raise ValidationError("vertex ids must be non-negative")
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        if self.l < 1:
            raise ValidationError(f"l must be >= 1, got {self.l}")
        vertices = set(self.vertices)
        seen = set()
        for u, v, w in self.arcs:
            if u not in vertices or v not in vertices:
                raise ValidationError(f"arc ({u},{v}) has an unknown endpoint")
            if v in self.altruists:
                raise ValidationError(f"arc into altruist: ({u},{v})")
            if u == v:
                raise ValidationError(f"self-loop on {u}")
            if (u, v) in seen:
                raise ValidationError(f"duplicate arc ({u},{v})")
            if not (w >= 0 and math.isfinite(w)):
                raise ValidationError(f"arc ({u},{v}) has invalid weight {w}")
            seen.add((u, v))

    @cached_property
    def vertices(self) -> list[int]:
        return sorted(self.pairs | self.altruists)

    @cached_property
    def succ(self) -> dict[int, dict[int, float]]:
        """Successor map ``u -> {v: w_uv}`` covering every vertex."""
        out = {v: {} for v in self.vertices}
        for u, v, w in self.arcs:
            out[u][v] = w
        return out

    @property
    def num_vertices(self) -> int:
        return len(self.pairs) + len(self.altruists)

    def weight(self, u: int, v: int) -> float:
        return self.succ[u][v]

    def with_limits(self, k: int | None = None, l: int | None = None) -> CompatibilityInstance:
        return CompatibilityInstance(
            self.pairs, self.altruists, self.arcs,
            self.k if k is None else k, self.l if l is None else l,
        )


def g1_fixture(k: int = 3, l: int = 4) -> CompatibilityInstance:
    """The 7-vertex pool with two altruists used throughout the tests.

    With ``k=3, l=4`` it has exactly eight exchanges: cycles 4-6 and 5-7-6
    and chains 1-3, 1-3-5, 1-3-5-7, 2-3, 2-3-5, 2-3-5-7.
    """
    arcs = [(1, 3), (2, 3), (3, 5), (5, 7), (7, 6), (6, 5), (4, 6), (6, 4)]
    return CompatibilityInstance(
        pairs={3, 4, 5, 6, 7},
        altruists={1, 2},
        arcs=[(u, v, 1.0) for u, v in arcs],
        k=k,
        l=l,
    )


# --------------------------------------------------------------------------
# Generator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorParams:
    """Parameters of the simplified random pool generator.

    Pairs whose donor can give directly to their own patient are rejected
    and redrawn, as a real program would transplant them outside the pool.
    """

    num_pairs: int
    altruist_fraction: float = 0.05
    seed: int = 0
    k: int = 3
    l: int = 4
    blood_freqs: tuple[float, float, float, float] = (0.44, 0.42, 0.10, 0.04)
    pra_probs: tuple[float, float, float] = (0.70, 0.20, 0.10)
    pra_fail: tuple[float, float, float] = (0.05, 0.45, 0.90)
    unit_weights: bool = True

    def validate(self):
        if self.num_pairs < 1:
            raise ParameterError(f"num_pairs must be positive, got {self.num_pairs}")
        if not 0.0 <= self.altruist_fraction <= 1.0:
            raise ParameterError(f"altruist_fraction must lie in [0, 1], got {self.altruist_fraction}")
        for name in ("blood_freqs", "pra_probs"):
            vec = getattr(self, name)
            if any(p < 0 for p in vec) or abs(sum(vec) - 1.0) > 1e-9:
                raise ParameterError(f"{name} must be a probability vector, got {vec}")
        if len(self.blood_freqs) != 4 or len(self.pra_probs) != 3 or len(self.pra_fail) != 3:
            raise ParameterError("blood_freqs needs 4 entries, pra_probs and pra_fail 3")
        if any(not 0.0 <= p <= 1.0 for p in self.pra_fail):
            raise ParameterError(f"pra_fail entries must lie in [0, 1], got {self.pra_fail}")

    @property
    def num_altruists(self) -> int:
        # round half up; Python's round() would send 2.5 to 2
        return int(math.floor(self.altruist_fraction * self.num_pairs + 0.5))


def generate(params: GeneratorParams) -> CompatibilityInstance:
    """Draw a pool; the result is a pure function of ``params``.

    Altruists get ids ``0..N-1`` and pairs ``N..N+P-1``.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    blood_p = np.asarray(params.blood_freqs, dtype=float)
    pra_p = np.asarray(params.pra_probs, dtype=float)

    def draw_blood():
        return BLOOD_TYPES[rng.choice(4, p=blood_p)]

    n_alt = params.num_altruists
    donor_bt: list[str] = []
    patient_bt: list[str | None] = []
    patient_pra: list[int | None] = []
    for _ in range(n_alt):
        donor_bt.append(draw_blood())
        patient_bt.append(None)
        patient_pra.append(None)
    while len(donor_bt) < n_alt + params.num_pairs:
        p_bt, d_bt = draw_blood(), draw_blood()
        pra = int(rng.choice(3, p=pra_p))
        direct_ok = p_bt in _ABO_OK[d_bt] and rng.random() >= params.pra_fail[pra]
        if direct_ok:
            continue
        donor_bt.append(d_bt)
        patient_bt.append(p_bt)
        patient_pra.append(pra)

    n = len(donor_bt)
    arcs = []
    for u in range(n):
        for v in range(n_alt, n):
            if u == v:
                continue
            # one crossmatch draw per ordered candidate keeps the stream fixed
            xm = rng.random()
            w = 1.0 if params.unit_weights else float(rng.random())
            if patient_bt[v] in _ABO_OK[donor_bt[u]] and xm >= params.pra_fail[patient_pra[v]]:
                arcs.append((u, v, w))
    return CompatibilityInstance(
        pairs=range(n_alt, n),
        altruists=range(n_alt),
        arcs=arcs,
        k=params.k,
        l=params.l,
    )


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def instance_to_dict(inst: CompatibilityInstance) -> dict:
    return {
        "format": FORMAT_VERSION,
        "k": inst.k,
        "l": inst.l,
        "vertices": [{"id": v, "altruist": v in inst.altruists} for v in inst.vertices],
        "arcs": [{"from": u, "to": v, "w": w} for u, v, w in inst.arcs],
    }


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError("missing field", f"{where}.{key}" if where else key)
    value = obj[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ParseError(f"expected {kind.__name__}, got {type(value).__name__}",
                         f"{where}.{key}" if where else key)
    return value


def instance_from_dict(data: dict) -> CompatibilityInstance:
    fmt = _require(data, "format", int, "")
    if fmt != FORMAT_VERSION:
        raise ParseError(f"unsupported format {fmt}", "format")
    k = _require(data, "k", int, "")
    l = _require(data, "l", int, "")
    pairs, altruists = set(), set()
    for idx, vert in enumerate(_require(data, "vertices", list, "")):
        where = f"vertices[{idx}]"
        vid = _require(vert, "id", int, where)
        if vid in pairs or vid in altruists:
            raise ValidationError(f"duplicate vertex id {vid}")
        (altruists if _require(vert, "altruist", bool, where) else pairs).add(vid)
    arcs = []
    for idx, arc in enumerate(_require(data, "arcs", list, "")):
        where = f"arcs[{idx}]"
        arcs.append((_require(arc, "from", int, where), _require(arc, "to", int, where),
                     float(_require(arc, "w", float, where))))
    return CompatibilityInstance(pairs, altruists, arcs, k, l)


def dumps_instance(inst: CompatibilityInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1)


def save_instance(inst: CompatibilityInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst) + "\n")


def load_instance(path) -> CompatibilityInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc})") from exc
    return instance_from_dict(data)


# --------------------------------------------------------------------------
# Solutions
# --------------------------------------------------------------------------

class SolveStatus(str, enum.Enum):
    OPTIMAL_LP = "OptimalLP"
    UPPER_BOUND_ONLY = "UpperBoundOnly"
    TIME_LIMIT = "TimeLimit"


GAP_EPS = 1e-9


def relative_gap(upper_bound: float, objective: float) -> float:
    return (upper_bound - objective) / max(upper_bound, GAP_EPS)


@dataclass
class KepSolution:
    chosen: list[Exchange]
    objective: float
    upper_bound: float
    status: SolveStatus
    timings: dict[str, float] = field(default_factory=dict)
    ip_nodes: int = 0

    @property
    def gap(self) -> float:
        return relative_gap(self.upper_bound, self.objective)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "chosen": [{"kind": e.kind.value, "vertices": list(e.vertices), "w": e.weight}
                       for e in self.chosen],
            "objective": self.objective,
            "upper_bound": self.upper_bound,
            "gap": self.gap,
            "status": self.status.value,
            "timings": dict(self.timings),
        }


def save_solution(sol: KepSolution, path) -> None:
    Path(path).write_text(json.dumps(sol.to_dict(), indent=1) + "\n")
