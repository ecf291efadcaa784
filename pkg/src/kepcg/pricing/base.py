"""Result types shared by the EMPPLC solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass

# A pricing path is "improving" when its cost is below -IMPROVING_TOL.
IMPROVING_TOL = 1e-7


class SolutionKind(str, enum.Enum):
    EXACT = "Exact"
    HEURISTIC = "Heuristic"
    RELAXATION_BOUND = "RelaxationBound"


@dataclass(frozen=True)
class EmpplcSolution:
    """A source path and its cost.

    ``path`` lists the vertices after the implicit source; ``None`` means no
    path was found (cost then reads 0 for exact/heuristic results).  For a
    relaxation bound, ``cost`` is the bound and ``path`` the relaxed walk
    that attains it, which may repeat vertices (``elementary`` is False).
    """

    path: tuple[int, ...] | None
    cost: float
    kind: SolutionKind
    is_proven_optimal: bool = False
    elementary: bool = True

    @property
    def is_negative(self) -> bool:
        return self.path is not None and self.cost < -IMPROVING_TOL


def lex_better(cost, path, best_cost, best_path, tol=1e-12) -> bool:
    """Lower cost wins; near-ties go to the lexicographically smaller path."""
    if best_path is None:
        return True
    if cost < best_cost - tol:
        return True
    return abs(cost - best_cost) <= tol and tuple(path) < tuple(best_path)
