"""Restricted master problem: packing LP over the column pool, and its IP.

The LP is ``max sum w_e x_e`` subject to one packing row per vertex
(``sum_{e ∋ v} x_e <= 1``) and ``x >= 0``.  Row duals ``alpha_v`` price the
vertices for the pricing problem.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix

from kepcg.errors import SolverError
from kepcg.exchange import Exchange, validate_exchange
from kepcg.instance import CompatibilityInstance, KepSolution, SolveStatus

INTEGRALITY_TOL = 1e-6
_HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class RestrictedMaster:
    """Column pool over the vertices of one instance.

    Columns are deduplicated on ``(kind, vertices)`` and numbered in order
    of insertion.
    """

    def __init__(self, inst: CompatibilityInstance):
        self.inst = inst
        self.vertices = list(inst.vertices)
        self.row = {v: r for r, v in enumerate(self.vertices)}
        self.columns: list[Exchange] = []
        self._ids: dict = {}
        self.lp_value = 0.0
        self.primal = np.zeros(0)
        self.duals = {v: 0.0 for v in self.vertices}

    def __len__(self):
        return len(self.columns)

    def __contains__(self, e: Exchange) -> bool:
        return e.key in self._ids

    def add(self, e: Exchange, validate: bool = True) -> bool:
        if e.key in self._ids:
            return False
        if validate:
            validate_exchange(self.inst, e)
        col = Exchange(e.kind, e.vertices, e.weight, len(self.columns))
        self._ids[e.key] = col.column_id
        self.columns.append(col)
        return True

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.columns], dtype=float)

    @property
    def coverage(self) -> dict[int, list[int]]:
        out = {v: [] for v in self.vertices}
        for e in self.columns:
            for v in e.vertices:
                out[v].append(e.column_id)
        return out

    def matrix(self, cols=None) -> csc_matrix:
        cols = range(len(self.columns)) if cols is None else cols
        rows, idx = [], []
        for k, c in enumerate(cols):
            for v in self.columns[c].vertices:
                rows.append(self.row[v])
                idx.append(k)
        return csc_matrix((np.ones(len(rows)), (rows, idx)), shape=(len(self.vertices), len(cols)))

    def to_dict(self) -> dict:
        return {
            "lp_value": self.lp_value,
            "columns": [{"id": e.column_id, "kind": e.kind.value, "vertices": list(e.vertices),
                         "w": e.weight, "x": float(self.primal[e.column_id])
                         if e.column_id < len(self.primal) else 0.0}
                        for e in self.columns],
            "duals": {str(v): a for v, a in self.duals.items()},
        }


@dataclass
class LpSolution:
    value: float
    primal: np.ndarray
    duals: dict[int, float]


def _solve_packing_lp(master: RestrictedMaster, cols):
    """LP over the pooled columns listed in ``cols``."""
    n_rows = len(master.vertices)
    if len(cols) == 0:
        return 0.0, np.zeros(0), np.zeros(n_rows)
    A = master.matrix(cols)
    w = np.array([master.columns[c].weight for c in cols])
    res = linprog(-w, A_ub=A, b_ub=np.ones(n_rows), bounds=(0, None), method="highs", options=_HIGHS_OPTIONS)
    if res.status != 0:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}; "
                          f"{n_rows} rows, {len(cols)} columns")
    alpha = np.maximum(-res.ineqlin.marginals, 0.0)
    return -res.fun, res.x, alpha


def solve_rmp(master: RestrictedMaster) -> LpSolution:
    """Solve the LP over the whole pool and store value, primal and duals on it."""
    value, x, alpha = _solve_packing_lp(master, list(range(len(master.columns))))
    master.lp_value = value
    master.primal = x
    master.duals = {v: float(alpha[r]) for r, v in enumerate(master.vertices)}
    return LpSolution(value, x, dict(master.duals))


def lagrangian_ub(z_bar: float, max_rc: float, num_vertices: int) -> float:
    """Bound on the full LP from the RMP value and a bound on the best reduced cost.

    An LP solution holds at most ``|V|/2`` exchanges (each covers two
    vertices or more), which caps what positive reduced costs can add.
    """
    return z_bar + (num_vertices / 2) * max(0.0, max_rc)


def is_integral(x: np.ndarray, tol: float = INTEGRALITY_TOL) -> bool:
    return bool(np.all(np.minimum(np.abs(x), np.abs(1 - x)) <= tol))


def _greedy_packing(master: RestrictedMaster, x: np.ndarray, cols) -> list[int]:
    order = sorted(range(len(cols)), key=lambda k: (-x[k], -master.columns[cols[k]].weight, cols[k]))
    used, chosen = set(), []
    for k in order:
        e = master.columns[cols[k]]
        if x[k] > INTEGRALITY_TOL and not used.intersection(e.vertices):
            chosen.append(cols[k])
            used.update(e.vertices)
    return chosen


def solve_restricted_ip(master: RestrictedMaster, time_limit_s: float = 600.0,
                        lp: LpSolution | None = None) -> KepSolution:
    """Best 0/1 packing of pooled columns by best-bound branch and bound.

    Branches on the most fractional column (ties: larger weight, then lower
    column id), exploring the fix-to-one child first.  On timeout the
    incumbent is returned with status TimeLimit.  ``upper_bound`` is the
    root LP value.
    """
    t0 = time.perf_counter()
    all_cols = list(range(len(master.columns)))
    if lp is None:
        lp = solve_rmp(master)
    root_value, root_x = lp.value, lp.primal
    if is_integral(root_x):
        chosen = [master.columns[c] for c in all_cols if root_x[c] > 0.5]
        return KepSolution(chosen, sum(e.weight for e in chosen), root_value, SolveStatus.OPTIMAL_LP)

    weights = master.weights
    incumbent = _greedy_packing(master, root_x, all_cols)
    inc_value = float(sum(weights[c] for c in incumbent))
    counter = 0
    heap = [(-root_value, counter, frozenset(), frozenset(), root_x, all_cols)]
    nodes = 0
    timed_out = False
    while heap:
        neg_bound, _, ones, zeros, x, cols = heapq.heappop(heap)
        if -neg_bound <= inc_value + 1e-9:
            break
        if time.perf_counter() - t0 > time_limit_s:
            timed_out = True
            break
        nodes += 1
        frac = [(abs(x[k] - 0.5), -weights[c], c, k) for k, c in enumerate(cols)
                if INTEGRALITY_TOL < x[k] < 1 - INTEGRALITY_TOL]
        if not frac:
            continue
        _, _, branch_col, _ = min(frac)
        for fix_one in (True, False):
            if fix_one:
                new_ones, new_zeros = ones | {branch_col}, zeros
            else:
                new_ones, new_zeros = ones, zeros | {branch_col}
            covered = set()
            for c in new_ones:
                covered.update(master.columns[c].vertices)
            free = [c for c in all_cols if c not in new_ones and c not in new_zeros
                    and not covered.intersection(master.columns[c].vertices)]
            fixed_value = float(sum(weights[c] for c in new_ones))
            value, cx, _ = _solve_packing_lp(master, free)
            bound = fixed_value + value
            if bound <= inc_value + 1e-9:
                continue
            if is_integral(cx):
                cand = list(new_ones) + [free[k] for k in range(len(free)) if cx[k] > 0.5]
                inc_value, incumbent = bound, cand
                continue
            greedy = list(new_ones) + _greedy_packing(master, cx, free)
            g_value = float(sum(weights[c] for c in greedy))
            if g_value > inc_value + 1e-9:
                inc_value, incumbent = g_value, greedy
            counter += 1
            heapq.heappush(heap, (-bound, counter, new_ones, new_zeros, cx, free))

    chosen = sorted((master.columns[c] for c in incumbent), key=lambda e: e.column_id)
    status = SolveStatus.TIME_LIMIT if timed_out else SolveStatus.OPTIMAL_LP
    return KepSolution(chosen, float(sum(e.weight for e in chosen)), root_value, status,
                       {"ip": time.perf_counter() - t0}, ip_nodes=nodes)
