"""
Gated rectangular linear assignment between track positions and detection
centers.

Cells whose distance is not strictly below the gate are INFEASIBLE. `solve`
maximizes the number of feasible pairs first and minimizes their total cost
second; `brute_force_solve` enumerates the same objective for small matrices
and is the oracle `solve` is checked against.
"""

import itertools
import math
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Point2

INFEASIBLE = math.inf

# brute force enumerates P(max(rows, cols), min(rows, cols)) assignments
BRUTE_FORCE_LIMIT = 9

# relative difference below which two assignment totals are a tie
TIE_TOLERANCE = 1e-9


class AssignmentError(ValueError):
    """Raised for invalid assignment input."""


class CostMatrix:
    """
    Track-by-detection cost matrix.

    Costs are Euclidean distances in pixels, or `INFEASIBLE` for pairs that may
    never be matched.
    """

    def __init__(self, cost):
        cost = np.array(cost, dtype=float)
        if cost.ndim != 2:
            if cost.size == 0:
                cost = cost.reshape(0, 0)
            else:
                raise AssignmentError("cost matrix must be two dimensional")
        finite = cost[np.isfinite(cost)]
        if np.any(np.isnan(cost)) or np.any(finite < 0) or np.any(cost == -math.inf):
            raise AssignmentError("costs must be non-negative or INFEASIBLE")
        self.cost = cost

    @property
    def rows(self) -> int:
        return self.cost.shape[0]

    @property
    def cols(self) -> int:
        return self.cost.shape[1]

    @property
    def feasible(self):
        return np.isfinite(self.cost)

    def __repr__(self):
        return f"CostMatrix({self.cost.tolist()!r})"


class Assignment(NamedTuple):
    pairs: List[Tuple[int, int]]
    unmatched_rows: List[int]
    unmatched_cols: List[int]

    def total_cost(self, matrix: CostMatrix) -> float:
        return math.fsum(float(matrix.cost[r, c]) for r, c in self.pairs)


def build_cost_matrix(
    track_positions: Sequence[Point2], det_centers: Sequence[Point2], epsilon: float
) -> CostMatrix:
    """
    Euclidean distances between track positions and detection centers, gated
    by a strict `< epsilon` comparison.
    """
    if not epsilon > 0:
        raise AssignmentError(f"epsilon must be positive, not {epsilon!r}")
    tracks = np.asarray(track_positions, dtype=float).reshape(-1, 2)
    dets = np.asarray(det_centers, dtype=float).reshape(-1, 2)
    diff = tracks[:, None, :] - dets[None, :, :]
    cost = np.hypot(diff[..., 0], diff[..., 1])
    cost[cost >= epsilon] = INFEASIBLE
    return CostMatrix(cost)


def _partition(matrix: CostMatrix, pairs) -> Assignment:
    pairs = sorted((int(r), int(c)) for r, c in pairs)
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in range(matrix.rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(matrix.cols) if c not in matched_cols],
    )


def _penalized_pairs(cost: np.ndarray, feasible: np.ndarray):
    if cost.size == 0 or not feasible.any():
        return []
    penalty = math.fsum(cost[feasible].tolist()) + 1.0
    rows, cols = linear_sum_assignment(np.where(feasible, cost, penalty))
    return [(int(r), int(c)) for r, c in zip(rows, cols) if feasible[r, c]]


def _sub_pairs(matrix: CostMatrix, rows: List[int], cols: List[int]):
    if not rows or not cols:
        return []
    index = np.ix_(rows, cols)
    pairs = _penalized_pairs(matrix.cost[index], matrix.feasible[index])
    return [(rows[r], cols[c]) for r, c in pairs]


def _score(matrix: CostMatrix, pairs) -> Tuple[int, float]:
    return len(pairs), math.fsum(float(matrix.cost[r, c]) for r, c in pairs)


def _tied(a: Tuple[int, float], b: Tuple[int, float]) -> bool:
    return a[0] == b[0] and math.isclose(a[1], b[1], rel_tol=TIE_TOLERANCE)


def solve(matrix: CostMatrix) -> Assignment:
    """
    Maximum-cardinality, minimum-cost assignment over feasible cells.

    Infeasible cells are replaced by a penalty larger than the sum of every
    finite cost, so any assignment using one more infeasible cell costs more
    than any difference in feasible totals. The rectangular problem is then
    solved exactly and the penalized pairs are dropped again.

    Among equally good assignments the one with the lexicographically lowest
    sorted (row, col) pairs is returned: rows are fixed in order, each to the
    lowest column that still admits an optimal completion.
    """
    if matrix.rows == 0 or matrix.cols == 0 or not matrix.feasible.any():
        return _partition(matrix, [])

    feasible = matrix.feasible
    current = dict(_penalized_pairs(matrix.cost, feasible))
    best = _score(matrix, list(current.items()))

    fixed = []
    free_cols = list(range(matrix.cols))
    for r in range(matrix.rows):
        rest = list(range(r + 1, matrix.rows))
        chosen = current.get(r)
        for c in free_cols:
            if chosen is not None and c >= chosen:
                break
            if not feasible[r, c]:
                continue
            completion = _sub_pairs(matrix, rest, [j for j in free_cols if j != c])
            if _tied(_score(matrix, fixed + [(r, c)] + completion), best):
                chosen = c
                current = dict(completion)
                break
        if chosen is not None:
            fixed.append((r, chosen))
            free_cols.remove(chosen)
    return _partition(matrix, fixed)


@lru_cache(maxsize=None)
def _injections(small: int, large: int):
    return np.array(list(itertools.permutations(range(large), small)), dtype=int)


def brute_force_solve(matrix: CostMatrix) -> Assignment:
    """
    Exhaustive reference for `solve`, limited to 9x9 matrices.

    Every maximum-cardinality feasible matching extends to a full injection of
    the smaller side into the larger one, so enumerating those injections and
    dropping their infeasible pairs covers every candidate optimum. Ties go to
    the lexicographically lowest sorted (row, col) pairs, as in `solve`.
    """
    if matrix.rows > BRUTE_FORCE_LIMIT or matrix.cols > BRUTE_FORCE_LIMIT:
        raise AssignmentError(
            f"brute force is limited to {BRUTE_FORCE_LIMIT}x{BRUTE_FORCE_LIMIT},"
            f" got {matrix.rows}x{matrix.cols}"
        )
    if matrix.rows == 0 or matrix.cols == 0:
        return _partition(matrix, [])

    cost = matrix.cost
    transposed = matrix.rows > matrix.cols
    if transposed:
        cost = cost.T
    small, large = cost.shape
    injections = _injections(small, large)
    picked = cost[np.arange(small)[None, :], injections]
    feasible = np.isfinite(picked)
    cardinality = feasible.sum(axis=1)
    totals = np.where(feasible, picked, 0.0).sum(axis=1)

    best_cardinality = cardinality.max()
    lowest = totals[cardinality == best_cardinality].min()
    # same rule as math.isclose in _tied
    tied = (cardinality == best_cardinality) & (
        np.abs(totals - lowest) <= TIE_TOLERANCE * np.maximum(np.abs(totals), lowest)
    )

    def pairs_of(i):
        pairs = [(r, int(c)) for r, c in enumerate(injections[i]) if feasible[i, r]]
        if transposed:
            pairs = [(c, r) for r, c in pairs]
        return tuple(sorted(pairs))

    return _partition(matrix, min(pairs_of(i) for i in np.flatnonzero(tied)))
