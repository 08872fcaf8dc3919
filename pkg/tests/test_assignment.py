import math
import time

import numpy as np
import pytest

from platefusion.assignment import (
    INFEASIBLE,
    AssignmentError,
    CostMatrix,
    brute_force_solve,
    build_cost_matrix,
    solve,
)
from platefusion.geometry import Point2

INF = INFEASIBLE


def random_matrix(rng, max_size=7, infeasible=0.2):
    rows, cols = rng.integers(0, max_size + 1, size=2)
    cost = rng.uniform(0.0, 100.0, size=(rows, cols))
    cost[rng.random((rows, cols)) < infeasible] = INF
    return CostMatrix(cost)


def check_partition(matrix, assignment):
    rows = [r for r, _ in assignment.pairs] + assignment.unmatched_rows
    cols = [c for _, c in assignment.pairs] + assignment.unmatched_cols
    assert sorted(rows) == list(range(matrix.rows))
    assert sorted(cols) == list(range(matrix.cols))
    for r, c in assignment.pairs:
        assert math.isfinite(matrix.cost[r, c])


@pytest.mark.parametrize(
    "tracks, dets, epsilon, expected",
    [
        ([(0, 0)], [(3, 4)], 6, [[5.0]]),
        ([(0, 0)], [(3, 4)], 5, [[INF]]),
        ([(0, 0), (10, 0)], [(1, 0)], 5, [[1.0], [INF]]),
    ],
)
def test_build_cost_matrix(tracks, dets, epsilon, expected):
    matrix = build_cost_matrix(
        [Point2(*t) for t in tracks], [Point2(*d) for d in dets], epsilon
    )
    assert matrix.cost.tolist() == expected


def test_build_cost_matrix_empty():
    matrix = build_cost_matrix([], [Point2(1, 1), Point2(2, 2)], 3.0)
    assert (matrix.rows, matrix.cols) == (0, 2)
    matrix = build_cost_matrix([Point2(1, 1)], [], 3.0)
    assert (matrix.rows, matrix.cols) == (1, 0)


@pytest.mark.parametrize("epsilon", [0, -1.0])
def test_build_cost_matrix_epsilon(epsilon):
    with pytest.raises(AssignmentError):
        build_cost_matrix([Point2(0, 0)], [Point2(0, 0)], epsilon)


def test_cost_matrix_rejects_negative():
    with pytest.raises(AssignmentError):
        CostMatrix([[1.0, -2.0]])
    with pytest.raises(AssignmentError):
        CostMatrix([[math.nan]])


@pytest.mark.parametrize("solver", [solve, brute_force_solve])
@pytest.mark.parametrize(
    "cost, pairs, total",
    [
        ([[1, 2], [2, 4]], [(0, 1), (1, 0)], 4.0),
        ([[0, 9, 9], [9, 0, 9], [9, 9, 0]], [(0, 0), (1, 1), (2, 2)], 0.0),
        ([[INF, 1], [INF, 2]], [(0, 1)], 1.0),
    ],
)
def test_solve(solver, cost, pairs, total):
    matrix = CostMatrix(cost)
    assignment = solver(matrix)
    assert assignment.pairs == pairs
    assert assignment.total_cost(matrix) == total
    check_partition(matrix, assignment)


def test_solve_partition():
    matrix = CostMatrix([[INF, 1], [INF, 2]])
    assignment = solve(matrix)
    assert assignment.unmatched_rows == [1]
    assert assignment.unmatched_cols == [0]


def test_solve_prefers_cardinality():
    # the cheap pair would leave two rows unmatched
    matrix = CostMatrix([[1, 50], [2, INF]])
    assignment = solve(matrix)
    assert assignment.pairs == [(0, 1), (1, 0)]


@pytest.mark.parametrize("shape", [(0, 0), (0, 3), (3, 0)])
def test_solve_empty(shape):
    matrix = CostMatrix(np.zeros(shape))
    for solver in (solve, brute_force_solve):
        assignment = solver(matrix)
        assert assignment.pairs == []
        assert assignment.unmatched_rows == list(range(shape[0]))
        assert assignment.unmatched_cols == list(range(shape[1]))


def test_solve_all_infeasible():
    matrix = CostMatrix([[INF, INF], [INF, INF]])
    assignment = solve(matrix)
    assert assignment.pairs == []
    assert assignment.unmatched_rows == [0, 1]


def test_solve_matches_brute_force():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for _ in range(1000):
        matrix = random_matrix(rng)
        fast = solve(matrix)
        reference = brute_force_solve(matrix)
        check_partition(matrix, fast)
        check_partition(matrix, reference)
        assert len(fast.pairs) == len(reference.pairs)
        assert fast.total_cost(matrix) == reference.total_cost(matrix)
        assert fast.pairs == reference.pairs
    assert time.perf_counter() - start < 5


@pytest.mark.parametrize("solver", [solve, brute_force_solve])
@pytest.mark.parametrize(
    "cost, pairs",
    [
        ([[1, 2, 0], [1, 0, 1], [2, 1, 1]], [(0, 0), (1, 1), (2, 2)]),
        ([[0, 0], [0, 0]], [(0, 0), (1, 1)]),
        ([[5, 5, 5]], [(0, 0)]),
        ([[INF, 3], [INF, 3], [2, INF]], [(0, 1), (2, 0)]),
    ],
)
def test_solve_ties_lowest_pairs(solver, cost, pairs):
    assert solver(CostMatrix(cost)).pairs == pairs


def test_solve_ties_match_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(500):
        rows, cols = rng.integers(1, 6, size=2)
        cost = rng.integers(0, 4, size=(rows, cols)).astype(float)
        cost[rng.random((rows, cols)) < 0.2] = INF
        matrix = CostMatrix(cost)
        assert solve(matrix).pairs == brute_force_solve(matrix).pairs


def test_solve_permutation_equivariance():
    rng = np.random.default_rng(5)
    for _ in range(50):
        matrix = random_matrix(rng, max_size=6)
        row_perm = rng.permutation(matrix.rows)
        col_perm = rng.permutation(matrix.cols)
        permuted = CostMatrix(matrix.cost[row_perm][:, col_perm])
        expected = sorted((int(row_perm[r]), int(col_perm[c])) for r, c in solve(permuted).pairs)
        assert expected == solve(matrix).pairs


@pytest.mark.parametrize("scale", [0.1, 3.0, 1000.0])
def test_solve_scale_invariance(scale):
    rng = np.random.default_rng(11)
    for _ in range(50):
        matrix = random_matrix(rng, max_size=6)
        scaled = CostMatrix(matrix.cost * scale)
        assert solve(scaled).pairs == solve(matrix).pairs


def test_brute_force_limit():
    with pytest.raises(AssignmentError):
        brute_force_solve(CostMatrix(np.ones((10, 3))))
