"""
Bipartite matching between gold and system extractions.
"""

from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

Pair = Tuple[int, int]


def max_weight_assignment(weights: np.ndarray) -> List[Pair]:
    """
    One-to-one assignment of rows to columns maximizing the total weight.

    Args:
        weights: Rows x columns non-negative weight matrix

    Returns:
        (row, column) pairs; rectangular matrices leave some side unmatched
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size == 0:
        return []
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def assignment_weight(weights: np.ndarray) -> float:
    """Total weight of the maximum-weight one-to-one assignment."""
    return float(sum(weights[r, c] for r, c in max_weight_assignment(weights)))


def greedy_matching(
    weights: np.ndarray,
    tie_break: Callable[[int, int], Tuple] = lambda r, c: (),
    threshold: float = 0.0,
) -> List[Pair]:
    """
    Greedy one-to-one matching by descending weight.

    Pairs with weight <= `threshold` never match. Equal weights are ordered
    by `tie_break(row, column)`, then by position.
    """
    weights = np.asarray(weights, dtype=np.float64)
    candidates = [(int(r), int(c)) for r, c in zip(*np.nonzero(weights > threshold))]
    candidates.sort(key=lambda rc: (-weights[rc], tie_break(*rc), rc))
    used_rows: set = set()
    used_cols: set = set()
    pairs: List[Pair] = []
    for r, c in candidates:
        if r in used_rows or c in used_cols:
            continue
        used_rows.add(r)
        used_cols.add(c)
        pairs.append((r, c))
    return pairs


def pair_matrix(gold: Sequence, system: Sequence, score: Callable) -> np.ndarray:
    """Matrix of score(gold[i], system[j])."""
    matrix = np.zeros((len(gold), len(system)), dtype=np.float64)
    for i, g in enumerate(gold):
        for j, e in enumerate(system):
            matrix[i, j] = score(g, e)
    return matrix
