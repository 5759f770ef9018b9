"""
Front quality metrics for two minimised objectives.
"""

from typing import List

import numpy as np


def pareto_filter(points: np.ndarray) -> List[int]:
    """Indices of the rows dominated by no other row (duplicates are all kept)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    le = np.all(points[:, None, :] <= points[None, :, :], axis=2)
    lt = np.any(points[:, None, :] < points[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return np.flatnonzero(~dominated).tolist()


def hypervolume_2d(points: np.ndarray, reference: np.ndarray) -> float:
    """
    Area dominated by `points` and bounded by `reference`.

    Points not strictly better than the reference in both objectives add nothing.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    reference = np.asarray(reference, dtype=np.float64)
    inside = points[np.all(points < reference, axis=1)]
    if len(inside) == 0:
        return 0.0
    front = inside[pareto_filter(inside)]
    front = front[np.lexsort((front[:, 1], front[:, 0]))]
    xs = np.append(front[1:, 0], reference[0])
    # a sorted non-dominated front has strictly falling f2, so the slabs do not overlap
    return float(np.sum((xs - front[:, 0]) * (reference[1] - front[:, 1])))
