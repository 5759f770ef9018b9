"""
Non-dominated sorting, crowding distance and elitist selection (minimisation).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.core.exceptions import TrainingError
from app.policies.neural import PolicyGenome
from app.simulation.objectives import Fitness


@dataclass
class Individual:
    """A genome with its evaluation and NSGA-II bookkeeping."""
    id: int
    genome: PolicyGenome
    fitness: Optional[Fitness] = None
    rank: int = 0
    crowding: float = 0.0
    aborted: bool = False


def dominates(a: Fitness, b: Fitness) -> bool:
    """a is no worse than b in both objectives and strictly better in one."""
    pa, pb = a.as_array(), b.as_array()
    return bool(np.all(pa <= pb) and np.any(pa < pb))


def nondominated_fronts(points: np.ndarray) -> List[List[int]]:
    """
    Fast non-dominated sort on an (M, 2) objective array.

    Returns:
        List[List[int]]: Fronts of row indices, best first; indices ascend within a front
    """
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    if m == 0:
        return []
    le = np.all(points[:, None, :] <= points[None, :, :], axis=2)
    lt = np.any(points[:, None, :] < points[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    domination_count = dom.sum(axis=0)
    fronts: List[List[int]] = []
    current = np.flatnonzero(domination_count == 0).tolist()
    while current:
        fronts.append(current)
        following = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    following.append(int(j))
        current = sorted(following)
    return fronts


def fast_nondominated_sort(population: Sequence[Individual]) -> List[List[Individual]]:
    """Partition an evaluated population into fronts and assign 1-based ranks."""
    if any(ind.fitness is None for ind in population):
        raise TrainingError("Every individual must be evaluated before sorting")
    points = np.array([ind.fitness.as_array() for ind in population]).reshape(-1, 2)
    fronts = []
    for rank, indices in enumerate(nondominated_fronts(points), start=1):
        for i in indices:
            population[i].rank = rank
        fronts.append([population[i] for i in indices])
    return fronts


def crowding_distances(points: np.ndarray) -> np.ndarray:
    """
    Crowding distance of each row of a front's (M, K) objective array.

    Boundary points of a non-degenerate objective are infinite; a degenerate
    objective range adds nothing; fronts of one or two points are all infinite.
    """
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    distance = np.zeros(m, dtype=np.float64)
    if m <= 2:
        distance[:] = np.inf
        return distance
    for k in range(points.shape[1]):
        order = np.argsort(points[:, k], kind="stable")
        values = points[order, k]
        span = values[-1] - values[0]
        if span == 0:
            continue
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        distance[order[1:-1]] += (values[2:] - values[:-2]) / span
    return distance


def crowding_distance(front: Sequence[Individual]) -> np.ndarray:
    """Compute and store the crowding distance of every member of `front`."""
    if not front:
        raise TrainingError("Crowding distance needs a non-empty front")
    distances = crowding_distances(np.array([ind.fitness.as_array() for ind in front]))
    for ind, d in zip(front, distances):
        ind.crowding = float(d)
    return distances


def select_elites(population: Sequence[Individual], elite_count: int) -> List[Individual]:
    """
    Fill `elite_count` slots by front rank, breaking the last admitted front
    by descending crowding distance (stable on population order).
    """
    if elite_count > len(population):
        raise TrainingError(f"elite_count {elite_count} exceeds population size {len(population)}")
    elites: List[Individual] = []
    for front in fast_nondominated_sort(population):
        crowding_distance(front)
        if len(elites) + len(front) <= elite_count:
            elites.extend(front)
        else:
            ranked = sorted(front, key=lambda ind: -ind.crowding)
            elites.extend(ranked[: elite_count - len(elites)])
        if len(elites) == elite_count:
            break
    return elites
