"""
Baseline routers.

Every router masks first: only servers with enough headroom are candidates,
and an empty candidate set yields BLOCK. Ties go to the lowest server index.
"""

from typing import Tuple

import numpy as np

from app.models.domain import BLOCK, UserRequest
from app.policies.base import mask_actions
from app.simulation.cluster import ClusterState


def random_route(state: ClusterState, request: UserRequest, rng: np.random.Generator) -> int:
    feasible = mask_actions(state.servers, request.demand)
    if not feasible:
        return BLOCK
    return int(feasible[rng.integers(len(feasible))])


def round_robin_route(state: ClusterState, request: UserRequest, cursor: int) -> Tuple[int, int]:
    """
    Next feasible server at or after `cursor`, scanning cyclically.

    Returns:
        Tuple[int, int]: (action, new cursor); the cursor only moves when a server is chosen
    """
    feasible = set(mask_actions(state.servers, request.demand))
    if not feasible:
        return BLOCK, cursor
    n = state.num_servers
    for shift in range(n):
        candidate = (cursor + shift) % n
        if candidate in feasible:
            return candidate, (candidate + 1) % n
    return BLOCK, cursor


def least_connection_route(state: ClusterState, request: UserRequest) -> int:
    feasible = mask_actions(state.servers, request.demand)
    if not feasible:
        return BLOCK
    counts = np.array([state.servers[i].num_connections for i in feasible])
    return int(feasible[int(np.argmin(counts))])


def least_duration_gap_route(state: ClusterState, request: UserRequest) -> int:
    """
    Feasible server whose longest predicted remaining connection is closest
    to the request's predicted duration (empty servers count as 0).
    """
    feasible = mask_actions(state.servers, request.demand)
    if not feasible:
        return BLOCK
    gaps = np.array([
        abs(state.servers[i].max_remaining_predicted(state.clock) - request.predicted_duration)
        for i in feasible
    ])
    return int(feasible[int(np.argmin(gaps))])


class RandomPolicy:
    name = "random"

    def __init__(self):
        self._rng = np.random.default_rng(0)

    def reset(self, seed: int) -> None:
        self._rng = np.random.default_rng(seed)

    def select(self, state: ClusterState, request: UserRequest) -> int:
        return random_route(state, request, self._rng)


class RoundRobinPolicy:
    name = "round_robin"

    def __init__(self):
        self.cursor = 0

    def reset(self, seed: int) -> None:
        self.cursor = 0

    def select(self, state: ClusterState, request: UserRequest) -> int:
        action, self.cursor = round_robin_route(state, request, self.cursor)
        return action


class LeastConnectionPolicy:
    name = "least_connection"

    def reset(self, seed: int) -> None:
        pass

    def select(self, state: ClusterState, request: UserRequest) -> int:
        return least_connection_route(state, request)


class LeastDurationGapPolicy:
    name = "least_duration_gap"

    def reset(self, seed: int) -> None:
        pass

    def select(self, state: ClusterState, request: UserRequest) -> int:
        return least_duration_gap_route(state, request)
