"""
Routing policy interface and the shared action mask.
"""

from typing import List, Protocol, Sequence, runtime_checkable

import numpy as np

from app.models.domain import ResourceVector, UserRequest
from app.simulation.cluster import ClusterState, ServerState


@runtime_checkable
class RoutingPolicy(Protocol):
    """Chooses a server index or BLOCK for each ready request."""

    name: str

    def reset(self, seed: int) -> None:
        """Reset per-episode state (rng, cursor) before an episode starts."""
        ...

    def select(self, state: ClusterState, request: UserRequest) -> int:
        ...


def mask_actions(servers: Sequence[ServerState], demand: ResourceVector) -> List[int]:
    """
    Indices of servers able to host `demand` right now, ascending.

    An empty list means the caller must block the request.
    """
    if not servers:
        return []
    headroom = np.stack([s.capacity - s.occupancy for s in servers])
    fits = np.all(demand.as_array()[None, :] <= headroom, axis=1)
    return np.flatnonzero(fits).tolist()
