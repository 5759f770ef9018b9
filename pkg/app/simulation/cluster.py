"""
Server and cluster state of the virtual data center.
"""

from collections import deque
from typing import Deque, List, Optional, Tuple

import numpy as np

from app.config.settings import SimulationConfig
from app.core.exceptions import SimulationError
from app.models.domain import NUM_RESOURCES, Connection, ResourceVector, UserRequest


class ServerState:
    """
    One server and its live connections.

    Occupancy is kept incrementally; per-connection arrays are rebuilt lazily
    after the connection set changes.
    """

    def __init__(self, index: int, capacity: ResourceVector):
        self.index = index
        self.capacity = capacity.as_array()
        self.connections: List[Connection] = []
        self.occupancy = np.zeros(NUM_RESOURCES, dtype=np.int64)
        self._arrays: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    @property
    def num_connections(self) -> int:
        return len(self.connections)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(demands k x 4, predicted end steps, true end steps) of live connections."""
        if self._arrays is None:
            k = len(self.connections)
            demands = np.array([tuple(c.demand) for c in self.connections], dtype=np.float64).reshape(k, NUM_RESOURCES)
            predicted_end = np.fromiter((c.predicted_end_step for c in self.connections), dtype=np.int64, count=k)
            true_end = np.fromiter((c.true_end_step for c in self.connections), dtype=np.int64, count=k)
            self._arrays = (demands, predicted_end, true_end)
        return self._arrays

    def add(self, connection: Connection) -> None:
        demand = connection.demand.as_array()
        if np.any(self.occupancy + demand > self.capacity):
            raise SimulationError(
                f"Connection {connection.request_id} would exceed capacity of server {self.index}"
            )
        self.connections.append(connection)
        self.occupancy += demand
        self._arrays = None

    def release_due(self, clock: int) -> int:
        """Drop connections whose true end step has been reached; returns how many."""
        if not self.connections:
            return 0
        _, _, true_end = self.arrays()
        if true_end.min() > clock:
            return 0
        if true_end.min() < clock:
            raise SimulationError(f"Server {self.index} holds a connection past its end step at clock {clock}")
        kept = [c for c in self.connections if c.true_end_step > clock]
        released = len(self.connections) - len(kept)
        self.connections = kept
        self.occupancy = np.zeros(NUM_RESOURCES, dtype=np.int64)
        for connection in kept:
            self.occupancy += connection.demand.as_array()
        self._arrays = None
        return released

    def max_remaining_true(self, clock: int) -> int:
        if not self.connections:
            return 0
        return max(int(self.arrays()[2].max()) - clock, 0)

    def max_remaining_predicted(self, clock: int) -> int:
        if not self.connections:
            return 0
        return max(int(self.arrays()[1].max()) - clock, 0)


class ClusterState:
    """Servers, bounded ready/block queues and the simulation clock."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        capacity = config.capacity_vector
        self.servers: List[ServerState] = [ServerState(i, capacity) for i in range(config.server_num)]
        self.ready_queue: Deque[UserRequest] = deque()
        self.block_queue: Deque[UserRequest] = deque()
        self.clock = 0

    @property
    def num_servers(self) -> int:
        return len(self.servers)

    @property
    def live_connections(self) -> int:
        return sum(s.num_connections for s in self.servers)

    def occupancy_matrix(self) -> np.ndarray:
        return np.stack([s.occupancy for s in self.servers])

    def capacity_matrix(self) -> np.ndarray:
        return np.stack([s.capacity for s in self.servers])

    def utilization(self) -> np.ndarray:
        """(N, 4) occupancy normalised by capacity."""
        return self.occupancy_matrix() / self.capacity_matrix()


def feasible(server: ServerState, demand: ResourceVector) -> bool:
    """True iff the server can host `demand` on top of its current occupancy."""
    return bool(np.all(server.occupancy + demand.as_array() <= server.capacity))


def lookahead_features(server: ServerState, clock: int, config: SimulationConfig) -> np.ndarray:
    """
    Predicted state of a server over the look-ahead window.

    Returns 4h + 1 values: for each future offset k (offset-major), the
    predicted utilization of cpu, ram, hdd and bw from connections whose
    predicted end lies beyond clock + offset_k; then the largest predicted
    remainder past the h-th offset, normalised by the predicted range.
    """
    offsets = config.lookahead_offsets
    features = np.zeros(NUM_RESOURCES * len(offsets) + 1, dtype=np.float64)
    if not server.connections:
        return features

    demands, predicted_end, _ = server.arrays()
    alive = predicted_end[:, None] > (clock + offsets)[None, :]
    predicted_use = alive.T.astype(np.float64) @ demands
    features[:-1] = (predicted_use / server.capacity).reshape(-1)
    remainder = int(predicted_end.max()) - (clock + int(offsets[-1]))
    features[-1] = max(remainder, 0) / config.predicted_range_steps
    return features
