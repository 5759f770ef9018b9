"""
Discrete-event episode driver.

Each timestep releases finished connections, re-queues blocked requests ahead
of new arrivals, routes the ready queue one request at a time and records the
cluster snapshot used by the objectives.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from app.config.settings import SimulationConfig
from app.core.exceptions import SimulationError
from app.models.domain import BLOCK, Connection, UserRequest
from app.simulation.cluster import ClusterState, feasible

if TYPE_CHECKING:
    from app.policies.base import RoutingPolicy

logger = logging.getLogger("connection_router")


@dataclass
class StepLog:
    """What happened during one timestep."""
    clock: int
    released: int = 0
    arrived: int = 0
    routed: int = 0
    blocked: int = 0
    aborted: bool = False


@dataclass
class EpisodeResult:
    """
    Recorded trajectory of one episode.

    utilization is (T, N, 4) in [0, 1]; remaining and conn_counts are (T, N),
    remaining being the ground-truth max remaining duration in timesteps.
    """
    utilization: np.ndarray
    remaining: np.ndarray
    conn_counts: np.ndarray
    time_step: int
    terminated_early: bool
    blocked_total: int
    requests_total: int
    completed: int
    in_flight: int
    blocked_lost: int
    unarrived: int

    @property
    def num_timesteps(self) -> int:
        return int(self.remaining.shape[0])

    @property
    def num_servers(self) -> int:
        return int(self.remaining.shape[1])

    @property
    def remaining_minutes(self) -> np.ndarray:
        return self.remaining * (self.time_step / 60.0)


class EpisodeRecorder:
    """Snapshots and request accounting for a running episode."""

    def __init__(self):
        self.utilization: List[np.ndarray] = []
        self.remaining: List[np.ndarray] = []
        self.conn_counts: List[np.ndarray] = []
        self.completed = 0
        self.blocked_total = 0
        self.lost = 0
        self.terminated_early = False

    def snapshot(self, state: ClusterState) -> None:
        occupancy = state.occupancy_matrix()
        if np.any(occupancy > state.capacity_matrix()):
            raise SimulationError(f"Capacity exceeded at clock {state.clock}")
        self.utilization.append(occupancy / state.capacity_matrix())
        self.remaining.append(np.array([s.max_remaining_true(state.clock) for s in state.servers], dtype=np.int64))
        self.conn_counts.append(np.array([s.num_connections for s in state.servers], dtype=np.int64))


def _push_blocked(state: ClusterState, request: UserRequest, recorder: EpisodeRecorder) -> bool:
    """Append to the block queue; False signals overflow (the request is lost)."""
    if len(state.block_queue) >= state.config.block_queue_size:
        recorder.lost += 1
        return False
    state.block_queue.append(request)
    recorder.blocked_total += 1
    return True


def _abort(state: ClusterState, recorder: EpisodeRecorder, log: StepLog) -> StepLog:
    recorder.terminated_early = True
    recorder.lost += len(state.ready_queue) + len(state.block_queue)
    state.ready_queue.clear()
    state.block_queue.clear()
    log.aborted = True
    logger.debug(f"Block queue overflow at clock {state.clock}; episode aborted")
    return log


def step(
    state: ClusterState,
    arrivals: Sequence[UserRequest],
    policy: "RoutingPolicy",
    recorder: Optional[EpisodeRecorder] = None,
) -> StepLog:
    """
    Advance the cluster by one timestep.

    Args:
        state: Cluster state, updated in place
        arrivals: Requests arriving at this timestep
        policy: Routing policy queried once per ready request
        recorder: Receives the snapshot and request accounting (a throwaway one if None)

    Returns:
        StepLog: Per-step log; `aborted` is set when the block queue overflows
    """
    recorder = recorder if recorder is not None else EpisodeRecorder()
    clock = state.clock
    log = StepLog(clock=clock, arrived=len(arrivals))

    # (1) passive disconnection
    released = sum(server.release_due(clock) for server in state.servers)
    recorder.completed += released
    log.released = released

    # (2) blocked requests go first, then arrivals; overflow cascades to the block queue
    waiting = list(state.block_queue) + list(arrivals)
    state.block_queue.clear()
    for position, request in enumerate(waiting):
        if len(state.ready_queue) < state.config.ready_queue_size:
            state.ready_queue.append(request)
        elif not _push_blocked(state, request, recorder):
            recorder.lost += len(waiting) - position - 1
            return _abort(state, recorder, log)

    # (3) sequential routing with immediate state update
    while state.ready_queue:
        request = state.ready_queue.popleft()
        action = policy.select(state, request)
        if action == BLOCK:
            log.blocked += 1
            if not _push_blocked(state, request, recorder):
                return _abort(state, recorder, log)
            continue
        if not 0 <= action < state.num_servers or not feasible(state.servers[action], request.demand):
            raise SimulationError(f"Policy returned infeasible action {action} for request {request.id}")
        state.servers[action].add(Connection.open(request, clock))
        log.routed += 1

    # (4) snapshot, (5) advance
    recorder.snapshot(state)
    state.clock += 1
    return log


def run_episode(
    requests: Sequence[UserRequest],
    config: SimulationConfig,
    policy: "RoutingPolicy",
    seed: int = 0,
) -> EpisodeResult:
    """
    Simulate until every request is served and disconnected, or the block queue overflows.

    Args:
        requests: Requests sorted by arrival step
        config: Data center configuration
        policy: Routing policy; reset with `seed` before the episode
        seed: Feeds stochastic policies only

    Returns:
        EpisodeResult: Full trajectory and accounting
    """
    if any(a.arrival_step > b.arrival_step for a, b in zip(requests, requests[1:])):
        raise SimulationError("Requests must be sorted by arrival_step")
    if requests and requests[0].arrival_step < 0:
        raise SimulationError("Arrival steps must be non-negative")

    policy.reset(seed)
    state = ClusterState(config)
    recorder = EpisodeRecorder()
    cursor = 0
    total = len(requests)

    while True:
        start = cursor
        while cursor < total and requests[cursor].arrival_step == state.clock:
            cursor += 1
        log = step(state, requests[start:cursor], policy, recorder)
        if log.aborted:
            break
        if cursor == total and state.live_connections == 0:
            if not state.block_queue:
                break
            if log.routed == 0:
                # nothing left that could free capacity, the policy will never place these
                logger.warning(f"Episode stalled at clock {state.clock} with {len(state.block_queue)} blocked requests")
                _abort(state, recorder, log)
                break

    num_servers = config.server_num
    result = EpisodeResult(
        utilization=np.array(recorder.utilization, dtype=np.float64).reshape(-1, num_servers, 4),
        remaining=np.array(recorder.remaining, dtype=np.int64).reshape(-1, num_servers),
        conn_counts=np.array(recorder.conn_counts, dtype=np.int64).reshape(-1, num_servers),
        time_step=config.time_step,
        terminated_early=recorder.terminated_early,
        blocked_total=recorder.blocked_total,
        requests_total=total,
        completed=recorder.completed,
        in_flight=state.live_connections,
        blocked_lost=recorder.lost,
        unarrived=total - cursor,
    )
    accounted = result.completed + result.in_flight + result.blocked_lost + result.unarrived
    if accounted != total:
        raise SimulationError(f"Request conservation violated: {accounted} accounted of {total}")
    logger.debug(
        f"Episode finished after {result.num_timesteps} steps: completed={result.completed}, "
        f"blocked={result.blocked_total}, aborted={result.terminated_early}"
    )
    return result
