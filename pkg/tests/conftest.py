"""Shared fixtures and builders for the test suite."""

from typing import Sequence

import pytest

from app.cli import dependencies
from app.config.settings import SimulationConfig, WorkloadConfig
from app.models.domain import Connection, ResourceVector, UserRequest
from app.simulation.cluster import ClusterState


def make_request(
    id: int = 0,
    arrival: int = 0,
    demand: Sequence[int] = (1, 1, 1, 1),
    true: int = 5,
    predicted: int = None,
) -> UserRequest:
    return UserRequest(
        id=id,
        arrival_step=arrival,
        demand=ResourceVector.from_iterable(demand),
        true_duration=true,
        predicted_duration=true if predicted is None else predicted,
    )


def occupy(state: ClusterState, server: int, demand: Sequence[int] = (1, 1, 1, 1), true: int = 50,
           predicted: int = None, count: int = 1) -> None:
    """Open `count` connections on `server` at the current clock."""
    for _ in range(count):
        request = make_request(demand=demand, true=true, predicted=predicted)
        state.servers[server].add(Connection.open(request, state.clock))


@pytest.fixture(autouse=True)
def clear_config_cache():
    dependencies.get_base_config.cache_clear()
    yield
    dependencies.get_base_config.cache_clear()


@pytest.fixture
def small_sim() -> SimulationConfig:
    """Three servers of capacity 10 per resource, 12 s steps."""
    return SimulationConfig(server_num=3, capacity=10)


@pytest.fixture
def minute_sim() -> SimulationConfig:
    """Three roomy servers with one-minute steps, so durations read directly in minutes."""
    return SimulationConfig(server_num=3, capacity=100, time_step=60)


@pytest.fixture
def tiny_workload() -> WorkloadConfig:
    """About a dozen short requests."""
    return WorkloadConfig(data_time=2, mean_req_num=1.2, max_user_duration=10)
