"""
Domain types shared by the workload, simulation and policy layers.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

RESOURCE_NAMES = ("cpu", "ram", "hdd", "bw")
NUM_RESOURCES = len(RESOURCE_NAMES)

# Routing action that sends a request to the block queue
BLOCK = -1


@dataclass(frozen=True, slots=True)
class ResourceVector:
    """Non-negative integer quantities of CPU, RAM, HDD and bandwidth."""
    cpu: int = 0
    ram: int = 0
    hdd: int = 0
    bw: int = 0

    def __post_init__(self):
        for name in RESOURCE_NAMES:
            if getattr(self, name) < 0:
                raise ValueError(f"Resource '{name}' must be non-negative, got {getattr(self, name)}")

    def __iter__(self) -> Iterator[int]:
        return iter((self.cpu, self.ram, self.hdd, self.bw))

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(a + b for a, b in zip(self, other)))

    def fits_within(self, other: "ResourceVector") -> bool:
        """True iff every component is <= the matching component of `other`."""
        return all(a <= b for a, b in zip(self, other))

    def as_array(self) -> np.ndarray:
        return np.array(tuple(self), dtype=np.int64)

    @classmethod
    def from_iterable(cls, values: Iterable[int]) -> "ResourceVector":
        return cls(*(int(v) for v in values))

    @classmethod
    def uniform(cls, value: int) -> "ResourceVector":
        return cls(value, value, value, value)


@dataclass(frozen=True, slots=True)
class UserRequest:
    """
    A connection request waiting to be routed.

    Durations are expressed in simulation timesteps.
    """
    id: int
    arrival_step: int
    demand: ResourceVector
    true_duration: int
    predicted_duration: int

    def with_prediction(self, predicted_duration: int) -> "UserRequest":
        return UserRequest(
            id=self.id,
            arrival_step=self.arrival_step,
            demand=self.demand,
            true_duration=self.true_duration,
            predicted_duration=predicted_duration,
        )


@dataclass(frozen=True, slots=True)
class Connection:
    """A live connection occupying its demand on one server until true_end_step."""
    request_id: int
    demand: ResourceVector
    start_step: int
    true_end_step: int
    predicted_end_step: int

    @classmethod
    def open(cls, request: UserRequest, clock: int) -> "Connection":
        return cls(
            request_id=request.id,
            demand=request.demand,
            start_step=clock,
            true_end_step=clock + request.true_duration,
            predicted_end_step=clock + request.predicted_duration,
        )
