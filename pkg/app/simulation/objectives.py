"""
Episode objectives and their per-step forms.

Balance is the resource-averaged population standard deviation of server
utilization; idleness is the server-averaged maximum remaining connection
duration in minutes. Both are minimised. Balance is computed on normalised
utilization; reports multiply it by capacity to express it in resource units.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from app.core.exceptions import ObjectiveError
from app.models.schemas import FitnessRecord
from app.simulation.engine import EpisodeResult


@dataclass(frozen=True)
class Fitness:
    """Objective pair (f_balance normalised, f_idle in minutes)."""
    f_balance: float
    f_idle: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f_balance, self.f_idle], dtype=np.float64)

    def in_units(self, capacity: float) -> FitnessRecord:
        return FitnessRecord(f_balance=self.f_balance * capacity, f_idle=self.f_idle)


@dataclass(frozen=True)
class Normalizer:
    """Per-objective min/max for min-max scaling."""
    balance_min: float
    balance_max: float
    idle_min: float
    idle_max: float

    @classmethod
    def from_fitnesses(cls, fitnesses: Iterable[Fitness]) -> "Normalizer":
        values = np.array([f.as_array() for f in fitnesses], dtype=np.float64)
        if values.size == 0:
            raise ObjectiveError("Cannot build a normalizer from no fitness values")
        lo, hi = values.min(axis=0), values.max(axis=0)
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def balance_step(snapshot: np.ndarray) -> float:
    """(1/R) * sum_r sqrt(sum_i (x_ri - mu_r)^2 / N) for an (N, R) utilization snapshot."""
    snapshot = np.asarray(snapshot, dtype=np.float64)
    if snapshot.ndim != 2 or snapshot.shape[0] == 0:
        raise ObjectiveError(f"Balance needs an (N, R) snapshot with N >= 1, got shape {snapshot.shape}")
    return float(np.mean(np.std(snapshot, axis=0)))


def idle_step(remaining: np.ndarray) -> float:
    """Mean over servers of the max remaining duration (minutes in, minutes out)."""
    remaining = np.asarray(remaining, dtype=np.float64)
    if remaining.size == 0:
        raise ObjectiveError("Idleness needs at least one server")
    return float(np.mean(remaining))


def episode_fitness(result: EpisodeResult) -> Fitness:
    """
    Time-averaged objectives of an episode.

    Averages over exactly the recorded snapshots.
    """
    if result.num_timesteps == 0:
        raise ObjectiveError("Episode recorded no timesteps")
    balance = np.array([balance_step(snapshot) for snapshot in result.utilization])
    idle = np.array([idle_step(remaining) for remaining in result.remaining_minutes])
    return Fitness(f_balance=float(balance.mean()), f_idle=float(idle.mean()))


def _scaled(value: float, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.0
    return (value - lo) / (hi - lo)


def scalarize(fitness: Fitness, w1: float = 0.5, w2: float = 0.5, normalizer: Normalizer = None) -> float:
    """
    Weighted sum of min-max normalised objectives.

    Used for convergence curves and diagnostics only. A degenerate objective
    range contributes 0.
    """
    if w1 < 0 or w2 < 0:
        raise ObjectiveError("Scalarization weights must be non-negative")
    if normalizer is None:
        raise ObjectiveError("A normalizer is required")
    return (
        w1 * _scaled(fitness.f_balance, normalizer.balance_min, normalizer.balance_max)
        + w2 * _scaled(fitness.f_idle, normalizer.idle_min, normalizer.idle_max)
    )
