"""
Synthetic workload generation.

Requests arrive as a Poisson stream per timestep with uniform integer demands
and uniform integer-minute durations; durations are stored in timesteps.
"""

import logging
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import truncnorm

from app.config.settings import WorkloadConfig
from app.core.exceptions import WorkloadError
from app.models.domain import NUM_RESOURCES, ResourceVector, UserRequest
from app.utils.seeding import derive_seed

logger = logging.getLogger("connection_router")

# Prediction noise is truncated at +/- this many standard deviations
NOISE_TRUNCATION = 3.0


def _minutes_to_steps(minutes: np.ndarray, time_step: int) -> np.ndarray:
    return np.ceil(np.round(minutes * 60.0 / time_step, 9)).astype(np.int64)


def _build_requests(
    ids: np.ndarray,
    arrivals: np.ndarray,
    demands: np.ndarray,
    true_durations: np.ndarray,
    predicted_durations: np.ndarray,
) -> List[UserRequest]:
    return [
        UserRequest(
            id=int(i),
            arrival_step=int(a),
            demand=ResourceVector(int(d[0]), int(d[1]), int(d[2]), int(d[3])),
            true_duration=int(t),
            predicted_duration=int(p),
        )
        for i, a, d, t, p in zip(ids, arrivals, demands, true_durations, predicted_durations)
    ]


def _as_arrays(requests: Sequence[UserRequest]):
    n = len(requests)
    ids = np.fromiter((r.id for r in requests), dtype=np.int64, count=n)
    arrivals = np.fromiter((r.arrival_step for r in requests), dtype=np.int64, count=n)
    demands = np.array([tuple(r.demand) for r in requests], dtype=np.int64).reshape(n, NUM_RESOURCES)
    true_durations = np.fromiter((r.true_duration for r in requests), dtype=np.int64, count=n)
    predicted = np.fromiter((r.predicted_duration for r in requests), dtype=np.int64, count=n)
    return ids, arrivals, demands, true_durations, predicted


def _truncated_noise_steps(rng: np.random.Generator, sigma: float, size: int, time_step: int) -> np.ndarray:
    """Gaussian noise in minutes, truncated at 3 sigma, converted to fractional steps."""
    noise_minutes = truncnorm.rvs(
        -NOISE_TRUNCATION, NOISE_TRUNCATION, loc=0.0, scale=sigma, size=size, random_state=rng
    )
    return np.asarray(noise_minutes, dtype=np.float64) * 60.0 / time_step


def generate_workload(config: WorkloadConfig) -> List[UserRequest]:
    """
    Generate a synthetic request stream.

    Args:
        config: Workload parameters; `config.seed` fixes every draw

    Returns:
        List[UserRequest]: Requests ordered by arrival step, then id. Predicted
        durations equal true durations (noise is applied separately).
    """
    rng = np.random.default_rng(config.seed)
    steps = config.num_arrival_steps
    counts = rng.poisson(config.mean_req_num, size=steps) if config.mean_req_num > 0 else np.zeros(steps, dtype=np.int64)
    total = int(counts.sum())

    arrivals = np.repeat(np.arange(steps, dtype=np.int64), counts)
    demands = rng.integers(config.min_res_req, config.max_res_req, size=(total, NUM_RESOURCES), endpoint=True)
    minutes = rng.integers(config.min_user_duration, config.max_user_duration, size=total, endpoint=True)
    durations = _minutes_to_steps(minutes, config.time_step)

    requests = _build_requests(np.arange(total), arrivals, demands, durations, durations)
    logger.debug(f"Generated {total} requests over {steps} arrival steps (seed={config.seed})")
    return requests


def apply_prediction_noise(
    requests: Sequence[UserRequest],
    sigma: float,
    seed: int,
    config: Optional[WorkloadConfig] = None,
) -> List[UserRequest]:
    """
    Perturb predicted durations with truncated Gaussian noise.

    predicted = true + e, e ~ N(0, sigma^2) truncated to [-3 sigma, 3 sigma]
    (sigma in minutes), rounded to whole steps and clamped into the configured
    duration range. True durations are untouched.

    Args:
        requests: Requests to perturb
        sigma: Noise standard deviation in minutes
        seed: Seed for the noise stream
        config: Supplies time_step and the duration range (defaults if None)

    Returns:
        List[UserRequest]: New request list
    """
    if sigma < 0:
        raise WorkloadError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0 or not requests:
        return list(requests)

    config = config or WorkloadConfig()
    rng = np.random.default_rng(seed)
    ids, arrivals, demands, true_durations, _ = _as_arrays(requests)
    noise = _truncated_noise_steps(rng, sigma, len(requests), config.time_step)
    predicted = np.rint(true_durations + noise).astype(np.int64)
    predicted = np.clip(predicted, config.min_duration_steps, config.max_duration_steps)
    return _build_requests(ids, arrivals, demands, true_durations, predicted)


def _mean_duration_steps(config: WorkloadConfig) -> float:
    minutes = np.arange(config.min_user_duration, config.max_user_duration + 1)
    return float(_minutes_to_steps(minutes, config.time_step).mean())


def expected_load(config: WorkloadConfig, server_num: int, capacity: Sequence[int]) -> float:
    """
    Expected steady-state load in percent.

    Load = arrivals per step x mean duration (steps) x mean demand per resource,
    divided by total capacity per resource (Little's law on live connections).
    """
    mean_demand = (config.min_res_req + config.max_res_req) / 2.0
    total_capacity = server_num * float(np.mean(capacity))
    return 100.0 * config.mean_req_num * _mean_duration_steps(config) * mean_demand / total_capacity


def mean_req_num_for_load(
    load_pct: float,
    config: WorkloadConfig,
    server_num: int,
    capacity: Sequence[int],
) -> float:
    """Arrival rate per timestep that yields `load_pct` under `expected_load`."""
    if load_pct < 0:
        raise WorkloadError(f"load must be >= 0, got {load_pct}")
    mean_demand = (config.min_res_req + config.max_res_req) / 2.0
    if mean_demand == 0:
        raise WorkloadError("Load is undefined when every demand is zero")
    total_capacity = server_num * float(np.mean(capacity))
    return load_pct / 100.0 * total_capacity / (_mean_duration_steps(config) * mean_demand)


def sample_requests(requests: Sequence[UserRequest], count: int, seed: int) -> List[UserRequest]:
    """
    Randomly pick `count` requests (all if fewer), keep arrival order and
    re-number ids from 0.
    """
    if count < 0:
        raise WorkloadError(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(requests), size=min(count, len(requests)), replace=False))
    ids, arrivals, demands, true_durations, predicted = _as_arrays([requests[i] for i in picked])
    order = np.lexsort((ids, arrivals))
    return _build_requests(
        np.arange(len(order)), arrivals[order], demands[order], true_durations[order], predicted[order]
    )


def disturb_workload(
    requests: Sequence[UserRequest],
    config: WorkloadConfig,
    seed: int,
    arrival_jitter_steps: int = 0,
    demand_jitter: int = 0,
    duration_sigma: float = 0.0,
) -> List[UserRequest]:
    """
    Derive a test scenario from a picked trace by jittering it.

    Args:
        requests: Source requests
        config: Supplies time_step, demand range and duration range for clamping
        seed: Seed for the disturbance
        arrival_jitter_steps: Arrivals shift uniformly in [-j, j] steps (floored at 0)
        demand_jitter: Each demand component shifts uniformly in [-j, j] units
        duration_sigma: True durations get truncated Gaussian noise (minutes);
            predicted durations move by the same amount

    Returns:
        List[UserRequest]: Disturbed requests ordered by arrival step, then id
    """
    if arrival_jitter_steps < 0 or demand_jitter < 0 or duration_sigma < 0:
        raise WorkloadError("Disturbance magnitudes must be non-negative")
    if not requests:
        return []

    rng = np.random.default_rng(seed)
    n = len(requests)
    ids, arrivals, demands, true_durations, predicted = _as_arrays(requests)

    if arrival_jitter_steps:
        arrivals = np.maximum(arrivals + rng.integers(-arrival_jitter_steps, arrival_jitter_steps, size=n, endpoint=True), 0)
    if demand_jitter:
        demands = demands + rng.integers(-demand_jitter, demand_jitter, size=(n, NUM_RESOURCES), endpoint=True)
        demands = np.clip(demands, config.min_res_req, config.max_res_req)
    if duration_sigma:
        shift = np.rint(_truncated_noise_steps(rng, duration_sigma, n, config.time_step)).astype(np.int64)
        true_durations = np.clip(true_durations + shift, config.min_duration_steps, config.max_duration_steps)
        predicted = np.clip(predicted + shift, config.min_duration_steps, config.max_duration_steps)

    order = np.lexsort((ids, arrivals))
    return _build_requests(ids[order], arrivals[order], demands[order], true_durations[order], predicted[order])


def scenario_requests(config: WorkloadConfig, master_seed: int, stream: str, index: int) -> List[UserRequest]:
    """
    Noisy synthetic scenario `index` of a named seed stream.

    The workload and its prediction noise draw from separate derived seeds, so
    changing noise_sigma leaves the underlying requests unchanged.
    """
    scenario_config = replace(config, seed=derive_seed(master_seed, stream, "workload", index))
    return apply_prediction_noise(
        generate_workload(scenario_config),
        config.noise_sigma,
        derive_seed(master_seed, stream, "noise", index),
        scenario_config,
    )
