"""
Configuration management for the connection router.
Handles environment variables, JSON config files and run settings.
Loads configuration from .env file if available.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.exceptions import ConfigurationError, WorkloadError
from app.models.domain import NUM_RESOURCES, ResourceVector

try:
    from dotenv import load_dotenv
    DOTENV_AVAILABLE = True
except ImportError:
    DOTENV_AVAILABLE = False

logger = logging.getLogger("connection_router")

# Load environment variables from .env file if available
if DOTENV_AVAILABLE:
    project_root = Path(__file__).parent.parent.parent
    possible_paths = [Path(".env"), project_root / ".env"]
    env_path = next((p for p in possible_paths if p.exists() and p.is_file()), None)
    if env_path:
        load_dotenv(env_path, override=False)
        logger.debug(f"Loaded environment variables from {env_path.absolute()}")

HEURISTIC_POLICIES = ("random", "round_robin", "least_connection", "least_duration_gap")
MASK_MODES = ("exclude", "zero")
EVAL_SEED_POLICIES = ("fixed", "per_generation")


def minutes_to_steps(minutes: float, time_step: int) -> int:
    """Convert minutes into whole simulation timesteps, rounding up."""
    return int(math.ceil(round(minutes * 60.0 / time_step, 9)))


def _check_keys(cls, data: Dict[str, Any]) -> None:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"Unknown {cls.__name__} keys: {sorted(unknown)}")


@dataclass(frozen=True)
class WorkloadConfig:
    """Synthetic request stream parameters (durations in minutes, time_step in seconds)."""
    data_time: float = 120
    time_step: int = 12
    mean_req_num: float = 3.0
    min_res_req: int = 0
    max_res_req: int = 10
    min_user_duration: int = 1
    max_user_duration: int = 120
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.data_time < 0:
            raise WorkloadError(f"data_time must be >= 0, got {self.data_time}")
        if self.time_step <= 0:
            raise WorkloadError(f"time_step must be > 0, got {self.time_step}")
        if self.mean_req_num < 0:
            raise WorkloadError(f"mean_req_num must be >= 0, got {self.mean_req_num}")
        if self.min_res_req < 0 or self.min_res_req > self.max_res_req:
            raise WorkloadError(
                f"Resource request range invalid: min_res_req={self.min_res_req}, max_res_req={self.max_res_req}"
            )
        if self.min_user_duration <= 0 or self.min_user_duration > self.max_user_duration:
            raise WorkloadError(
                f"Duration range invalid: min_user_duration={self.min_user_duration}, "
                f"max_user_duration={self.max_user_duration}"
            )
        if self.noise_sigma < 0:
            raise WorkloadError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def num_arrival_steps(self) -> int:
        return int(self.data_time * 60 // self.time_step)

    @property
    def min_duration_steps(self) -> int:
        return minutes_to_steps(self.min_user_duration, self.time_step)

    @property
    def max_duration_steps(self) -> int:
        return minutes_to_steps(self.max_user_duration, self.time_step)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "WorkloadConfig":
        _check_keys(cls, config_dict)
        return cls(**config_dict)


@dataclass(frozen=True)
class SimulationConfig:
    """Virtual data center parameters (predicted_range in minutes, time_step in seconds)."""
    server_num: int = 10
    capacity: Tuple[int, ...] = (500, 500, 500, 500)
    ready_queue_size: int = 200
    block_queue_size: int = 200
    predicted_range: float = 120
    future_sample: int = 10
    time_step: int = 12
    demand_scale: int = 10
    mask_mode: str = "exclude"

    def __post_init__(self):
        if isinstance(self.capacity, (int, np.integer)):
            object.__setattr__(self, "capacity", (int(self.capacity),) * NUM_RESOURCES)
        else:
            object.__setattr__(self, "capacity", tuple(int(c) for c in self.capacity))
        if len(self.capacity) != NUM_RESOURCES or any(c <= 0 for c in self.capacity):
            raise ConfigurationError(f"capacity must hold {NUM_RESOURCES} positive values, got {self.capacity}")
        if self.server_num < 1:
            raise ConfigurationError(f"server_num must be >= 1, got {self.server_num}")
        if self.ready_queue_size < 0 or self.block_queue_size < 0:
            raise ConfigurationError("Queue sizes must be non-negative")
        if self.time_step <= 0:
            raise ConfigurationError(f"time_step must be > 0, got {self.time_step}")
        if self.future_sample < 1:
            raise ConfigurationError(f"future_sample must be >= 1, got {self.future_sample}")
        if self.predicted_range_steps % self.future_sample != 0:
            raise ConfigurationError(
                f"predicted_range ({self.predicted_range_steps} steps) is not divisible "
                f"into {self.future_sample} offsets"
            )
        if self.demand_scale <= 0:
            raise ConfigurationError(f"demand_scale must be > 0, got {self.demand_scale}")
        if self.mask_mode not in MASK_MODES:
            raise ConfigurationError(f"mask_mode must be one of {MASK_MODES}, got '{self.mask_mode}'")

    @property
    def capacity_vector(self) -> ResourceVector:
        return ResourceVector.from_iterable(self.capacity)

    @property
    def predicted_range_steps(self) -> int:
        return minutes_to_steps(self.predicted_range, self.time_step)

    @property
    def lookahead_offsets(self) -> np.ndarray:
        """Future offsets in steps: k * (range / h) for k = 1..h."""
        stride = self.predicted_range_steps // self.future_sample
        return stride * np.arange(1, self.future_sample + 1, dtype=np.int64)

    @property
    def mean_capacity(self) -> float:
        return float(np.mean(self.capacity))

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "SimulationConfig":
        _check_keys(cls, config_dict)
        return cls(**config_dict)


@dataclass(frozen=True)
class EvoConfig:
    """NSGA-II hyperparameters; the budget counts individual simulations."""
    pop_size: int = 50
    elite_count: int = 25
    offspring_count: int = 25
    mutation_prob: float = 0.25
    mutation_sigma: float = 0.05
    max_simulations: int = 750000
    eval_seed_policy: str = "fixed"
    init_scale: float = 0.1

    def __post_init__(self):
        if self.elite_count < 1 or self.offspring_count < 0:
            raise ConfigurationError("elite_count must be >= 1 and offspring_count >= 0")
        if self.elite_count + self.offspring_count != self.pop_size:
            raise ConfigurationError(
                f"elite_count + offspring_count must equal pop_size "
                f"({self.elite_count} + {self.offspring_count} != {self.pop_size})"
            )
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigurationError(f"mutation_prob must lie in [0, 1], got {self.mutation_prob}")
        if self.mutation_sigma <= 0:
            raise ConfigurationError(f"mutation_sigma must be > 0, got {self.mutation_sigma}")
        if self.eval_seed_policy not in EVAL_SEED_POLICIES:
            raise ConfigurationError(
                f"eval_seed_policy must be one of {EVAL_SEED_POLICIES}, got '{self.eval_seed_policy}'"
            )
        if self.init_scale < 0:
            raise ConfigurationError(f"init_scale must be >= 0, got {self.init_scale}")
        if self.max_simulations < 1:
            raise ConfigurationError(f"max_simulations must be >= 1, got {self.max_simulations}")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "EvoConfig":
        _check_keys(cls, config_dict)
        return cls(**config_dict)


@dataclass(frozen=True)
class TraceDisturbance:
    """How a loaded trace is perturbed into per-seed test scenarios."""
    arrival_jitter_steps: int = 0
    demand_jitter: int = 0
    duration_sigma: float = 0.0

    def __post_init__(self):
        if self.arrival_jitter_steps < 0 or self.demand_jitter < 0 or self.duration_sigma < 0:
            raise ConfigurationError("Trace disturbance magnitudes must be non-negative")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "TraceDisturbance":
        _check_keys(cls, config_dict)
        return cls(**config_dict)


@dataclass
class RunConfig:
    """Application-wide run configuration."""
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    evolution: EvoConfig = field(default_factory=EvoConfig)
    policy: str = "least_connection"
    policies: List[str] = field(default_factory=lambda: list(HEURISTIC_POLICIES))
    seed: int = 0
    out_dir: str = "runs"
    n_seeds: int = 50
    parallelism: int = 1
    workload_file: Optional[str] = None
    trace_disturbance: TraceDisturbance = field(default_factory=TraceDisturbance)
    log_level: str = "INFO"

    def __post_init__(self):
        if self.workload.time_step != self.simulation.time_step:
            raise ConfigurationError(
                f"workload.time_step ({self.workload.time_step}) and simulation.time_step "
                f"({self.simulation.time_step}) must match"
            )
        if self.simulation.demand_scale != self.workload.max_res_req:
            self.simulation = replace(self.simulation, demand_scale=max(1, self.workload.max_res_req))
        if self.n_seeds < 1:
            raise ConfigurationError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.parallelism < 1:
            raise ConfigurationError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {self.seed}")
        if not self.policies:
            raise ConfigurationError("At least one policy is required")

    @classmethod
    def from_env(cls) -> "RunConfig":
        """
        Create run configuration from environment variables.

        Returns:
            RunConfig: Configured instance
        """
        try:
            return cls(
                policy=os.getenv("ROUTER_POLICY", "least_connection"),
                seed=int(os.getenv("ROUTER_SEED", "0")),
                out_dir=os.getenv("ROUTER_OUT_DIR", "runs"),
                parallelism=int(os.getenv("ROUTER_PARALLELISM", "1")),
                log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
            )
        except ValueError as e:
            raise ConfigurationError(f"Invalid environment setting: {e}") from e

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any], base: Optional["RunConfig"] = None) -> "RunConfig":
        """
        Create configuration from dictionary, layered over `base`.

        Args:
            config_dict: Dictionary with configuration values (the JSON config layout)
            base: Configuration whose values are kept for absent keys

        Returns:
            RunConfig: Configured instance
        """
        base = base or cls()
        _check_keys(cls, config_dict)
        try:
            values = {f.name: getattr(base, f.name) for f in fields(cls)}
            for key, sub_cls in (
                ("workload", WorkloadConfig),
                ("simulation", SimulationConfig),
                ("evolution", EvoConfig),
                ("trace_disturbance", TraceDisturbance),
            ):
                if key in config_dict:
                    merged = {**asdict(values[key]), **config_dict[key]}
                    values[key] = sub_cls.from_dict(merged)
            for key, value in config_dict.items():
                if key not in ("workload", "simulation", "evolution", "trace_disturbance"):
                    values[key] = list(value) if key == "policies" else value
            # time_step is shared; a value given on either side wins
            sim_step = config_dict.get("simulation", {}).get("time_step")
            wl_step = config_dict.get("workload", {}).get("time_step")
            if wl_step is not None and sim_step is None:
                values["simulation"] = replace(values["simulation"], time_step=wl_step)
            elif sim_step is not None and wl_step is None:
                values["workload"] = replace(values["workload"], time_step=sim_step)
            return cls(**values)
        except TypeError as e:
            raise ConfigurationError(f"Invalid configuration structure: {e}") from e

    @classmethod
    def from_file(cls, path: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigurationError(f"Config file not found: {config_path}")
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {config_path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {config_path} must contain a JSON object")
        logger.info(f"Loaded configuration from {config_path}")
        return cls.from_dict(data, base=base)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with the non-None top-level overrides applied (CLI flags)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if not changes:
            return self
        return self.from_dict(changes, base=self)

    def snapshot(self) -> Dict[str, Any]:
        """
        JSON-serialisable dictionary sufficient to reproduce a run.

        Execution settings (log level, worker count) are left out.
        """
        data = asdict(self)
        data["simulation"]["capacity"] = list(self.simulation.capacity)
        data.pop("log_level")
        data.pop("parallelism")
        return data
