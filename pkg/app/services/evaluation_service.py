"""
Evaluation Service.
Runs policies over repeated scenarios and reports mean +/- std of both objectives.
"""

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from app.config.settings import RunConfig, SimulationConfig
from app.core.exceptions import RouterError
from app.core.logger import configure_worker_logging, current_level_name
from app.models.domain import UserRequest
from app.models.schemas import EvaluationReport, FitnessRecord, PolicyReport, SeedResult
from app.policies.base import RoutingPolicy
from app.policies.registry import resolve_policies
from app.services.workload_service import WorkloadService
from app.simulation.engine import EpisodeResult, run_episode
from app.simulation.objectives import episode_fitness
from app.utils.data_processor import DataProcessor
from app.utils.seeding import derive_seed

logger = logging.getLogger("connection_router")


@dataclass
class SeedOutcome:
    """One scenario run; `error` is set instead of `result` when it failed."""
    index: int
    result: Optional[SeedResult] = None
    episode: Optional[EpisodeResult] = None
    error: Optional[RouterError] = None


def run_seed(
    policy: RoutingPolicy,
    sim_config: SimulationConfig,
    master_seed: int,
    keep_episode: bool,
    index: int,
    requests: Sequence[UserRequest],
) -> SeedOutcome:
    """Simulate one scenario; aborted episodes keep the fitness of their recorded steps."""
    seed = derive_seed(master_seed, "eval", "policy", index)
    try:
        episode = run_episode(requests, sim_config, policy, seed=seed)
        fitness = episode_fitness(episode) if episode.num_timesteps else None
    except RouterError as e:
        return SeedOutcome(index=index, error=e)
    capacity = sim_config.mean_capacity
    result = SeedResult(
        seed_index=index,
        seed=seed,
        f_balance=fitness.f_balance * capacity if fitness else 0.0,
        f_idle=fitness.f_idle if fitness else 0.0,
        terminated_early=episode.terminated_early,
        num_timesteps=episode.num_timesteps,
        blocked_total=episode.blocked_total,
    )
    return SeedOutcome(index=index, result=result, episode=episode if keep_episode else None)


def _run_one(policy, sim_config, master_seed, first_index, task) -> SeedOutcome:
    index, requests = task
    return run_seed(policy, sim_config, master_seed, index == first_index, index, requests)


def run_seeds(
    policy: RoutingPolicy,
    scenarios: Sequence[Sequence[UserRequest]],
    sim_config: SimulationConfig,
    master_seed: int,
    parallelism: int = 1,
) -> List[SeedOutcome]:
    """
    Run a policy on every scenario, in order.

    The first scenario's episode is kept for the time-series export.
    """
    worker = partial(_run_one, policy, sim_config, master_seed, 0)
    tasks = list(enumerate(scenarios))
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(
            max_workers=min(parallelism, len(tasks)),
            initializer=configure_worker_logging,
            initargs=(current_level_name(),),
        ) as executor:
            return list(executor.map(worker, tasks))
    return [worker(task) for task in tasks]


def summarize(name: str, results: List[SeedResult]) -> PolicyReport:
    """Aggregate per-seed results; aborted seeds are excluded unless every seed aborted."""
    finished = [r for r in results if not r.terminated_early] or results
    balance = DataProcessor.format_summary(np.array([r.f_balance for r in finished]))
    idle = DataProcessor.format_summary(np.array([r.f_idle for r in finished]))
    report = PolicyReport(
        policy=name,
        n_seeds=len(results),
        results=results,
        mean=FitnessRecord(f_balance=balance["mean"], f_idle=idle["mean"]),
        std=FitnessRecord(f_balance=balance["std"], f_idle=idle["std"]),
        aborted=sum(r.terminated_early for r in results),
        std_degenerate=len(results) == 1,
    )
    if report.aborted:
        logger.warning(f"{name}: {report.aborted} of {len(results)} episodes aborted")
    return report


def _file_stem(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


class EvaluationService:
    """Service for evaluating routing policies on repeated scenarios."""

    def __init__(self, config: RunConfig, workload_service: Optional[WorkloadService] = None):
        """
        Initialize evaluation service.

        Args:
            config: Resolved run configuration
            workload_service: Scenario source (created from config if None)
        """
        self.config = config
        self.workload_service = workload_service or WorkloadService(config)
        logger.debug("Initialized EvaluationService")

    def evaluate(self, out_dir: str, policy_spec: Optional[str] = None) -> EvaluationReport:
        """
        Evaluate one policy specification over n_seeds scenarios.

        A front:<dir> specification yields one report per front genome.

        Args:
            out_dir: Output directory for report.json and time-series CSVs
            policy_spec: Policy specification (the configured policy if None)

        Returns:
            EvaluationReport: Per-policy reports

        Raises:
            RouterError: If a policy cannot be resolved or a simulation breaks an invariant
        """
        spec = policy_spec or self.config.policy
        policies = resolve_policies(spec, self.config.simulation)
        n_seeds = self.config.n_seeds
        if n_seeds == 1:
            logger.warning("n_seeds is 1; reported std is 0 by convention")

        scenarios = [self.workload_service.scenario(i) for i in range(n_seeds)]
        logger.info(f"Evaluating {len(policies)} policies from '{spec}' on {n_seeds} scenarios")

        report = EvaluationReport(success=True)
        output = Path(out_dir)
        for policy in policies:
            outcomes = run_seeds(
                policy, scenarios, self.config.simulation, self.config.seed, self.config.parallelism
            )
            failed = next((o for o in outcomes if o.error is not None), None)
            if failed:
                logger.error(f"Policy {policy.name} failed on scenario {failed.index}: {failed.error}")
                raise failed.error
            policy_report = summarize(policy.name, [o.result for o in outcomes])
            report.policies.append(policy_report)

            episode = outcomes[0].episode
            path = str(output / f"timeseries_{_file_stem(policy.name)}.csv")
            DataProcessor.save_timeseries_csv(episode.utilization, episode.conn_counts, episode.remaining, path)
            report.timeseries_files[policy.name] = path
            logger.info(
                f"{policy.name}: f_balance={policy_report.mean.f_balance:.3f}+/-{policy_report.std.f_balance:.3f}, "
                f"f_idle={policy_report.mean.f_idle:.3f}+/-{policy_report.std.f_idle:.3f}"
            )

        DataProcessor.save_json(report, str(output / "report.json"))
        return report
