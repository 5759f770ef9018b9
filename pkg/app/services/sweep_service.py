"""
Sweep Service.
Evaluates the configured policies across values of one axis (load, servers
or prediction noise) on common seed indices and writes a long-format CSV.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from app.config.settings import RunConfig, SimulationConfig, WorkloadConfig
from app.core.exceptions import ConfigurationError, RouterError
from app.models.schemas import SweepFailure, SweepReport
from app.policies.registry import resolve_policies
from app.services.evaluation_service import run_seeds
from app.services.workload_service import WorkloadService
from app.utils.data_processor import DataProcessor
from app.workload.generator import expected_load, mean_req_num_for_load

logger = logging.getLogger("connection_router")

SWEEP_AXES = ("load", "servers", "sigma")
SWEEP_COLUMNS = ["axis", "value", "policy", "seed", "f_balance", "f_idle"]


def sweep_configs(
    axis: str,
    value: float,
    workload: WorkloadConfig,
    simulation: SimulationConfig,
) -> Tuple[WorkloadConfig, SimulationConfig]:
    """
    Workload and simulation settings for one axis value.

    load: expected load in percent, realised through the arrival rate.
    servers: server count; the arrival rate scales so the load stays constant.
    sigma: prediction noise in minutes.

    Raises:
        ConfigurationError: If the axis is unknown or the value invalid for it
    """
    if axis == "load":
        rate = mean_req_num_for_load(value, workload, simulation.server_num, simulation.capacity)
        return replace(workload, mean_req_num=rate), simulation
    if axis == "servers":
        if value < 1 or value != int(value):
            raise ConfigurationError(f"Server count must be a positive integer, got {value}")
        load = expected_load(workload, simulation.server_num, simulation.capacity)
        resized = replace(simulation, server_num=int(value))
        rate = mean_req_num_for_load(load, workload, resized.server_num, resized.capacity)
        return replace(workload, mean_req_num=rate), resized
    if axis == "sigma":
        return replace(workload, noise_sigma=value), simulation
    raise ConfigurationError(f"Unknown sweep axis '{axis}'; expected one of {SWEEP_AXES}")


class SweepService:
    """Service for parameter sweeps."""

    def __init__(self, config: RunConfig, workload_service: WorkloadService = None):
        self.config = config
        self.workload_service = workload_service or WorkloadService(config)
        logger.debug("Initialized SweepService")

    def sweep(self, axis: str, values: Sequence[float], out_dir: str) -> SweepReport:
        """
        Evaluate every configured policy at every axis value.

        Failing cells are recorded and the sweep continues.

        Args:
            axis: One of load, servers, sigma
            values: Axis values
            out_dir: Output directory for sweep.csv and sweep_report.json

        Returns:
            SweepReport: Row count, failures and the CSV path
        """
        if axis not in SWEEP_AXES:
            raise ConfigurationError(f"Unknown sweep axis '{axis}'; expected one of {SWEEP_AXES}")
        if not values:
            raise ConfigurationError("A sweep needs at least one value")

        rows: List[Dict] = []
        failures: List[SweepFailure] = []
        labels: List[str] = []
        for value in values:
            workload, simulation = sweep_configs(axis, value, self.config.workload, self.config.simulation)
            scenarios = [self.workload_service.scenario(i, workload) for i in range(self.config.n_seeds)]
            logger.info(f"Sweep {axis}={value}: {len(scenarios)} scenarios")
            for spec in self.config.policies:
                try:
                    policies = resolve_policies(spec, simulation)
                except RouterError as e:
                    logger.error(f"Cannot resolve policy '{spec}': {e}")
                    failures.append(SweepFailure(axis=axis, value=value, policy=spec, seed=-1, error=str(e)))
                    continue
                for policy in policies:
                    if policy.name not in labels:
                        labels.append(policy.name)
                    outcomes = run_seeds(policy, scenarios, simulation, self.config.seed, self.config.parallelism)
                    for outcome in outcomes:
                        if outcome.error is not None:
                            logger.error(f"Sweep cell {axis}={value}, {policy.name}, seed {outcome.index}: {outcome.error}")
                            failures.append(SweepFailure(
                                axis=axis, value=value, policy=policy.name, seed=outcome.index, error=str(outcome.error)
                            ))
                            continue
                        rows.append({
                            "axis": axis,
                            "value": value,
                            "policy": policy.name,
                            "seed": outcome.index,
                            "f_balance": outcome.result.f_balance,
                            "f_idle": outcome.result.f_idle,
                        })

        output = Path(out_dir)
        csv_path = str(output / "sweep.csv")
        DataProcessor.save_rows_csv(rows, SWEEP_COLUMNS, csv_path)
        report = SweepReport(
            success=not failures,
            axis=axis,
            values=list(values),
            policies=labels,
            rows=len(rows),
            failures=failures,
            csv_file=csv_path,
        )
        DataProcessor.save_json(report, str(output / "sweep_report.json"))
        if failures:
            logger.warning(f"Sweep finished with {len(failures)} failed cells")
        return report
