"""
Training Service.
Runs the evolutionary trainer for a resolved configuration.
"""

import logging

from app.config.settings import RunConfig
from app.evolution.trainer import train
from app.models.schemas import ParetoEntry, TrainingSummary
from app.services.workload_service import WorkloadService

logger = logging.getLogger("connection_router")


class TrainingService:
    """Service for training routing policies."""

    def __init__(self, config: RunConfig, workload_service: WorkloadService = None):
        self.config = config
        self.workload_service = workload_service or WorkloadService(config)
        logger.debug("Initialized TrainingService")

    def train(self, out_dir: str) -> TrainingSummary:
        """
        Train on a generated scenario, or on the configured workload file.

        Args:
            out_dir: Directory receiving fronts, genomes and convergence.csv

        Returns:
            TrainingSummary: Final front (balance in resource units) and hypervolume progress
        """
        requests = self.workload_service.trace() if self.workload_service.uses_trace else None
        result = train(
            self.config.evolution,
            self.config.workload,
            self.config.simulation,
            out_dir,
            seed=self.config.seed,
            parallelism=self.config.parallelism,
            requests=requests,
        )
        capacity = self.config.simulation.mean_capacity
        front = [
            ParetoEntry(
                id=ind.id,
                f_balance=ind.fitness.f_balance * capacity,
                f_idle=ind.fitness.f_idle,
                genome_file=f"genome_{ind.id}.json",
            )
            for ind in sorted(result.front, key=lambda ind: (ind.fitness.f_balance, ind.fitness.f_idle, ind.id))
        ]
        return TrainingSummary(
            success=True,
            generations=result.generations,
            simulations=result.simulations,
            front=front,
            hypervolume_initial=result.history[0].hypervolume,
            hypervolume_final=result.history[-1].hypervolume,
            out_dir=out_dir,
        )
