"""
Workload Service.
Produces request streams: synthetic generation, trace ingestion and the
per-seed scenarios used by evaluation and sweeps.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

from app.config.settings import RunConfig, WorkloadConfig
from app.models.domain import UserRequest
from app.models.schemas import TraceMapping, WorkloadSummary
from app.utils.data_processor import DataProcessor
from app.utils.seeding import derive_seed
from app.utils.trace_loader import TraceLoader
from app.workload.generator import (
    apply_prediction_noise,
    disturb_workload,
    expected_load,
    sample_requests,
    scenario_requests,
)

logger = logging.getLogger("connection_router")


class WorkloadService:
    """Service for building and persisting request workloads."""

    def __init__(self, config: RunConfig):
        """
        Initialize workload service.

        Args:
            config: Resolved run configuration
        """
        self.config = config
        self.loader = TraceLoader(config.workload)
        self._trace: Optional[List[UserRequest]] = None
        logger.debug("Initialized WorkloadService")

    @property
    def uses_trace(self) -> bool:
        return self.config.workload_file is not None

    def _expected_load(self, workload: WorkloadConfig) -> float:
        simulation = self.config.simulation
        return expected_load(workload, simulation.server_num, simulation.capacity)

    def generate(self, out_dir: str) -> WorkloadSummary:
        """
        Generate the seed-0 evaluation scenario and write it as workload.csv.

        Args:
            out_dir: Output directory

        Returns:
            WorkloadSummary: Request count, files and the expected load
        """
        requests = scenario_requests(self.config.workload, self.config.seed, "eval", 0)
        path = str(Path(out_dir) / "workload.csv")
        DataProcessor.save_workload_csv(requests, path)
        load = self._expected_load(self.config.workload)
        logger.info(f"Generated {len(requests)} requests (expected load {load:.1f}%)")
        return WorkloadSummary(success=True, requests=len(requests), files=[path], expected_load_pct=load)

    def ingest(
        self,
        trace_path: str,
        mapping_path: Optional[str],
        out_dir: str,
        sample: Optional[int] = None,
        disturb: int = 0,
    ) -> WorkloadSummary:
        """
        Load a trace, optionally pick a random subset and write disturbed copies.

        Args:
            trace_path: CSV trace
            mapping_path: Column mapping JSON (the workload CSV layout if None)
            out_dir: Output directory
            sample: Number of requests to pick at random (all if None)
            disturb: Number of disturbed scenario copies to write

        Returns:
            WorkloadSummary: Files written and the load report
        """
        mapping = TraceLoader.load_mapping(mapping_path) if mapping_path else TraceMapping.workload_csv()
        requests, report = self.loader.load(trace_path, mapping)
        if sample is not None:
            requests = sample_requests(requests, sample, derive_seed(self.config.seed, "sample"))
            logger.info(f"Picked {len(requests)} requests from {report.rows_kept}")

        output = Path(out_dir)
        files = [str(output / "workload.csv")]
        DataProcessor.save_workload_csv(requests, files[0])
        disturbance = self.config.trace_disturbance
        for k in range(disturb):
            copy = disturb_workload(
                requests,
                self.config.workload,
                derive_seed(self.config.seed, "disturb", k),
                disturbance.arrival_jitter_steps,
                disturbance.demand_jitter,
                disturbance.duration_sigma,
            )
            path = str(output / f"workload_{k}.csv")
            DataProcessor.save_workload_csv(copy, path)
            files.append(path)
        report_path = str(output / "load_report.json")
        DataProcessor.save_json(report, report_path)
        files.append(report_path)
        return WorkloadSummary(success=True, requests=len(requests), files=files, load_report=report)

    def trace(self) -> List[UserRequest]:
        """The configured workload file, loaded once."""
        if self._trace is None:
            self._trace, _ = self.loader.load(self.config.workload_file, TraceMapping.workload_csv())
        return self._trace

    def scenario(self, index: int, workload: Optional[WorkloadConfig] = None) -> List[UserRequest]:
        """
        Evaluation scenario `index`.

        With a workload file, the trace is disturbed per index (and re-noised
        when noise_sigma > 0); otherwise a synthetic scenario is generated.

        Args:
            index: Seed index
            workload: Workload parameters overriding the run's (sweeps)
        """
        workload = workload or self.config.workload
        if not self.uses_trace:
            return scenario_requests(workload, self.config.seed, "eval", index)
        return disturbed_trace(self.trace(), self.config, workload, index)


def disturbed_trace(
    trace: Sequence[UserRequest],
    config: RunConfig,
    workload: WorkloadConfig,
    index: int,
) -> List[UserRequest]:
    disturbance = config.trace_disturbance
    requests = disturb_workload(
        trace,
        workload,
        derive_seed(config.seed, "eval", "disturb", index),
        disturbance.arrival_jitter_steps,
        disturbance.demand_jitter,
        disturbance.duration_sigma,
    )
    return apply_prediction_noise(
        requests, workload.noise_sigma, derive_seed(config.seed, "eval", "noise", index), workload
    )
