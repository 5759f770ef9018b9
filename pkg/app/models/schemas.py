"""
Pydantic models for file formats and command reports.
"""

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

GENOME_FORMAT = "merl-lb-genome-v1"


class FitnessRecord(BaseModel):
    """Objective pair: balance in resource units, idleness in minutes."""
    f_balance: float
    f_idle: float


class GenomeFile(BaseModel):
    """On-disk policy genome."""
    format: Literal["merl-lb-genome-v1"] = GENOME_FORMAT
    hidden: int = 32
    input: int = 126
    weights: List[float]

    @field_validator("weights")
    @classmethod
    def weights_must_be_finite(cls, weights: List[float]) -> List[float]:
        if not all(math.isfinite(w) for w in weights):
            raise ValueError("genome weights must all be finite")
        return weights


class TraceMapping(BaseModel):
    """
    Column names and unit factors for ingesting a CSV trace.

    Factors multiply raw values; the products are rounded to integers
    (timesteps for arrival/durations, units for demands).
    """
    arrival: str
    cpu: str
    ram: str
    hdd: str
    bw: str
    duration: str
    predicted_duration: Optional[str] = None
    id: Optional[str] = None
    arrival_factor: float = 1.0
    cpu_factor: float = 1.0
    ram_factor: float = 1.0
    hdd_factor: float = 1.0
    bw_factor: float = 1.0
    duration_factor: float = 1.0
    rebase_arrivals: bool = Field(default=False, description="Shift arrivals so the earliest row lands on step 0")

    @property
    def columns(self) -> Dict[str, str]:
        mapped = {
            "arrival": self.arrival,
            "cpu": self.cpu,
            "ram": self.ram,
            "hdd": self.hdd,
            "bw": self.bw,
            "duration": self.duration,
        }
        if self.predicted_duration:
            mapped["predicted_duration"] = self.predicted_duration
        if self.id:
            mapped["id"] = self.id
        return mapped

    @classmethod
    def workload_csv(cls) -> "TraceMapping":
        """Mapping for the workload CSV this application writes."""
        return cls(
            arrival="arrival_step",
            cpu="cpu",
            ram="ram",
            hdd="hdd",
            bw="bw",
            duration="true_duration",
            predicted_duration="predicted_duration",
            id="id",
        )


class LoadReport(BaseModel):
    """Outcome of ingesting a trace."""
    source: str
    rows_read: int
    rows_kept: int
    rows_skipped: int
    rows_clamped: int = 0


class SeedResult(BaseModel):
    """One evaluated scenario."""
    seed_index: int
    seed: int
    f_balance: float
    f_idle: float
    terminated_early: bool
    num_timesteps: int
    blocked_total: int


class PolicyReport(BaseModel):
    """Per-policy evaluation over repeated scenarios (mean +/- std)."""
    policy: str
    n_seeds: int
    results: List[SeedResult]
    mean: FitnessRecord
    std: FitnessRecord
    aborted: int = 0
    std_degenerate: bool = Field(default=False, description="True when n_seeds == 1 and std is 0 by convention")


class EvaluationReport(BaseModel):
    """Report written by the evaluate command."""
    success: bool
    policies: List[PolicyReport] = Field(default_factory=list)
    timeseries_files: Dict[str, str] = Field(default_factory=dict)
    error: Optional[str] = None


class ParetoEntry(BaseModel):
    id: int
    f_balance: float
    f_idle: float
    genome_file: Optional[str] = None


class ParetoFrontFile(BaseModel):
    """Non-dominated front of one generation."""
    generation: int
    simulations: int
    hypervolume: float
    front: List[ParetoEntry]


class TrainingSummary(BaseModel):
    """Result of a training run."""
    success: bool
    generations: int = 0
    simulations: int = 0
    front: List[ParetoEntry] = Field(default_factory=list)
    hypervolume_initial: float = 0.0
    hypervolume_final: float = 0.0
    out_dir: Optional[str] = None
    error: Optional[str] = None


class SweepFailure(BaseModel):
    axis: str
    value: float
    policy: str
    seed: int
    error: str


class SweepReport(BaseModel):
    """Result of a sweep; the long-format rows are written to sweep.csv."""
    success: bool
    axis: str
    values: List[float]
    policies: List[str]
    rows: int = 0
    failures: List[SweepFailure] = Field(default_factory=list)
    csv_file: Optional[str] = None
    error: Optional[str] = None


class WorkloadSummary(BaseModel):
    """Result of generate/ingest commands."""
    success: bool
    requests: int = 0
    files: List[str] = Field(default_factory=list)
    load_report: Optional[LoadReport] = None
    expected_load_pct: Optional[float] = None
    error: Optional[str] = None
