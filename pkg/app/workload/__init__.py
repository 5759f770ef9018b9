"""Request stream generation, prediction noise and trace ingestion."""

from app.workload.generator import (
    apply_prediction_noise,
    disturb_workload,
    expected_load,
    generate_workload,
    mean_req_num_for_load,
    sample_requests,
    scenario_requests,
)
from app.utils.trace_loader import load_trace

__all__ = [
    "apply_prediction_noise",
    "disturb_workload",
    "expected_load",
    "generate_workload",
    "load_trace",
    "mean_req_num_for_load",
    "sample_requests",
    "scenario_requests",
]
