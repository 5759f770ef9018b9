"""
Trace Loader.
Loads request traces from CSV files through a column mapping.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.config.settings import WorkloadConfig
from app.core.exceptions import TraceFormatError
from app.models.domain import RESOURCE_NAMES, ResourceVector, UserRequest
from app.models.schemas import LoadReport, TraceMapping

logger = logging.getLogger("connection_router")

# Largest scaled value kept exactly by float64; larger rows are skipped
MAX_TRACE_VALUE = 2 ** 53


class TraceLoader:
    """Handles loading request traces and their column mappings."""
    
    def __init__(self, config: Optional[WorkloadConfig] = None):
        """
        Initialize trace loader.
        
        Args:
            config: Workload config whose demand and duration ranges loaded rows are clamped into
        """
        self.config = config or WorkloadConfig()
    
    @staticmethod
    def load_mapping(path: str) -> TraceMapping:
        """
        Load a column mapping from a JSON document.
        
        Args:
            path: Path to the mapping JSON file
            
        Returns:
            TraceMapping: Parsed mapping
            
        Raises:
            TraceFormatError: If the file is missing or not a valid mapping
        """
        file_path = Path(path)
        if not file_path.exists():
            error_msg = f"Trace mapping file not found: {file_path}"
            logger.error(error_msg)
            raise TraceFormatError(error_msg)
        
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                return TraceMapping.model_validate(json.load(f))
        except (json.JSONDecodeError, ValidationError) as e:
            error_msg = f"Invalid trace mapping {file_path}: {e}"
            logger.error(error_msg)
            raise TraceFormatError(error_msg) from e
    
    @staticmethod
    def _factor(mapping: TraceMapping, key: str) -> float:
        if key == "id":
            return 1.0
        if key == "predicted_duration":
            return mapping.duration_factor
        return getattr(mapping, f"{key}_factor")
    
    def load(self, path: str, mapping: TraceMapping) -> Tuple[List[UserRequest], LoadReport]:
        """
        Load a CSV trace into requests.
        
        Rows with missing, negative or non-finite mapped fields are skipped and
        counted, as are rows whose id is not a whole number. Repeated ids are
        rejected.
        Demands and durations are clamped into the configured ranges.
        
        Args:
            path: Path to a CSV file with a header row
            mapping: Column names and unit factors
            
        Returns:
            Tuple[List[UserRequest], LoadReport]: Requests sorted by arrival step (then id) and the load report
            
        Raises:
            TraceFormatError: If the file cannot be read, a mapped column is absent
                or two kept rows share an id
        """
        file_path = Path(path)
        try:
            logger.info(f"Loading trace from {file_path}")
            frame = pd.read_csv(file_path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            error_msg = f"Failed to read trace {file_path}: {e}"
            logger.error(error_msg)
            raise TraceFormatError(error_msg) from e
        
        missing = [column for column in mapping.columns.values() if column not in frame.columns]
        if missing:
            error_msg = f"Trace {file_path} lacks mapped columns: {missing}"
            logger.error(error_msg)
            raise TraceFormatError(error_msg)
        
        rows_read = len(frame)
        raw = {key: pd.to_numeric(frame[column], errors='coerce') for key, column in mapping.columns.items()}
        numeric = pd.DataFrame(raw, dtype=np.float64)
        factors = {key: self._factor(mapping, key) for key in numeric.columns}
        scaled = pd.DataFrame(
            {key: np.rint(numeric[key] * factors[key]) for key in numeric.columns if key != "id"}
        )
        valid = (
            np.isfinite(numeric).all(axis=1)
            & (numeric >= 0).all(axis=1)
            & (scaled <= MAX_TRACE_VALUE).all(axis=1)
        )
        if "id" in numeric:
            valid &= (numeric["id"] == np.floor(numeric["id"])) & (numeric["id"] <= MAX_TRACE_VALUE)
        numeric, scaled = numeric[valid], scaled[valid]
        
        if "id" in numeric:
            ids = numeric["id"].to_numpy().astype(np.int64)
            duplicated = numeric["id"][numeric["id"].duplicated()].unique()
            if len(duplicated):
                error_msg = f"Trace {file_path} repeats request ids: {sorted(int(i) for i in duplicated)[:10]}"
                logger.error(error_msg)
                raise TraceFormatError(error_msg)
        else:
            ids = np.flatnonzero(valid.to_numpy()).astype(np.int64)
        arrivals = scaled["arrival"].to_numpy().astype(np.int64)
        if mapping.rebase_arrivals and len(arrivals):
            arrivals = arrivals - arrivals.min()
        demands = scaled[list(RESOURCE_NAMES)].to_numpy().astype(np.int64).reshape(len(scaled), len(RESOURCE_NAMES))
        true_durations = scaled["duration"].to_numpy().astype(np.int64)
        if "predicted_duration" in scaled:
            predicted = scaled["predicted_duration"].to_numpy().astype(np.int64)
        else:
            predicted = true_durations.copy()
        
        lo, hi = self.config.min_duration_steps, self.config.max_duration_steps
        clamped_demands = np.clip(demands, self.config.min_res_req, self.config.max_res_req)
        clamped_true = np.clip(true_durations, lo, hi)
        clamped_predicted = np.clip(predicted, lo, hi)
        changed = (
            (clamped_demands != demands).any(axis=1)
            | (clamped_true != true_durations)
            | (clamped_predicted != predicted)
        )
        
        order = np.lexsort((ids, arrivals))
        requests = [
            UserRequest(
                id=int(ids[i]),
                arrival_step=int(arrivals[i]),
                demand=ResourceVector.from_iterable(clamped_demands[i]),
                true_duration=int(clamped_true[i]),
                predicted_duration=int(clamped_predicted[i]),
            )
            for i in order
        ]
        
        report = LoadReport(
            source=str(file_path),
            rows_read=rows_read,
            rows_kept=len(requests),
            rows_skipped=rows_read - len(requests),
            rows_clamped=int(changed.sum()),
        )
        if report.rows_skipped:
            logger.warning(f"Skipped {report.rows_skipped} of {rows_read} trace rows with invalid fields")
        logger.info(f"Loaded {report.rows_kept} requests from {file_path}")
        return requests, report


def load_trace(
    path: str,
    mapping: TraceMapping,
    config: Optional[WorkloadConfig] = None,
) -> Tuple[List[UserRequest], LoadReport]:
    """Load a CSV trace; see `TraceLoader.load`."""
    return TraceLoader(config).load(path, mapping)
