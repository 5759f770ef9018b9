"""
Data processing utilities.
Handles serialization of workloads, episode logs and reports.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.models.domain import RESOURCE_NAMES, UserRequest

logger = logging.getLogger("connection_router")

WORKLOAD_COLUMNS = ["id", "arrival_step", "cpu", "ram", "hdd", "bw", "true_duration", "predicted_duration"]
TIMESERIES_COLUMNS = ["t", "server", "cpu", "ram", "hdd", "bw", "conn_count", "max_remaining_true"]


class DataProcessor:
    """Handles file output for workloads, episode logs and reports."""
    
    @staticmethod
    def _prepare(filepath: str) -> Path:
        output_path = Path(filepath)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        return output_path
    
    @staticmethod
    def requests_to_frame(requests: Sequence[UserRequest]) -> pd.DataFrame:
        rows = [
            (r.id, r.arrival_step, *tuple(r.demand), r.true_duration, r.predicted_duration)
            for r in requests
        ]
        return pd.DataFrame(rows, columns=WORKLOAD_COLUMNS, dtype=np.int64)
    
    @staticmethod
    def save_workload_csv(requests: Sequence[UserRequest], filepath: str) -> None:
        """
        Save requests in the workload CSV format (integers throughout).
        
        Args:
            requests: Requests to write
            filepath: Path to output file
            
        Raises:
            IOError: If file write fails
        """
        try:
            output_path = DataProcessor._prepare(filepath)
            DataProcessor.requests_to_frame(requests).to_csv(output_path, index=False, lineterminator="\n")
            logger.info(f"Saved {len(requests)} requests to {filepath}")
        except IOError as e:
            error_msg = f"Failed to write to file {filepath}: {e}"
            logger.error(error_msg)
            raise IOError(error_msg) from e
    
    @staticmethod
    def save_timeseries_csv(
        utilization: np.ndarray,
        conn_counts: np.ndarray,
        remaining: np.ndarray,
        filepath: str,
    ) -> None:
        """
        Save the per-server episode log, one row per server per step.
        
        Args:
            utilization: (T, N, 4) utilization fractions
            conn_counts: (T, N) live connection counts
            remaining: (T, N) true max remaining duration in steps
            filepath: Path to output file
        """
        steps, servers = remaining.shape
        frame = pd.DataFrame({
            "t": np.repeat(np.arange(steps), servers),
            "server": np.tile(np.arange(servers), steps),
        })
        flat = utilization.reshape(steps * servers, len(RESOURCE_NAMES))
        for k, name in enumerate(RESOURCE_NAMES):
            frame[name] = flat[:, k]
        frame["conn_count"] = conn_counts.reshape(-1)
        frame["max_remaining_true"] = remaining.reshape(-1)
        try:
            output_path = DataProcessor._prepare(filepath)
            frame[TIMESERIES_COLUMNS].to_csv(output_path, index=False, float_format="%.6f", lineterminator="\n")
            logger.info(f"Saved {steps}-step episode log for {servers} servers to {filepath}")
        except IOError as e:
            error_msg = f"Failed to write to file {filepath}: {e}"
            logger.error(error_msg)
            raise IOError(error_msg) from e
    
    @staticmethod
    def save_rows_csv(rows: List[Dict[str, Any]], columns: Sequence[str], filepath: str) -> None:
        try:
            output_path = DataProcessor._prepare(filepath)
            pd.DataFrame(rows, columns=list(columns)).to_csv(output_path, index=False, lineterminator="\n")
            logger.info(f"Saved {len(rows)} rows to {filepath}")
        except IOError as e:
            error_msg = f"Failed to write to file {filepath}: {e}"
            logger.error(error_msg)
            raise IOError(error_msg) from e
    
    @staticmethod
    def save_json(data: Any, filepath: str) -> None:
        """
        Save a dict or pydantic model as indented JSON.
        
        Args:
            data: Payload; pydantic models are dumped in JSON mode
            filepath: Path to output file
            
        Raises:
            IOError: If file write fails
        """
        if isinstance(data, BaseModel):
            data = data.model_dump(mode="json")
        try:
            output_path = DataProcessor._prepare(filepath)
            with open(output_path, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2, ensure_ascii=False)
                f.write("\n")
            logger.debug(f"Saved JSON to {filepath}")
        except IOError as e:
            error_msg = f"Failed to write to file {filepath}: {e}"
            logger.error(error_msg)
            raise IOError(error_msg) from e
    
    @staticmethod
    def format_summary(values: np.ndarray) -> Dict[str, float]:
        """
        Mean and population std of a sample; std is 0 for a single value.
        
        Args:
            values: 1-D sample
            
        Returns:
            Dict: {"mean": ..., "std": ...}
        """
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return {"mean": 0.0, "std": 0.0}
        return {"mean": float(values.mean()), "std": float(values.std())}
