"""
Policy resolution by name.

Accepted forms: a heuristic name (random, round_robin, least_connection,
least_duration_gap), neural:<genome-file>, or front:<training-out-dir> which
expands to every genome of the final front.
"""

import json
import logging
import re
from pathlib import Path
from typing import List

from app.config.settings import SimulationConfig
from app.core.exceptions import ConfigurationError, GenomeError
from app.policies.base import RoutingPolicy
from app.policies.heuristics import (
    LeastConnectionPolicy,
    LeastDurationGapPolicy,
    RandomPolicy,
    RoundRobinPolicy,
)
from app.policies.neural import NeuralPolicy, load_genome

logger = logging.getLogger("connection_router")

HEURISTICS = {
    RandomPolicy.name: RandomPolicy,
    RoundRobinPolicy.name: RoundRobinPolicy,
    LeastConnectionPolicy.name: LeastConnectionPolicy,
    LeastDurationGapPolicy.name: LeastDurationGapPolicy,
}

_PARETO_FILE = re.compile(r"pareto_gen_(\d+)\.json$")


def final_front_genomes(out_dir: str) -> List[Path]:
    """
    Genome files of the last generation's front in a training directory.

    Raises:
        GenomeError: If the directory holds no front with genome files
    """
    directory = Path(out_dir)
    fronts = sorted(
        (int(m.group(1)), p) for p in directory.glob("pareto_gen_*.json") if (m := _PARETO_FILE.search(p.name))
    )
    if not fronts:
        raise GenomeError(f"No pareto_gen_<k>.json files found in {directory}")
    _, last = fronts[-1]
    try:
        with open(last, 'r', encoding='utf-8') as f:
            entries = json.load(f).get("front", [])
    except (OSError, json.JSONDecodeError) as e:
        raise GenomeError(f"Cannot read front file {last}: {e}") from e
    files = [directory / entry["genome_file"] for entry in entries if entry.get("genome_file")]
    if not files:
        raise GenomeError(f"Front file {last} references no genome files")
    return files


def resolve_policies(spec: str, sim_config: SimulationConfig) -> List[RoutingPolicy]:
    """
    Build fresh policy instances for a policy specification.

    Raises:
        ConfigurationError: If the name is not recognised
        GenomeError: If a genome file or front cannot be loaded
    """
    spec = spec.strip()
    if spec in HEURISTICS:
        return [HEURISTICS[spec]()]
    if spec.startswith("neural:"):
        path = spec[len("neural:"):]
        return [NeuralPolicy(load_genome(path), sim_config, name=f"neural:{Path(path).stem}")]
    if spec.startswith("front:"):
        files = final_front_genomes(spec[len("front:"):])
        logger.info(f"Loaded {len(files)} front policies from {spec[len('front:'):]}")
        return [NeuralPolicy(load_genome(str(p)), sim_config, name=f"neural:{p.stem}") for p in files]
    raise ConfigurationError(
        f"Unknown policy '{spec}'; expected one of {sorted(HEURISTICS)}, neural:<file> or front:<dir>"
    )
