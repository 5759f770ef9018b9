"""
Parameter-sharing scoring network.

One small network is evaluated once per candidate server on that server's
126-value input (request, server look-ahead, cluster mean/std); the highest
score wins. The same weights therefore route for any number of servers.

Genome layout (flat, 4097 values, row-major):
    hidden weights (126 x 32) | hidden bias (32) | output weights (32) | output bias (1)
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from app.config.settings import SimulationConfig
from app.core.exceptions import ConfigurationError, GenomeError
from app.models.domain import BLOCK, NUM_RESOURCES, UserRequest
from app.models.schemas import GenomeFile
from app.policies.base import mask_actions
from app.simulation.cluster import ClusterState, lookahead_features
from app.utils.data_processor import DataProcessor

logger = logging.getLogger("connection_router")

REQUEST_FEATURES = NUM_RESOURCES + 1
SERVER_FEATURES = 41
GLOBAL_FEATURES = 2 * (SERVER_FEATURES - 1)
INPUT = REQUEST_FEATURES + SERVER_FEATURES + GLOBAL_FEATURES
HIDDEN = 32
GENOME_LENGTH = INPUT * HIDDEN + HIDDEN + HIDDEN + 1


@dataclass(frozen=True)
class PolicyGenome:
    """Immutable flat weight vector of the scoring network."""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        if weights.size != GENOME_LENGTH:
            raise GenomeError(f"Genome must hold {GENOME_LENGTH} weights, got {weights.size}")
        if not np.all(np.isfinite(weights)):
            raise GenomeError("Genome weights must all be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def hidden_weights(self) -> np.ndarray:
        return self.weights[: INPUT * HIDDEN].reshape(INPUT, HIDDEN)

    @property
    def hidden_bias(self) -> np.ndarray:
        start = INPUT * HIDDEN
        return self.weights[start: start + HIDDEN]

    @property
    def output_weights(self) -> np.ndarray:
        start = INPUT * HIDDEN + HIDDEN
        return self.weights[start: start + HIDDEN]

    @property
    def output_bias(self) -> float:
        return float(self.weights[-1])

    def __len__(self) -> int:
        return GENOME_LENGTH

    @classmethod
    def zeros(cls) -> "PolicyGenome":
        return cls(np.zeros(GENOME_LENGTH))

    @classmethod
    def from_parts(
        cls,
        hidden_weights: np.ndarray,
        hidden_bias: np.ndarray,
        output_weights: np.ndarray,
        output_bias: float,
    ) -> "PolicyGenome":
        hidden_weights = np.asarray(hidden_weights, dtype=np.float64)
        if hidden_weights.shape != (INPUT, HIDDEN):
            raise GenomeError(f"Hidden weights must be {INPUT}x{HIDDEN}, got {hidden_weights.shape}")
        return cls(np.concatenate([
            hidden_weights.reshape(-1),
            np.asarray(hidden_bias, dtype=np.float64).reshape(HIDDEN),
            np.asarray(output_weights, dtype=np.float64).reshape(HIDDEN),
            [float(output_bias)],
        ]))

    @classmethod
    def random_uniform(cls, rng: np.random.Generator, scale: float) -> "PolicyGenome":
        return cls(rng.uniform(-scale, scale, size=GENOME_LENGTH))


@dataclass(frozen=True)
class StateFeatures:
    """Network inputs for one routing decision."""
    request: np.ndarray
    per_server: np.ndarray
    global_: np.ndarray

    def network_inputs(self) -> np.ndarray:
        """(N, 126): request ⊕ server i ⊕ global for every server i."""
        n = self.per_server.shape[0]
        return np.hstack([
            np.broadcast_to(self.request, (n, REQUEST_FEATURES)),
            self.per_server,
            np.broadcast_to(self.global_, (n, GLOBAL_FEATURES)),
        ])


def check_feature_shape(config: SimulationConfig) -> None:
    """Raise if the look-ahead horizon does not produce the network's input width."""
    width = NUM_RESOURCES * config.future_sample + 1
    if width != SERVER_FEATURES:
        raise ConfigurationError(
            f"The scoring network needs future_sample={(SERVER_FEATURES - 1) // NUM_RESOURCES}, "
            f"got {config.future_sample}"
        )


def featurize(state: ClusterState, request: UserRequest, config: SimulationConfig) -> StateFeatures:
    """
    Build the feature blocks for routing `request` on the current cluster.

    Demands are divided by demand_scale and the predicted duration by the
    predicted range; the global block is the per-coordinate mean then the
    population std of the servers' 40 resource look-ahead values.
    """
    request_part = np.empty(REQUEST_FEATURES, dtype=np.float64)
    request_part[:NUM_RESOURCES] = request.demand.as_array() / config.demand_scale
    request_part[NUM_RESOURCES] = request.predicted_duration / config.predicted_range_steps

    per_server = np.stack([lookahead_features(s, state.clock, config) for s in state.servers])
    resource_block = per_server[:, :-1]
    global_part = np.concatenate([resource_block.mean(axis=0), resource_block.std(axis=0)])
    return StateFeatures(request=request_part, per_server=per_server, global_=global_part)


def forward(genome: PolicyGenome, inputs: np.ndarray) -> Union[float, np.ndarray]:
    """
    Score one input vector (126,) or a batch (N, 126).

    score = w_out . relu(x W + b_hid) + b_out

    Raises:
        GenomeError: If the input is not finite or has the wrong width
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != INPUT:
        raise GenomeError(f"Network input must have {INPUT} values, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise GenomeError("Network input must be finite")
    hidden = np.maximum(x @ genome.hidden_weights + genome.hidden_bias, 0.0)
    scores = hidden @ genome.output_weights + genome.output_bias
    return float(scores) if x.ndim == 1 else scores


def select_action(
    genome: PolicyGenome,
    state: ClusterState,
    request: UserRequest,
    config: SimulationConfig,
) -> int:
    """
    Masked argmax of the per-server scores.

    In "exclude" mode only feasible servers compete. In "zero" mode every
    server is scored, infeasible scores are overwritten with 0, and a win by
    an infeasible server blocks the request.
    """
    feasible = mask_actions(state.servers, request.demand)
    if not feasible:
        return BLOCK
    if len(feasible) == 1 and config.mask_mode == "exclude":
        return feasible[0]

    inputs = featurize(state, request, config).network_inputs()
    if config.mask_mode == "exclude":
        scores = forward(genome, inputs[feasible])
        return int(feasible[int(np.argmax(scores))])

    scores = np.array(forward(genome, inputs), dtype=np.float64)
    allowed = np.zeros(state.num_servers, dtype=bool)
    allowed[feasible] = True
    scores[~allowed] = 0.0
    best = int(np.argmax(scores))
    return best if allowed[best] else BLOCK


class NeuralPolicy:
    """Routing policy backed by a fixed genome."""

    def __init__(self, genome: PolicyGenome, config: SimulationConfig, name: str = "neural"):
        check_feature_shape(config)
        self.genome = genome
        self.config = config
        self.name = name

    def reset(self, seed: int) -> None:
        pass

    def select(self, state: ClusterState, request: UserRequest) -> int:
        return select_action(self.genome, state, request, self.config)


def load_genome(path: str) -> PolicyGenome:
    """
    Load a genome file.

    Raises:
        GenomeError: If the file is missing, malformed or has the wrong shape
    """
    file_path = Path(path)
    if not file_path.exists():
        error_msg = f"Genome file not found: {file_path}"
        logger.error(error_msg)
        raise GenomeError(error_msg)
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            document = GenomeFile.model_validate(json.load(f))
    except (json.JSONDecodeError, ValidationError) as e:
        error_msg = f"Invalid genome file {file_path}: {e}"
        logger.error(error_msg)
        raise GenomeError(error_msg) from e
    if document.hidden != HIDDEN or document.input != INPUT:
        raise GenomeError(
            f"Genome file {file_path} describes a {document.input}x{document.hidden} network, "
            f"expected {INPUT}x{HIDDEN}"
        )
    return PolicyGenome(np.array(document.weights))


def genome_document(genome: PolicyGenome) -> GenomeFile:
    return GenomeFile(hidden=HIDDEN, input=INPUT, weights=genome.weights.tolist())


def save_genome(genome: PolicyGenome, path: str) -> None:
    DataProcessor.save_json(genome_document(genome), path)
