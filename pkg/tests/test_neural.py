import json

import numpy as np
import pytest

from app.config.settings import SimulationConfig
from app.core.exceptions import ConfigurationError, GenomeError
from app.models.domain import BLOCK
from app.models.schemas import GENOME_FORMAT
from app.policies.base import mask_actions
from app.policies.neural import (
    GENOME_LENGTH,
    HIDDEN,
    INPUT,
    REQUEST_FEATURES,
    NeuralPolicy,
    PolicyGenome,
    featurize,
    forward,
    load_genome,
    save_genome,
    select_action,
)
from app.simulation.cluster import ClusterState

from tests.conftest import make_request, occupy


def least_loaded_genome() -> PolicyGenome:
    """Scores a server by minus its predicted CPU use at the first look-ahead offset."""
    hidden_weights = np.zeros((INPUT, HIDDEN))
    hidden_weights[REQUEST_FEATURES + 0, 0] = 1.0
    output_weights = np.zeros(HIDDEN)
    output_weights[0] = -1.0
    return PolicyGenome.from_parts(hidden_weights, np.zeros(HIDDEN), output_weights, 0.0)


def populated_state(config: SimulationConfig, rng: np.random.Generator) -> ClusterState:
    state = ClusterState(config)
    for i in range(config.server_num):
        for _ in range(rng.integers(0, 4)):
            predicted = int(rng.integers(1, 700))
            occupy(state, i, demand=tuple(int(v) for v in rng.integers(0, 3, size=4)),
                   true=int(rng.integers(1, 600)), predicted=predicted)
    return state


class TestGenome:
    def test_dimensions(self):
        assert INPUT == 126
        assert GENOME_LENGTH == 126 * 32 + 32 + 32 + 1 == 4097

    def test_wrong_length_rejected(self):
        with pytest.raises(GenomeError):
            PolicyGenome(np.zeros(4096))

    def test_non_finite_rejected(self):
        weights = np.zeros(GENOME_LENGTH)
        weights[10] = np.nan
        with pytest.raises(GenomeError):
            PolicyGenome(weights)

    def test_immutable(self):
        genome = PolicyGenome.zeros()
        with pytest.raises(ValueError):
            genome.weights[0] = 1.0

    def test_layout(self):
        weights = np.arange(GENOME_LENGTH, dtype=np.float64)
        genome = PolicyGenome(weights)
        assert genome.hidden_weights[0, 1] == 1
        assert genome.hidden_weights[1, 0] == HIDDEN
        assert genome.hidden_bias[0] == INPUT * HIDDEN
        assert genome.output_weights[0] == INPUT * HIDDEN + HIDDEN
        assert genome.output_bias == GENOME_LENGTH - 1

    def test_file_round_trip(self, tmp_path):
        genome = PolicyGenome.random_uniform(np.random.default_rng(0), 0.5)
        path = tmp_path / "genome.json"
        save_genome(genome, str(path))
        document = json.loads(path.read_text())
        assert document["format"] == GENOME_FORMAT
        assert (document["input"], document["hidden"]) == (126, 32)
        np.testing.assert_array_equal(load_genome(str(path)).weights, genome.weights)

    def test_bad_files_rejected(self, tmp_path):
        with pytest.raises(GenomeError):
            load_genome(str(tmp_path / "missing.json"))
        short = tmp_path / "short.json"
        short.write_text(json.dumps({"format": GENOME_FORMAT, "hidden": 32, "input": 126, "weights": [0.0] * 10}))
        with pytest.raises(GenomeError):
            load_genome(str(short))
        wrong_format = tmp_path / "format.json"
        wrong_format.write_text(json.dumps({"format": "other", "weights": [0.0] * GENOME_LENGTH}))
        with pytest.raises(GenomeError):
            load_genome(str(wrong_format))


class TestFeaturize:
    def test_empty_cluster(self, small_sim):
        features = featurize(ClusterState(small_sim), make_request(demand=(5, 0, 10, 2), predicted=300), small_sim)
        np.testing.assert_allclose(features.request, [0.5, 0.0, 1.0, 0.2, 0.5])
        assert not features.per_server.any()
        assert not features.global_.any()
        assert features.network_inputs().shape == (3, 126)

    def test_single_server_has_zero_spread(self):
        config = SimulationConfig(server_num=1, capacity=10)
        state = populated_state(config, np.random.default_rng(2))
        occupy(state, 0, demand=(2, 2, 2, 2), predicted=400)
        features = featurize(state, make_request(), config)
        assert not features.global_[40:].any()
        np.testing.assert_allclose(features.global_[:40], features.per_server[0, :40])

    def test_global_block_is_column_statistics(self):
        config = SimulationConfig(server_num=7, capacity=10)
        state = populated_state(config, np.random.default_rng(3))
        features = featurize(state, make_request(), config)
        block = features.per_server[:, :40]
        np.testing.assert_allclose(features.global_[:40], block.mean(axis=0), atol=1e-15)
        np.testing.assert_allclose(features.global_[40:], np.sqrt(((block - block.mean(axis=0)) ** 2).mean(axis=0)), atol=1e-12)
        inputs = features.network_inputs()
        np.testing.assert_array_equal(inputs[4, 5:46], features.per_server[4])
        np.testing.assert_array_equal(inputs[4, 46:], features.global_)


class TestForward:
    def test_zero_genome_scores_zero(self):
        x = np.random.default_rng(0).random(INPUT)
        assert forward(PolicyGenome.zeros(), x) == 0.0

    def test_bias_path(self):
        rng = np.random.default_rng(1)
        b_hid, w_out = rng.normal(size=HIDDEN), rng.normal(size=HIDDEN)
        genome = PolicyGenome.from_parts(np.zeros((INPUT, HIDDEN)), b_hid, w_out, 0.7)
        expected = 0.7 + sum(w * max(b, 0.0) for w, b in zip(w_out, b_hid))
        assert forward(genome, np.zeros(INPUT)) == pytest.approx(expected, abs=1e-12)

    def test_matches_naive_evaluation(self):
        rng = np.random.default_rng(2)
        genome = PolicyGenome(rng.normal(size=GENOME_LENGTH))
        x = rng.random(INPUT)
        w, b, v, c = genome.hidden_weights, genome.hidden_bias, genome.output_weights, genome.output_bias
        hidden = [max(sum(x[i] * w[i, j] for i in range(INPUT)) + b[j], 0.0) for j in range(HIDDEN)]
        expected = sum(v[j] * hidden[j] for j in range(HIDDEN)) + c
        assert forward(genome, x) == pytest.approx(expected, abs=1e-10)

    def test_batch_matches_rows(self):
        rng = np.random.default_rng(3)
        genome = PolicyGenome(rng.normal(size=GENOME_LENGTH))
        batch = rng.random((5, INPUT))
        np.testing.assert_allclose(forward(genome, batch), [forward(genome, row) for row in batch], rtol=1e-10, atol=1e-12)

    def test_non_finite_input_rejected(self):
        x = np.zeros(INPUT)
        x[3] = np.inf
        with pytest.raises(GenomeError):
            forward(PolicyGenome.zeros(), x)

    def test_output_layer_homogeneity(self):
        rng = np.random.default_rng(4)
        genome = PolicyGenome(rng.normal(size=GENOME_LENGTH))
        scaled = PolicyGenome.from_parts(
            genome.hidden_weights, genome.hidden_bias, 3.0 * genome.output_weights, 3.0 * genome.output_bias
        )
        batch = rng.random((6, INPUT))
        np.testing.assert_allclose(forward(scaled, batch), 3.0 * forward(genome, batch), rtol=1e-10, atol=1e-12)
        assert np.argmax(forward(scaled, batch)) == np.argmax(forward(genome, batch))


class TestSelectAction:
    def test_zero_genome_picks_lowest_feasible(self, small_sim):
        assert select_action(PolicyGenome.zeros(), ClusterState(small_sim), make_request(), small_sim) == 0

    def test_single_feasible_server(self, small_sim):
        state = ClusterState(small_sim)
        occupy(state, 0, demand=(10, 10, 10, 10))
        occupy(state, 1, demand=(10, 10, 10, 10))
        genome = PolicyGenome(np.random.default_rng(0).normal(size=GENOME_LENGTH))
        assert select_action(genome, state, make_request(), small_sim) == 2

    def test_nothing_feasible_blocks(self, small_sim):
        state = ClusterState(small_sim)
        assert select_action(PolicyGenome.zeros(), state, make_request(demand=(11, 0, 0, 0)), small_sim) == BLOCK

    def test_constructed_genome_picks_least_loaded(self):
        config = SimulationConfig(server_num=3, capacity=50)
        state = ClusterState(config)
        for server, count in enumerate((3, 1, 2)):
            occupy(state, server, demand=(1, 1, 1, 1), true=100, predicted=600, count=count)
        assert select_action(least_loaded_genome(), state, make_request(), config) == 1

    def test_zero_mask_mode_can_block(self):
        config = SimulationConfig(server_num=2, capacity=10, mask_mode="zero")
        state = ClusterState(config)
        occupy(state, 0, demand=(10, 10, 10, 10))
        weights = np.zeros(GENOME_LENGTH)
        weights[-1] = -1.0
        genome = PolicyGenome(weights)
        assert select_action(genome, state, make_request(), config) == BLOCK
        exclude = SimulationConfig(server_num=2, capacity=10)
        assert select_action(genome, state, make_request(), exclude) == 1

    @pytest.mark.parametrize("servers", [1, 3, 10, 50])
    def test_same_genome_scales_to_any_cluster(self, servers):
        rng = np.random.default_rng(servers)
        genome = PolicyGenome(rng.normal(size=GENOME_LENGTH))
        config = SimulationConfig(server_num=servers, capacity=10)
        for _ in range(20):
            state = populated_state(config, rng)
            request = make_request(demand=tuple(int(v) for v in rng.integers(0, 8, size=4)), predicted=200)
            action = select_action(genome, state, request, config)
            feasible = mask_actions(state.servers, request.demand)
            assert action in feasible if feasible else action == BLOCK

    def test_permuting_servers_permutes_scores(self):
        rng = np.random.default_rng(9)
        config = SimulationConfig(server_num=6, capacity=10)
        genome = PolicyGenome(rng.normal(size=GENOME_LENGTH))
        state = populated_state(config, rng)
        request = make_request(predicted=250)
        scores = forward(genome, featurize(state, request, config).network_inputs())
        order = rng.permutation(6)
        state.servers = [state.servers[i] for i in order]
        permuted = forward(genome, featurize(state, request, config).network_inputs())
        np.testing.assert_allclose(permuted, scores[order], rtol=1e-9, atol=1e-12)

    def test_policy_requires_ten_offsets(self):
        with pytest.raises(ConfigurationError):
            NeuralPolicy(PolicyGenome.zeros(), SimulationConfig(future_sample=5))
