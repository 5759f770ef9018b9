import json

import pytest

from app.cli import dependencies
from app.config.settings import EvoConfig, RunConfig, SimulationConfig, minutes_to_steps
from app.core.exceptions import ConfigurationError


class TestMinutesToSteps:
    @pytest.mark.parametrize("minutes,time_step,steps", [(1, 12, 5), (120, 12, 600), (0.5, 60, 1), (2, 7, 18)])
    def test_rounds_up(self, minutes, time_step, steps):
        assert minutes_to_steps(minutes, time_step) == steps


class TestSimulationConfig:
    def test_scalar_capacity_expands(self):
        assert SimulationConfig(capacity=7).capacity == (7, 7, 7, 7)

    def test_lookahead_offsets(self):
        assert SimulationConfig().lookahead_offsets.tolist() == list(range(60, 601, 60))

    @pytest.mark.parametrize("changes", [
        {"capacity": (1, 2, 3)},
        {"capacity": 0},
        {"server_num": 0},
        {"future_sample": 7},
        {"mask_mode": "drop"},
        {"block_queue_size": -1},
    ])
    def test_invalid_rejected(self, changes):
        with pytest.raises(ConfigurationError):
            SimulationConfig(**changes)


class TestEvoConfig:
    def test_population_split_must_add_up(self):
        with pytest.raises(ConfigurationError):
            EvoConfig(pop_size=10, elite_count=5, offspring_count=4)

    def test_unknown_seed_policy_rejected(self):
        with pytest.raises(ConfigurationError):
            EvoConfig(eval_seed_policy="sometimes")


class TestRunConfig:
    def test_nested_sections_merge_over_defaults(self):
        config = RunConfig.from_dict({"simulation": {"server_num": 4}, "evolution": {"max_simulations": 100}})
        assert config.simulation.server_num == 4
        assert config.simulation.capacity == (500, 500, 500, 500)
        assert config.evolution.max_simulations == 100
        assert config.evolution.pop_size == 50

    def test_time_step_is_shared(self):
        config = RunConfig.from_dict({"workload": {"time_step": 60}})
        assert config.simulation.time_step == 60
        config = RunConfig.from_dict({"simulation": {"time_step": 30}})
        assert config.workload.time_step == 30

    def test_conflicting_time_steps_rejected(self):
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict({"workload": {"time_step": 60}, "simulation": {"time_step": 30}})

    def test_demand_scale_follows_max_request(self):
        assert RunConfig.from_dict({"workload": {"max_res_req": 20}}).simulation.demand_scale == 20

    @pytest.mark.parametrize("data", [{"bogus": 1}, {"simulation": {"servers": 3}}])
    def test_unknown_keys_rejected(self, data):
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict(data)

    def test_overrides_ignore_none_and_layer_on_top(self):
        base = RunConfig.from_dict({"seed": 3, "simulation": {"server_num": 4}})
        assert base.with_overrides(seed=None) is base
        config = base.with_overrides(seed=9, n_seeds=2)
        assert (config.seed, config.n_seeds, config.simulation.server_num) == (9, 2, 4)

    def test_environment_layer(self, monkeypatch):
        monkeypatch.setenv("ROUTER_SEED", "12")
        monkeypatch.setenv("ROUTER_POLICY", "round_robin")
        monkeypatch.setenv("LOG_LEVEL", "debug")
        config = RunConfig.from_env()
        assert (config.seed, config.policy, config.log_level) == (12, "round_robin", "DEBUG")

    def test_bad_environment_value(self, monkeypatch):
        monkeypatch.setenv("ROUTER_PARALLELISM", "many")
        with pytest.raises(ConfigurationError):
            RunConfig.from_env()

    def test_file_layers_over_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ROUTER_SEED", "12")
        monkeypatch.setenv("ROUTER_OUT_DIR", "elsewhere")
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seed": 5}))
        config = dependencies.get_config(str(path), n_seeds=3)
        assert (config.seed, config.out_dir, config.n_seeds) == (5, "elsewhere", 3)

    def test_missing_or_broken_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(tmp_path / "absent.json"))
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(broken))

    def test_snapshot_reproduces_configuration(self):
        config = RunConfig.from_dict({"seed": 4, "simulation": {"capacity": 30}, "policies": ["random"]})
        snapshot = json.loads(json.dumps(config.snapshot()))
        assert snapshot["simulation"]["capacity"] == [30, 30, 30, 30]
        assert RunConfig.from_dict(snapshot) == config

    def test_snapshot_leaves_out_execution_settings(self):
        snapshot = RunConfig.from_dict({"parallelism": 3, "log_level": "DEBUG"}).snapshot()
        assert "parallelism" not in snapshot and "log_level" not in snapshot
