import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import truncnorm

from app.config.settings import WorkloadConfig
from app.core.exceptions import TraceFormatError, WorkloadError
from app.models.schemas import TraceMapping
from app.utils.data_processor import DataProcessor
from app.utils.trace_loader import TraceLoader
from app.workload import (
    apply_prediction_noise,
    disturb_workload,
    expected_load,
    generate_workload,
    load_trace,
    mean_req_num_for_load,
    sample_requests,
    scenario_requests,
)

from tests.conftest import make_request


class TestGenerateWorkload:
    def test_default_volume_matches_poisson_total(self):
        requests = generate_workload(WorkloadConfig(seed=7))
        # 600 arrival steps x 3 per step; 5 sigma of the Poisson total
        assert abs(len(requests) - 1800) < 5 * np.sqrt(1800)

    def test_zero_rate_gives_empty_stream(self):
        assert generate_workload(WorkloadConfig(mean_req_num=0)) == []

    def test_zero_horizon_gives_empty_stream(self):
        assert generate_workload(WorkloadConfig(data_time=0)) == []

    def test_requests_respect_ranges_and_order(self):
        config = WorkloadConfig(seed=3)
        requests = generate_workload(config)
        arrivals = [r.arrival_step for r in requests]
        assert arrivals == sorted(arrivals)
        assert [r.id for r in requests] == list(range(len(requests)))
        assert all(0 <= r.arrival_step < config.num_arrival_steps for r in requests)
        for r in requests:
            assert all(config.min_res_req <= v <= config.max_res_req for v in r.demand)
            assert config.min_duration_steps <= r.true_duration <= config.max_duration_steps
            assert r.predicted_duration == r.true_duration

    def test_durations_are_whole_minutes_in_steps(self):
        requests = generate_workload(WorkloadConfig(seed=1))
        # 12 s steps: one minute is 5 steps
        assert all(r.true_duration % 5 == 0 for r in requests)

    def test_same_seed_same_stream(self):
        config = WorkloadConfig(data_time=10, seed=42)
        assert generate_workload(config) == generate_workload(config)
        assert generate_workload(config) != generate_workload(replace(config, seed=43))

    @pytest.mark.parametrize("changes", [
        {"min_res_req": 5, "max_res_req": 4},
        {"mean_req_num": -1},
        {"min_user_duration": 0},
        {"min_user_duration": 10, "max_user_duration": 5},
        {"noise_sigma": -0.1},
    ])
    def test_invalid_config_rejected(self, changes):
        with pytest.raises(WorkloadError):
            WorkloadConfig(**changes)


class TestPredictionNoise:
    def test_zero_sigma_is_identity(self):
        requests = generate_workload(WorkloadConfig(data_time=20, seed=1))
        assert apply_prediction_noise(requests, 0.0, seed=5) == requests

    def test_noise_is_bounded_and_leaves_truth(self):
        config = WorkloadConfig(data_time=60, seed=2)
        requests = generate_workload(config)
        noisy = apply_prediction_noise(requests, 10.0, seed=9, config=config)
        assert len(noisy) == len(requests)
        deviations = []
        for before, after in zip(requests, noisy):
            assert after.true_duration == before.true_duration
            assert config.min_duration_steps <= after.predicted_duration <= config.max_duration_steps
            deviations.append(after.predicted_duration - after.true_duration)
        # 3 sigma of 10 minutes is 150 steps
        assert max(abs(d) for d in deviations) <= 150
        assert np.std(deviations) > 0

    def test_noise_spread_matches_truncated_gaussian(self):
        requests = [make_request(id=i, true=300) for i in range(10_000)]
        noisy = apply_prediction_noise(requests, 10.0, seed=11, config=WorkloadConfig())
        deviations = np.array([r.predicted_duration - r.true_duration for r in noisy])
        # 10 minutes is 50 steps of 12 s
        assert np.std(deviations) == pytest.approx(truncnorm.std(-3, 3) * 50.0, rel=0.15)

    def test_negative_sigma_rejected(self):
        with pytest.raises(WorkloadError):
            apply_prediction_noise([make_request()], -1.0, seed=0)

    def test_noise_is_seeded(self):
        requests = generate_workload(WorkloadConfig(data_time=20, seed=1))
        assert apply_prediction_noise(requests, 5.0, seed=3) == apply_prediction_noise(requests, 5.0, seed=3)


class TestLoad:
    def test_default_load(self):
        # mean duration 60.5 min = 302.5 steps, mean demand 5, capacity 10 x 500
        load = expected_load(WorkloadConfig(), 10, (500, 500, 500, 500))
        assert load == pytest.approx(90.75)

    def test_rate_for_load_inverts_expected_load(self):
        config = WorkloadConfig()
        rate = mean_req_num_for_load(75.0, config, 10, (500,) * 4)
        assert expected_load(replace(config, mean_req_num=rate), 10, (500,) * 4) == pytest.approx(75.0)

    def test_rate_scales_with_servers(self):
        config = WorkloadConfig()
        assert mean_req_num_for_load(75.0, config, 50, (500,) * 4) == pytest.approx(
            5 * mean_req_num_for_load(75.0, config, 10, (500,) * 4)
        )

    def test_zero_demand_load_undefined(self):
        with pytest.raises(WorkloadError):
            mean_req_num_for_load(50.0, WorkloadConfig(max_res_req=0), 10, (500,) * 4)


class TestSamplingAndDisturbance:
    def test_sample_is_reindexed_subset(self):
        requests = generate_workload(WorkloadConfig(data_time=30, seed=4))
        picked = sample_requests(requests, 10, seed=1)
        assert len(picked) == 10
        assert [r.id for r in picked] == list(range(10))
        assert [r.arrival_step for r in picked] == sorted(r.arrival_step for r in picked)
        source = {(r.arrival_step, r.demand, r.true_duration) for r in requests}
        assert all((r.arrival_step, r.demand, r.true_duration) in source for r in picked)

    def test_sample_larger_than_trace_keeps_everything(self):
        requests = generate_workload(WorkloadConfig(data_time=4, seed=4))
        assert len(sample_requests(requests, len(requests) + 5, seed=0)) == len(requests)

    def test_zero_disturbance_keeps_requests(self):
        requests = generate_workload(WorkloadConfig(data_time=10, seed=5))
        assert disturb_workload(requests, WorkloadConfig(), seed=1) == requests

    def test_disturbance_stays_in_range(self):
        config = WorkloadConfig(data_time=30, seed=6)
        requests = generate_workload(config)
        disturbed = disturb_workload(
            requests, config, seed=2, arrival_jitter_steps=5, demand_jitter=2, duration_sigma=5.0
        )
        assert len(disturbed) == len(requests)
        assert [r.arrival_step for r in disturbed] == sorted(r.arrival_step for r in disturbed)
        for r in disturbed:
            assert r.arrival_step >= 0
            assert all(config.min_res_req <= v <= config.max_res_req for v in r.demand)
            assert config.min_duration_steps <= r.true_duration <= config.max_duration_steps
        assert disturbed != requests
        assert disturbed == disturb_workload(
            requests, config, seed=2, arrival_jitter_steps=5, demand_jitter=2, duration_sigma=5.0
        )

    def test_noise_level_does_not_move_the_workload(self):
        quiet = scenario_requests(WorkloadConfig(data_time=20), 11, "eval", 3)
        noisy = scenario_requests(WorkloadConfig(data_time=20, noise_sigma=20.0), 11, "eval", 3)
        assert [(r.arrival_step, r.demand, r.true_duration) for r in quiet] == [
            (r.arrival_step, r.demand, r.true_duration) for r in noisy
        ]
        assert any(q.predicted_duration != n.predicted_duration for q, n in zip(quiet, noisy))


class TestTraceLoader:
    def test_round_trip_through_workload_csv(self, tmp_path):
        requests = apply_prediction_noise(generate_workload(WorkloadConfig(data_time=20, seed=8)), 10.0, seed=1)
        path = tmp_path / "workload.csv"
        DataProcessor.save_workload_csv(requests, str(path))
        loaded, report = load_trace(str(path), TraceMapping.workload_csv())
        assert loaded == requests
        assert report.rows_skipped == 0 and report.rows_clamped == 0

    def test_mapping_skips_and_clamps(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(
            "start,c,r,h,b,dur\n"
            "0,1,2,3,4,10\n"
            "1,,2,3,4,10\n"
            "2,1,2,3,-4,10\n"
            "3,20,2,3,4,10\n"
        )
        mapping = TraceMapping(arrival="start", cpu="c", ram="r", hdd="h", bw="b", duration="dur")
        requests, report = load_trace(str(path), mapping)
        assert (report.rows_read, report.rows_kept, report.rows_skipped, report.rows_clamped) == (4, 2, 2, 1)
        assert [r.arrival_step for r in requests] == [0, 3]
        assert requests[1].demand.cpu == 10
        assert requests[0].predicted_duration == requests[0].true_duration == 10

    def test_factors_and_rebase(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,cpu,mem,disk,net,seconds\n1000,0.5,0.2,0.1,0.3,600\n1060,0.25,0.1,0.1,0.1,1200\n")
        mapping = TraceMapping(
            arrival="t", cpu="cpu", ram="mem", hdd="disk", bw="net", duration="seconds",
            arrival_factor=1 / 12, cpu_factor=10, ram_factor=10, hdd_factor=10, bw_factor=10,
            duration_factor=1 / 12, rebase_arrivals=True,
        )
        requests, _ = load_trace(str(path), mapping)
        assert [r.arrival_step for r in requests] == [0, 5]
        assert tuple(requests[0].demand) == (5, 2, 1, 3)
        assert [r.true_duration for r in requests] == [50, 100]

    def test_non_finite_rows_skipped(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(
            "id,arrival_step,cpu,ram,hdd,bw,true_duration,predicted_duration\n"
            "1,0,1,1,1,1,10,10\n"
            "2,inf,1,1,1,1,10,10\n"
            "3,1,1,1,1,1,inf,10\n"
            "4,1e300,1,1,1,1,10,10\n"
        )
        requests, report = load_trace(str(path), TraceMapping.workload_csv())
        assert [r.id for r in requests] == [1]
        assert (report.rows_kept, report.rows_skipped, report.rows_clamped) == (1, 3, 0)
        assert all(r.arrival_step >= 0 for r in requests)

    def test_fractional_ids_skipped(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(
            "id,arrival_step,cpu,ram,hdd,bw,true_duration,predicted_duration\n"
            "7,0,1,1,1,1,10,10\n"
            "3.9,1,1,1,1,1,10,10\n"
            "4.0,1,1,1,1,1,10,10\n"
        )
        requests, report = load_trace(str(path), TraceMapping.workload_csv())
        assert [r.id for r in requests] == [7, 4]
        assert report.rows_skipped == 1

    def test_repeated_ids_rejected(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(
            "id,arrival_step,cpu,ram,hdd,bw,true_duration,predicted_duration\n"
            "7,0,1,1,1,1,10,10\n"
            "7,0,2,2,2,2,10,10\n"
        )
        with pytest.raises(TraceFormatError, match="repeats request ids"):
            load_trace(str(path), TraceMapping.workload_csv())

    def test_repeated_id_on_skipped_row_is_ignored(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(
            "id,arrival_step,cpu,ram,hdd,bw,true_duration,predicted_duration\n"
            "7,0,1,1,1,1,10,10\n"
            "7,,1,1,1,1,10,10\n"
        )
        requests, report = load_trace(str(path), TraceMapping.workload_csv())
        assert [r.id for r in requests] == [7]
        assert report.rows_skipped == 1

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(TraceFormatError):
            load_trace(str(path), TraceMapping.workload_csv())

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(TraceFormatError):
            load_trace(str(tmp_path / "absent.csv"), TraceMapping.workload_csv())

    def test_mapping_file(self, tmp_path):
        path = tmp_path / "mapping.json"
        path.write_text(json.dumps({"arrival": "a", "cpu": "c", "ram": "r", "hdd": "h", "bw": "b", "duration": "d"}))
        assert TraceLoader.load_mapping(str(path)).columns["duration"] == "d"
        path.write_text(json.dumps({"arrival": "a"}))
        with pytest.raises(TraceFormatError):
            TraceLoader.load_mapping(str(path))
