import json
from dataclasses import replace
from fractions import Fraction

import pytest

from hpasim.model import (
    ConfigError,
    Decision,
    DisruptionAssessment,
    DisruptionEvent,
    DisruptionStatus,
    FinalDecision,
    Mode,
    ScalingReport,
    ScenarioConfig,
    ServiceSpec,
    ServiceState,
    benchmark_cluster,
    benchmark_config,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
    validate_config,
)


def spec(**kw):
    base = dict(name="a", res_req=100, res_limit=200, min_replicas=1, max_replicas=5, threshold=50, demand_weight=1)
    base.update(kw)
    return ServiceSpec(**base)


class TestBenchmarkCluster:
    def test_has_eleven_services(self):
        assert len(benchmark_cluster()) == 11

    def test_total_capacity(self):
        assert sum(s.res_req * s.max_replicas for s in benchmark_cluster()) == 6350

    def test_per_replica_tier(self):
        assert sum(s.res_req for s in benchmark_cluster()) == 8 * 100 + 2 * 200 + 70

    def test_resource_settings(self):
        by_name = {s.name: s for s in benchmark_cluster()}
        assert (by_name["redis"].res_req, by_name["redis"].res_limit) == (70, 125)
        for name in ("cartservice", "adservice"):
            assert (by_name[name].res_req, by_name[name].res_limit) == (200, 300)
        standard = [s for s in by_name.values() if s.res_req == 100]
        assert len(standard) == 8
        assert all(s.res_limit == 200 for s in standard)

    def test_5r_50(self):
        for s in benchmark_cluster():
            assert (s.min_replicas, s.max_replicas, s.threshold) == (1, 5, 50)

    def test_weights_sum_to_one(self):
        assert sum(s.demand_weight for s in benchmark_cluster()) == 1

    def test_benchmark_config_validates(self):
        config = benchmark_config()
        assert validate_config(config) == config


class TestServiceSpecInvariants:
    @pytest.mark.parametrize(
        "kw, field",
        [
            ({"threshold": 0}, "threshold"),
            ({"threshold": 101}, "threshold"),
            ({"res_req": 0}, "res_req"),
            ({"res_limit": 50}, "res_limit"),
            ({"min_replicas": 0}, "min_replicas"),
            ({"min_replicas": 3, "max_replicas": 2}, "max_replicas"),
            ({"demand_weight": -0.1}, "demand_weight"),
        ],
    )
    def test_rejects(self, kw, field):
        with pytest.raises(ConfigError) as info:
            spec(**kw)
        assert info.value.field == field

    def test_float_inputs_become_exact(self):
        s = spec(demand_weight=0.1)
        assert s.demand_weight == Fraction(1, 10)


class TestValidateConfig:
    def test_threshold_zero_in_json(self):
        data = config_to_dict(benchmark_config())
        data["services"][0]["threshold"] = 0
        with pytest.raises(ConfigError) as info:
            config_from_dict(data)
        assert info.value.field == "threshold"

    def test_weights_within_tolerance_are_renormalized(self):
        services = (spec(name="a", demand_weight="0.5"), spec(name="b", demand_weight="0.499999"))
        config = validate_config(ScenarioConfig(services=services))
        assert sum(s.demand_weight for s in config.services) == 1
        assert config.services[0].demand_weight > config.services[1].demand_weight

    def test_weights_far_from_one_rejected(self):
        services = (spec(name="a", demand_weight="0.5"), spec(name="b", demand_weight="0.4"))
        with pytest.raises(ConfigError) as info:
            validate_config(ScenarioConfig(services=services))
        assert info.value.field == "demand_weight"

    def test_exact_config_returned_unchanged(self):
        config = ScenarioConfig(services=(spec(),))
        assert validate_config(config) is config

    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"tick_seconds": 0}, "tick_seconds"),
            ({"ramp_seconds": 1000}, "ramp_seconds"),
            ({"disruption": DisruptionEvent(330, 100)}, "target_wastage_percent"),
            ({"disruption": DisruptionEvent(900, 50)}, "time_seconds"),
            ({"seed": -1}, "seed"),
            ({"services": ()}, "services"),
        ],
    )
    def test_scenario_invariants(self, overrides, field):
        with pytest.raises(ConfigError) as info:
            validate_config(replace(benchmark_config(), **overrides))
        assert info.value.field == field

    def test_duplicate_names(self):
        with pytest.raises(ConfigError):
            validate_config(ScenarioConfig(services=(spec(demand_weight=0.5), spec(demand_weight=0.5))))


class TestJson:
    def test_roundtrip(self, tmp_path):
        config = benchmark_config(mode=Mode.BASELINE, seed=7).with_disruption(50)
        path = tmp_path / "c.json"
        dump_config(config, path)
        assert load_config(path) == config

    def test_unknown_top_level_field(self):
        data = config_to_dict(benchmark_config())
        data["replicas"] = 3
        with pytest.raises(ConfigError) as info:
            config_from_dict(data)
        assert info.value.field == "replicas"

    def test_unknown_service_field(self):
        data = config_to_dict(benchmark_config())
        data["services"][0]["memory"] = 128
        with pytest.raises(ConfigError):
            config_from_dict(data)

    def test_minimal_document_uses_defaults(self):
        data = {"services": [{"name": "x", "res_req": 100, "res_limit": 200, "min_replicas": 1,
                              "max_replicas": 3, "threshold": 50, "demand_weight": 1}]}
        config = config_from_dict(data)
        assert config.tick_seconds == 15 and config.mode is Mode.SECURE and config.disruption is None

    def test_snake_case_fields(self, tmp_path):
        path = tmp_path / "c.json"
        dump_config(benchmark_config(), path)
        data = json.loads(path.read_text())
        assert set(data) >= {"services", "tick_seconds", "duration_seconds", "ramp_seconds",
                             "peak_users", "per_user_mcpu", "disruption", "mode", "seed"}

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{")
        with pytest.raises(ConfigError):
            load_config(path)


class TestValueTypes:
    def test_service_state_bounds(self):
        with pytest.raises(ValueError):
            ServiceState(current_replicas=3, slots=2)
        with pytest.raises(ValueError):
            ServiceState(current_replicas=1, slots=2, capacity_mcpu=-1)

    def test_scale_up_requires_growth(self):
        with pytest.raises(ValueError):
            ScalingReport("a", desired_replicas=2, decision=Decision.SCALE_UP, escalate=False, current_replicas=2)

    def test_assessment_consistency(self):
        DisruptionAssessment(100, 50, 50, DisruptionStatus.DISRUPTION_IDENTIFIED, 50)
        with pytest.raises(ValueError):
            DisruptionAssessment(100, 50, 40, DisruptionStatus.DISRUPTION_IDENTIFIED, 50)
        with pytest.raises(ValueError):
            DisruptionAssessment(100, 50, 50, DisruptionStatus.NO_DISRUPTION, 50)

    def test_final_decision_ceiling(self):
        with pytest.raises(ValueError):
            FinalDecision("a", Decision.SCALE_UP, res_desired=6, res_max=5)

    def test_types_are_immutable(self):
        s = spec()
        with pytest.raises(AttributeError):
            s.res_req = 5
