import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hpasim.engine import Simulation, run
from hpasim.model import ConfigError, Decision, Mode, ScenarioConfig, ServiceSpec, benchmark_config


def test_zero_duration():
    result = run(replace(benchmark_config(), duration_seconds=Fraction(0), ramp_seconds=Fraction(0)))
    assert result.samples == [] and result.summary["means"] == {}


def test_equilibrium_step_is_a_fixpoint():
    # 50 users * 4 mCPU = 200 mCPU at threshold 50 on 4 replicas of 100
    spec = ServiceSpec("a", 100, 200, 4, 5, 50, 1)
    cfg = ScenarioConfig(services=(spec,), peak_users=50, per_user_mcpu=4, ramp_seconds=0)
    sim = Simulation(cfg)
    engine = sim.initial_state()
    for k in range(5):
        engine, out = sim.step(engine, k)
        assert out.reports[0].decision is Decision.NO_SCALE
        assert engine.states["a"].current_replicas == 4


def test_spike_touches_only_the_hot_service():
    hot = ServiceSpec("hot", 100, 200, 1, 5, 50, "0.9")
    cold = ServiceSpec("cold", 100, 200, 2, 5, 50, "0.1")
    cfg = ScenarioConfig(services=(hot, cold), peak_users=100, per_user_mcpu=2, ramp_seconds=0)
    sim = Simulation(cfg)
    engine, _ = sim.step(sim.initial_state(), 0)
    # hot: 180 mCPU on 1 replica = 180% -> ceil(1*180/50) = 4
    assert engine.states["hot"].current_replicas == 4
    assert engine.states["cold"].current_replicas == 2


def test_escalation_borrows_from_donor():
    a = ServiceSpec("A", 100, 200, 4, 4, 50, "0.75")
    b = ServiceSpec("B", 100, 200, 2, 5, 50, "0.25")
    cfg = ScenarioConfig(services=(a, b), peak_users=100, per_user_mcpu=4, ramp_seconds=0)
    sim = Simulation(cfg)
    engine, out = sim.step(sim.initial_state(), 0)
    by = {r.service: r for r in out.reports}
    assert by["A"].desired_replicas == 6 and by["A"].escalate
    assert by["B"].desired_replicas == 2
    assert out.redistributed
    assert engine.states["A"].current_replicas == 6
    assert engine.states["B"].current_replicas == 2
    total = sum(engine.states[s].physical_mcpu(sp) for s, sp in (("A", a), ("B", b)))
    assert total == 900


def test_baseline_also_redistributes_without_disruption():
    a = ServiceSpec("A", 100, 200, 4, 4, 50, "0.75")
    b = ServiceSpec("B", 100, 200, 2, 5, 50, "0.25")
    cfg = ScenarioConfig(services=(a, b), peak_users=100, per_user_mcpu=4, ramp_seconds=0, mode=Mode.BASELINE)
    sim = Simulation(cfg)
    engine, _ = sim.step(sim.initial_state(), 0)
    # the two-layer baseline still redistributes, so both modes agree without a disruption
    assert engine.states["A"].current_replicas == 6


def test_modes_identical_without_disruption(tmp_path):
    run(benchmark_config(), tmp_path / "s")
    run(replace(benchmark_config(), mode=Mode.BASELINE), tmp_path / "b")
    assert (tmp_path / "s" / "timeseries.csv").read_bytes() == (tmp_path / "b" / "timeseries.csv").read_bytes()


def test_service_order_is_irrelevant():
    cfg = benchmark_config().with_disruption(50)
    shuffled = list(cfg.services)
    random.Random(1).shuffle(shuffled)
    a = run(cfg)
    b = run(replace(cfg, services=tuple(shuffled)))
    assert a.samples == b.samples


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 10_000),
    st.sampled_from([Mode.SECURE, Mode.BASELINE]),
    st.sampled_from([0, 10, 25, 50, 75]),
    st.sampled_from([0, 5, 20]),
)
def test_replica_bounds_every_tick(seed, mode, target, noise):
    cfg = replace(benchmark_config(), seed=seed, mode=mode, demand_noise_percent=noise).with_disruption(target)
    sim = Simulation(cfg)
    engine = sim.initial_state()
    for k in range(sim.n_ticks):
        engine, _ = sim.step(engine, k)
        for spec in sim.specs:
            s = engine.states[spec.name]
            assert spec.min_replicas <= s.current_replicas <= s.slots


def test_noise_does_not_perturb_injection():
    quiet = run(replace(benchmark_config(), seed=3).with_disruption(50))
    noisy = run(replace(benchmark_config(), seed=3, demand_noise_percent=10).with_disruption(50))
    assert quiet.summary["actual_wastage_mcpu"] == noisy.summary["actual_wastage_mcpu"]


def test_disruption_after_end_is_rejected():
    with pytest.raises(ConfigError):
        run(benchmark_config().with_disruption(50, 900))


def test_disruption_in_last_tick_fires():
    result = run(benchmark_config().with_disruption(50, 885))
    assert result.summary["actual_wastage_mcpu"] > 0


def test_summary_fields():
    summary = run(benchmark_config().with_disruption(50)).summary
    assert summary["initial_capacity_mcpu"] == 6350
    assert summary["ticks"] == 60
    assert abs(summary["severity_percent"] - 50) <= 2
    assert set(summary["means"]) == {"supply_cpu", "overutil_pct", "overutil_mcpu", "underprov_mcpu", "overprov_mcpu"}


@pytest.mark.parametrize("mode", [Mode.SECURE, Mode.BASELINE])
def test_capacity_conserved_after_injection(mode):
    sim = Simulation(replace(benchmark_config(), mode=mode).with_disruption(50))
    engine = sim.initial_state()
    for k in range(sim.n_ticks):
        engine, _ = sim.step(engine, k)
        if k >= sim.fire_tick:
            crc = sum(engine.states[s.name].physical_mcpu(s) for s in sim.specs)
            assert crc == 6350 - engine.injection.wastage_mcpu


def test_secure_ceilings_follow_surviving_slots_at_injection():
    sim = Simulation(benchmark_config().with_disruption(50))
    engine = sim.initial_state()
    for k in range(sim.fire_tick + 1):
        engine, out = sim.step(engine, k)
    ceilings = {d.name: d.effective_max for d in out.sample.per_service}
    assert sum(ceilings[s.name] * s.res_req for s in sim.specs) <= 6350 - engine.injection.wastage_mcpu
