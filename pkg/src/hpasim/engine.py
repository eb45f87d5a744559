"""Discrete-time tick loop wiring the three control layers together.

Per tick:

1. fire the scheduled disruption if due;
2. measure users, demand and utilization on the current replicas;
3. run the per-service managers;
4. (secure mode) reassess capacity and rewrite ceilings to real slots;
5. if any service wants more than its ceiling, redistribute surplus;
6. execute, then record metrics.

Redistributed capacity is physical: a donor gives up slot capacity and the
receiver can provision replicas on it. Baseline mode plans against its
configured ceilings, so transfers it plans from slots that no longer exist
cannot be realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import capacity, disruption, local_scaler, resources, workload
from .metrics import (
    MetricSample,
    RunWriter,
    ServiceDetail,
    cpu_overprovision,
    cpu_overutilization,
    cpu_underprovision,
    summarize,
    supply_cpu,
)
from .model import (
    DisruptionStatus,
    FinalDecision,
    Mode,
    ScalingReport,
    ScenarioConfig,
    ServiceSpec,
    ServiceState,
    validate_config,
)


class ReplicaBoundViolation(AssertionError):
    pass


@dataclass
class EngineState:
    states: dict[str, ServiceState]
    ceilings: dict[str, int]
    disruption_rng: np.random.Generator
    noise_rng: np.random.Generator | None
    fired: bool = False
    injection: disruption.InjectionResult | None = None
    injection_assessment: Any = None


@dataclass
class TickOutput:
    sample: MetricSample
    kb: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    reports: list[ScalingReport] = field(default_factory=list)
    finals: list[FinalDecision] = field(default_factory=list)
    redistributed: bool = False


@dataclass
class RunResult:
    summary: dict[str, Any]
    samples: list[MetricSample]
    out_dir: Path | None = None

    @property
    def paths(self) -> dict[str, Path]:
        if self.out_dir is None:
            return {}
        names = ("timeseries.csv", "summary.json", "kb_microservice.jsonl", "kb_capacity.jsonl", "kb_resource.jsonl")
        return {name: self.out_dir / name for name in names}


class Simulation:
    def __init__(self, config: ScenarioConfig):
        self.config = validate_config(config)
        self.specs: list[ServiceSpec] = sorted(self.config.services, key=lambda s: s.name)
        self.by_name = {s.name: s for s in self.specs}
        self.irc = capacity.compute_initial_capacity(self.specs)
        self.n_ticks = math.ceil(self.config.duration_seconds / self.config.tick_seconds)
        self.fire_tick = disruption.schedule(self.config)

    def initial_state(self) -> EngineState:
        disruption_seq, noise_seq = np.random.SeedSequence(self.config.seed).spawn(2)
        noise_rng = np.random.default_rng(noise_seq) if self.config.demand_noise_percent > 0 else None
        return EngineState(
            states={s.name: ServiceState.initial(s) for s in self.specs},
            ceilings={s.name: s.max_replicas for s in self.specs},
            disruption_rng=np.random.default_rng(disruption_seq),
            noise_rng=noise_rng,
        )

    def time_of(self, k: int) -> Fraction:
        return k * self.config.tick_seconds

    # -- one MAPE cycle ----------------------------------------------------

    def step(self, engine: EngineState, k: int) -> tuple[EngineState, TickOutput]:
        cfg = self.config
        t = self.time_of(k)
        states = dict(engine.states)
        ceilings = dict(engine.ceilings)
        kb: dict[str, list[dict[str, Any]]] = {"microservice": [], "capacity": [], "resource": []}
        fired = engine.fired
        injection = engine.injection
        injection_assessment = engine.injection_assessment

        if not fired and self.fire_tick is not None and k >= self.fire_tick:
            injection = disruption.inject(
                states, self.specs, cfg.disruption.target_wastage_percent, engine.disruption_rng
            )
            states = injection.states
            fired = True
            injection_assessment = capacity.assess(
                self.irc, capacity.compute_current_capacity(states, self.specs)
            )
            kb["capacity"].append(
                {
                    "event": "injection",
                    "target_wastage_percent": cfg.disruption.target_wastage_percent,
                    "target_mcpu": injection.target_mcpu,
                    "actual_wastage_mcpu": injection.wastage_mcpu,
                    "slots_removed": injection.removed,
                }
            )

        # Monitor: demand and utilization on the replicas running at tick start.
        users = workload.users_at(t, cfg)
        for spec in self.specs:
            demand = workload.service_demand(users, spec, cfg)
            demand *= workload.noise_factor(engine.noise_rng, cfg.demand_noise_percent)
            state = states[spec.name]
            states[spec.name] = replace(state, utilization=workload.utilization(demand, state, spec))
        measured = dict(states)

        if cfg.mode is Mode.SECURE:
            crc = capacity.compute_current_capacity(states, self.specs)
            assessment = capacity.assess(self.irc, crc)
            if assessment.status is DisruptionStatus.DISRUPTION_IDENTIFIED:
                ceilings, states = capacity.update_capacities(states, self.specs)
            kb["capacity"].append({"event": "assessment", **_record(assessment)})
        else:
            ceilings = {s.name: s.max_replicas for s in self.specs}

        reports = [local_scaler.analyze(spec, states[spec.name], ceilings[spec.name]) for spec in self.specs]
        escalated = any(r.escalate for r in reports)

        if escalated:
            finals, ceilings, states = self._redistribute(reports, ceilings, states)
        else:
            finals = [local_scaler.pass_through(r, ceilings[r.service]) for r in reports]

        for final in finals:
            spec = self.by_name[final.service]
            states[spec.name] = local_scaler.execute_scale(states[spec.name], final, spec)
        self._check_bounds(states, t)

        overutil_pct, overutil_mcpu = cpu_overutilization(measured, self.specs)
        sample = MetricSample(
            t=t,
            supply_cpu=supply_cpu(measured, self.specs),
            overutilization_pct=overutil_pct,
            overutilization_mcpu=overutil_mcpu,
            underprovision_mcpu=cpu_underprovision(reports, ceilings, self.specs),
            overprovision_mcpu=cpu_overprovision(reports, ceilings, self.specs),
            per_service=tuple(
                ServiceDetail(
                    name=r.service,
                    current_replicas=r.current_replicas,
                    desired_replicas=r.desired_replicas,
                    utilization=measured[r.service].utilization,
                    effective_max=ceilings[r.service],
                    slots=measured[r.service].slots,
                )
                for r in reports
            ),
        )
        for r in reports:
            kb["microservice"].append(
                {**_record(r), "utilization": measured[r.service].utilization, "threshold": self.by_name[r.service].threshold}
            )
        for f in finals:
            kb["resource"].append({**_record(f), "redistributed": escalated})

        if cfg.mode is Mode.BASELINE:
            ceilings = {s.name: s.max_replicas for s in self.specs}
        new_engine = replace(
            engine,
            states=states,
            ceilings=ceilings,
            fired=fired,
            injection=injection,
            injection_assessment=injection_assessment,
        )
        return new_engine, TickOutput(sample, kb, reports, finals, escalated)

    def _redistribute(self, reports, ceilings, states):
        """Plan transfers on the mode's view of capacity, then realize what physically exists."""
        under, over = resources.classify(reports, ceilings, self.specs)
        planned_caps = {s.name: ceilings[s.name] * s.res_req for s in self.specs}
        by_report = {r.service: r for r in reports}

        keep = {}
        for name, _ in over:
            r = by_report[name]
            passthrough = local_scaler.pass_through(r, ceilings[name]).res_desired
            keep[name] = max(r.desired_replicas, passthrough, self.by_name[name].min_replicas)
        floors = {name: keep[name] * self.by_name[name].res_req for name in keep}
        transfers = resources.plan_transfers(under, over, planned_caps, floors)
        new_caps = resources.apply_transfers(planned_caps, transfers)

        physical = {s.name: states[s.name].physical_mcpu(s) for s in self.specs}
        for tr in transfers:
            donor = self.by_name[tr.donor]
            spare = max(Fraction(0), physical[tr.donor] - keep[tr.donor] * donor.res_req)
            moved = min(tr.amount, spare)
            physical[tr.donor] -= moved
            physical[tr.receiver] += moved

        states = dict(states)
        for spec in self.specs:
            state = states[spec.name]
            slots = int(physical[spec.name] // spec.res_req)
            states[spec.name] = replace(
                state,
                slots=slots,
                spare_mcpu=physical[spec.name] - slots * spec.res_req,
                current_replicas=min(state.current_replicas, slots),
                capacity_mcpu=new_caps[spec.name],
            )

        underprov = {name for name, _ in under}
        finals = []
        new_ceilings = {}
        for r in reports:
            spec = self.by_name[r.service]
            rmax = int(new_caps[r.service] // spec.res_req)
            new_ceilings[r.service] = rmax
            if r.service in underprov:
                finals.append(resources.finalize(r, ceilings[r.service], new_caps[r.service], states[r.service], spec))
            else:
                finals.append(local_scaler.pass_through(r, rmax))
        return finals, new_ceilings, states

    def _check_bounds(self, states: dict[str, ServiceState], t) -> None:
        for spec in self.specs:
            s = states[spec.name]
            if not spec.min_replicas <= s.current_replicas <= s.slots:
                raise ReplicaBoundViolation(
                    f"t={float(t)}: {spec.name} has {s.current_replicas} replicas, "
                    f"bounds [{spec.min_replicas}, {s.slots}]"
                )

    # -- whole run ---------------------------------------------------------

    def run(self, out_dir: str | Path | None = None) -> RunResult:
        engine = self.initial_state()
        samples: list[MetricSample] = []
        writer = RunWriter(out_dir) if out_dir is not None else None
        try:
            for k in range(self.n_ticks):
                engine, output = self.step(engine, k)
                samples.append(output.sample)
                if writer is not None:
                    writer.emit(output.sample, output.kb)
            summary = self.summary(engine, samples)
            if writer is not None:
                writer.write_summary(summary)
        finally:
            if writer is not None:
                writer.close()
        return RunResult(summary=summary, samples=samples, out_dir=Path(out_dir) if out_dir is not None else None)

    def summary(self, engine: EngineState, samples: list[MetricSample]) -> dict[str, Any]:
        cfg = self.config
        summary: dict[str, Any] = {
            "mode": cfg.mode.value,
            "seed": cfg.seed,
            "ticks": len(samples),
            "tick_seconds": cfg.tick_seconds,
            "duration_seconds": cfg.duration_seconds,
            "initial_capacity_mcpu": self.irc,
            "target_wastage_percent": cfg.disruption.target_wastage_percent if cfg.disruption else 0,
            "disruption_time_seconds": cfg.disruption.time_seconds if cfg.disruption else None,
            "actual_wastage_mcpu": engine.injection.wastage_mcpu if engine.injection else 0,
            "severity_percent": engine.injection_assessment.severity if engine.injection_assessment else 0,
            "means": summarize(samples),
        }
        return summary


def _record(obj) -> dict[str, Any]:
    return {k: v for k, v in vars(obj).items()}


def run(config: ScenarioConfig, out_dir: str | Path | None = None) -> RunResult:
    return Simulation(config).run(out_dir)


def step(sim: Simulation, engine: EngineState, k: int) -> tuple[EngineState, TickOutput]:
    return sim.step(engine, k)
