"""Capacity-destroying disruptions: random deletion of replica slots."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .capacity import compute_initial_capacity
from .model import ScenarioConfig, ServiceSpec, ServiceState, exact


class TargetUnreachable(ValueError):
    """The requested wastage cannot be reached while keeping every service alive."""


@dataclass(frozen=True)
class InjectionResult:
    states: dict[str, ServiceState]
    wastage_mcpu: Fraction
    removed: dict[str, int]
    target_mcpu: Fraction


def _floor(spec: ServiceSpec) -> int:
    return max(1, spec.min_replicas)


def inject(
    states: Mapping[str, ServiceState],
    specs: Sequence[ServiceSpec],
    target_wastage_percent,
    rng: np.random.Generator,
) -> InjectionResult:
    """Delete random slots until the destroyed mCPU is as close to the target as quanta allow.

    Each deletion picks one slot uniformly among all deletable slots, so
    services holding more slots lose more in expectation. A slot is only
    deletable if removing it keeps the total within half its own request of
    the target; injection stops when no such slot remains.
    """
    percent = exact(target_wastage_percent)
    if not 0 <= percent < 100:
        raise ValueError(f"target wastage must be in [0, 100), got {percent}")
    specs = sorted(specs, key=lambda s: s.name)
    target = percent * compute_initial_capacity(specs) / 100
    removable = sum(((states[s.name].slots - _floor(s)) * s.res_req for s in specs if states[s.name].slots > _floor(s)), Fraction(0))
    if target > removable:
        raise TargetUnreachable(
            f"target {float(target):.1f} mCPU exceeds the {float(removable):.1f} mCPU "
            "that can be removed without killing a service"
        )

    slots = {s.name: states[s.name].slots for s in specs}
    removed = {s.name: 0 for s in specs}
    wasted = Fraction(0)
    while True:
        eligible = [
            s for s in specs if slots[s.name] > _floor(s) and wasted + s.res_req / 2 <= target
        ]
        if not eligible:
            break
        weights = [slots[s.name] for s in eligible]
        pick = int(rng.integers(sum(weights)))
        for spec, weight in zip(eligible, weights):
            if pick < weight:
                break
            pick -= weight
        slots[spec.name] -= 1
        removed[spec.name] += 1
        wasted += spec.res_req

    updated = {}
    for name, state in states.items():
        if name in slots:
            n = slots[name]
            state = replace(state, slots=n, current_replicas=min(state.current_replicas, n))
        updated[name] = state
    return InjectionResult(states=updated, wastage_mcpu=wasted, removed=removed, target_mcpu=target)


def schedule(config: ScenarioConfig) -> int | None:
    """Index of the tick at whose start the disruption fires, or None."""
    if config.disruption is None:
        return None
    return math.ceil(config.disruption.time_seconds / config.tick_seconds)
