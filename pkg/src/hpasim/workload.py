"""Ramp-and-sustain load profile and per-service demand/utilization."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .model import ScenarioConfig, ServiceSpec, ServiceState, exact


class ZeroReplicas(ValueError):
    """Utilization was requested for a service with no running replicas."""


def users_at(t, config: ScenarioConfig) -> int:
    """Active users at time ``t``: a linear ramp to ``peak_users``, then flat."""
    t = exact(t)
    if t < config.ramp_seconds:
        return math.floor(config.peak_users * t / config.ramp_seconds)
    return config.peak_users


def service_demand(users: int, spec: ServiceSpec, config: ScenarioConfig) -> Fraction:
    return users * config.per_user_mcpu * spec.demand_weight


def noise_factor(rng: np.random.Generator | None, percent: Fraction) -> Fraction:
    """Multiplicative demand noise, uniform in [1 - p%, 1 + p%].

    Draws are quantized to 1e-6 so the result stays an exact rational.
    """
    if rng is None or percent == 0:
        return Fraction(1)
    micro = int(rng.integers(-10**6, 10**6, endpoint=True))
    return 1 + percent / 100 * Fraction(micro, 10**6)


def utilization(demand, state: ServiceState, spec: ServiceSpec) -> Fraction:
    """Percent utilization of the service's requested CPU, capped at its limit.

    Demand beyond ``res_limit`` per replica is throttled and never observed.
    """
    if state.current_replicas == 0:
        raise ZeroReplicas("cannot measure utilization with zero replicas")
    raw = 100 * exact(demand) / (state.current_replicas * spec.res_req)
    return min(raw, spec.utilization_cap)
