"""Application-level capacity monitoring: detect and quantify capacity loss."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Mapping, Sequence

from .model import DisruptionAssessment, DisruptionStatus, ServiceSpec, ServiceState, exact


class CapacityInversion(ValueError):
    """Current capacity exceeded the initial capacity, which the model forbids."""


def compute_initial_capacity(specs: Sequence[ServiceSpec]) -> Fraction:
    if not specs:
        raise ValueError("at least one service is required")
    return sum((s.res_req * s.max_replicas for s in specs), Fraction(0))


def compute_current_capacity(states: Mapping[str, ServiceState], specs: Sequence[ServiceSpec]) -> Fraction:
    return sum((s.res_req * states[s.name].slots for s in specs), Fraction(0))


def assess(irc, crc) -> DisruptionAssessment:
    irc, crc = exact(irc), exact(crc)
    if irc <= 0:
        raise ValueError(f"initial capacity must be positive, got {irc}")
    if crc < 0:
        raise ValueError(f"current capacity must be non-negative, got {crc}")
    if crc > irc:
        raise CapacityInversion(f"current capacity {crc} exceeds initial capacity {irc}")
    loss = irc - crc
    if loss > 0:
        status = DisruptionStatus.DISRUPTION_IDENTIFIED
        severity = 100 * loss / irc
    else:
        status = DisruptionStatus.NO_DISRUPTION
        severity = Fraction(0)
    return DisruptionAssessment(irc=irc, crc=crc, res_loss=loss, status=status, severity=severity)


def update_capacities(
    states: Mapping[str, ServiceState], specs: Sequence[ServiceSpec]
) -> tuple[dict[str, int], dict[str, ServiceState]]:
    """Rewrite every service's ceiling to the slots it really has.

    Returns ``(effective_max, states)`` keyed by service name.
    """
    ceilings: dict[str, int] = {}
    updated: dict[str, ServiceState] = {}
    for spec in specs:
        state = states[spec.name]
        ceilings[spec.name] = state.slots
        updated[spec.name] = replace(state, capacity_mcpu=state.slots * spec.res_req)
    return ceilings, updated
