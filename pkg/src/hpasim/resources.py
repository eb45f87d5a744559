"""Centralized resource manager: greedy redistribution of surplus CPU.

Transfers are in raw mCPU. Replica ceilings are only derived (by floor
division) when decisions are finalized, so the total budget is conserved
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import Decision, FinalDecision, ScalingReport, ServiceSpec, ServiceState, exact


@dataclass(frozen=True)
class Transfer:
    donor: str
    receiver: str
    amount: Fraction


def _ordered(entries: list[tuple[str, Fraction]]) -> list[tuple[str, Fraction]]:
    return sorted(entries, key=lambda e: (-e[1], e[0]))


def classify(
    reports: Sequence[ScalingReport],
    ceilings: Mapping[str, int],
    specs: Sequence[ServiceSpec],
) -> tuple[list[tuple[str, Fraction]], list[tuple[str, Fraction]]]:
    """Split services into (underprovisioned, overprovisioned) mCPU lists.

    Both lists are sorted by amount descending, then name ascending.
    """
    by_name = {s.name: s for s in specs}
    under: list[tuple[str, Fraction]] = []
    over: list[tuple[str, Fraction]] = []
    seen = set()
    for report in reports:
        if report.service in seen:
            raise ValueError(f"duplicate report for {report.service}")
        seen.add(report.service)
        req = by_name[report.service].res_req
        ceiling = ceilings[report.service]
        if report.desired_replicas > ceiling:
            under.append((report.service, (report.desired_replicas - ceiling) * req))
        else:
            over.append((report.service, (ceiling - report.desired_replicas) * req))
    if seen != set(by_name):
        raise ValueError("reports must cover every service exactly once")
    return _ordered(under), _ordered(over)


def plan_transfers(
    underprov: Sequence[tuple[str, Fraction]],
    overprov: Sequence[tuple[str, Fraction]],
    capacities: Mapping[str, Fraction] | None = None,
    floors: Mapping[str, Fraction] | None = None,
) -> list[Transfer]:
    """Greedy most-needy-first matching against the largest donors.

    When ``capacities`` and ``floors`` are given, a donor never gives away
    capacity that would leave it below its floor (its own demand).
    """
    remaining = {}
    for name, surplus in overprov:
        available = exact(surplus)
        if capacities is not None and floors is not None:
            available = min(available, max(Fraction(0), capacities[name] - floors.get(name, 0)))
        remaining[name] = available
    donors = [name for name, _ in overprov]

    transfers: list[Transfer] = []
    for receiver, need in underprov:
        need = exact(need)
        for donor in donors:
            if need <= 0:
                break
            m = min(need, remaining[donor])
            if m <= 0:
                continue
            remaining[donor] -= m
            need -= m
            transfers.append(Transfer(donor, receiver, m))
    return transfers


def apply_transfers(capacities: Mapping[str, Fraction], transfers: Sequence[Transfer]) -> dict[str, Fraction]:
    updated = {name: exact(value) for name, value in capacities.items()}
    for t in transfers:
        updated[t.donor] -= t.amount
        updated[t.receiver] += t.amount
    return updated


def redistribute(
    underprov: Sequence[tuple[str, Fraction]],
    overprov: Sequence[tuple[str, Fraction]],
    capacities: Mapping[str, Fraction],
    specs: Sequence[ServiceSpec] = (),
    desired: Mapping[str, int] | None = None,
) -> dict[str, Fraction]:
    """Move surplus mCPU from overprovisioned to underprovisioned services.

    ``desired`` (DR per service) bounds each donor at ``DR * res_req``; when
    omitted, the surplus amounts in ``overprov`` are the only bound.
    """
    floors = None
    if desired is not None:
        by_name = {s.name: s for s in specs}
        floors = {name: desired[name] * by_name[name].res_req for name, _ in overprov}
    transfers = plan_transfers(underprov, overprov, capacities, floors)
    return apply_transfers(capacities, transfers)


def finalize(
    report: ScalingReport,
    old_max: int,
    new_capacity,
    state: ServiceState,
    spec: ServiceSpec,
) -> FinalDecision:
    """Resource-wise decision for an underprovisioned service."""
    new_capacity = exact(new_capacity)
    if new_capacity < 0:
        raise ValueError(f"capacity must be non-negative, got {new_capacity}")
    rmax = int(new_capacity // spec.res_req)
    dr = report.desired_replicas
    if rmax >= dr:
        decision, desired = report.decision, dr
    elif old_max <= rmax < dr:
        decision, desired = Decision.SCALE_UP, rmax
    else:
        decision, desired = Decision.NO_SCALE, state.current_replicas
    return FinalDecision(service=spec.name, res_decision=decision, res_desired=desired, res_max=max(rmax, desired))
