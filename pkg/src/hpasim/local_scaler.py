"""Per-service threshold scaling: the decentralized microservice manager.

Each function here is pure, so the engine may evaluate services in any order.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .model import Decision, FinalDecision, ScalingReport, ServiceSpec, ServiceState, exact


def compute_desired_replicas(cr: int, rm, rmt) -> int:
    rm, rmt = exact(rm), exact(rmt)
    return math.ceil(cr * rm / rmt)


def decide_scaling(dr: int, cr: int, min_r: int) -> Decision:
    if dr > cr:
        return Decision.SCALE_UP
    if dr < cr and dr >= min_r:
        return Decision.SCALE_DOWN
    return Decision.NO_SCALE


def check_feasibility(dr: int, effective_max: int) -> bool:
    """True when the desired count exceeds the ceiling and must be escalated."""
    return dr > effective_max


def analyze(spec: ServiceSpec, state: ServiceState, effective_max: int) -> ScalingReport:
    """Run the full per-service manager on a measured state."""
    dr = compute_desired_replicas(state.current_replicas, state.utilization, spec.threshold)
    return ScalingReport(
        service=spec.name,
        desired_replicas=dr,
        decision=decide_scaling(dr, state.current_replicas, spec.min_replicas),
        escalate=check_feasibility(dr, effective_max),
        current_replicas=state.current_replicas,
    )


def pass_through(report: ScalingReport, effective_max: int) -> FinalDecision:
    """Final decision when no centralized redistribution took place."""
    if report.decision is Decision.NO_SCALE:
        desired = report.current_replicas
    else:
        desired = min(report.desired_replicas, effective_max)
    return FinalDecision(
        service=report.service,
        res_decision=report.decision,
        res_desired=desired,
        res_max=max(effective_max, desired),
    )


def execute_scale(state: ServiceState, final: FinalDecision, spec: ServiceSpec) -> ServiceState:
    replicas = max(spec.min_replicas, min(final.res_desired, state.slots))
    return replace(state, current_replicas=replicas)

