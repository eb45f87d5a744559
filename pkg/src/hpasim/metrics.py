"""Per-tick resource metrics and the run's output files.

Output layout in a run directory::

    timeseries.csv        one row per tick
    kb_microservice.jsonl per-service scaling reports
    kb_capacity.jsonl     capacity assessments and injection events
    kb_resource.jsonl     final resource-wise decisions
    summary.json          run metadata and post-warmup means
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .model import ScalingReport, ServiceSpec, ServiceState

CSV_HEADER = ("t", "supply_cpu", "overutil_pct", "overutil_mcpu", "underprov_mcpu", "overprov_mcpu")
METRIC_FIELDS = CSV_HEADER[1:]
KB_STREAMS = ("microservice", "capacity", "resource")
WARMUP_SECONDS = 60
METRIC_FIELDS_ATTRS = (
    "supply_cpu",
    "overutilization_pct",
    "overutilization_mcpu",
    "underprovision_mcpu",
    "overprovision_mcpu",
)


@dataclass(frozen=True)
class ServiceDetail:
    name: str
    current_replicas: int
    desired_replicas: int
    utilization: Fraction
    effective_max: int
    slots: int


@dataclass(frozen=True)
class MetricSample:
    t: Fraction
    supply_cpu: Fraction
    overutilization_pct: Fraction
    overutilization_mcpu: Fraction
    underprovision_mcpu: Fraction
    overprovision_mcpu: Fraction
    per_service: tuple[ServiceDetail, ...] = field(default=())

    def __post_init__(self):
        for name in METRIC_FIELDS_ATTRS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def row(self) -> dict[str, Fraction]:
        return {
            "t": self.t,
            "supply_cpu": self.supply_cpu,
            "overutil_pct": self.overutilization_pct,
            "overutil_mcpu": self.overutilization_mcpu,
            "underprov_mcpu": self.underprovision_mcpu,
            "overprov_mcpu": self.overprovision_mcpu,
        }


def supply_cpu(states: Mapping[str, ServiceState], specs: Sequence[ServiceSpec]) -> Fraction:
    return sum((states[s.name].current_replicas * s.res_req for s in specs), Fraction(0))


def cpu_overutilization(
    states: Mapping[str, ServiceState], specs: Sequence[ServiceSpec]
) -> tuple[Fraction, Fraction]:
    """Mean percentage points above threshold, and the absolute mCPU above it."""
    if not specs:
        return Fraction(0), Fraction(0)
    pct = Fraction(0)
    mcpu = Fraction(0)
    for spec in specs:
        state = states[spec.name]
        allocated = state.current_replicas * spec.res_req
        pct += max(Fraction(0), state.utilization - spec.threshold)
        mcpu += max(Fraction(0), (state.utilization - spec.threshold) / 100 * allocated)
    return pct / len(specs), mcpu


def cpu_underprovision(
    reports: Iterable[ScalingReport], ceilings: Mapping[str, int], specs: Sequence[ServiceSpec]
) -> Fraction:
    by_name = {s.name: s for s in specs}
    return sum(
        (max(0, r.desired_replicas - ceilings[r.service]) * by_name[r.service].res_req for r in reports),
        Fraction(0),
    )


def cpu_overprovision(
    reports: Iterable[ScalingReport], ceilings: Mapping[str, int], specs: Sequence[ServiceSpec]
) -> Fraction:
    by_name = {s.name: s for s in specs}
    return sum(
        (max(0, ceilings[r.service] - r.desired_replicas) * by_name[r.service].res_req for r in reports),
        Fraction(0),
    )


def fmt(value: Fraction | float) -> str:
    return f"{float(value):.1f}"


def to_json(value: Any) -> Any:
    """JSON-friendly view of Fractions, enums, and nested containers."""
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else round(float(value), 6)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json(v) for v in value]
    return value


def summarize(samples: Sequence[MetricSample], warmup_seconds=WARMUP_SECONDS) -> dict[str, float]:
    """Time-mean of each metric over samples with ``t >= warmup_seconds``.

    Returns an empty dict when no sample falls in the window.
    """
    window = [s for s in samples if s.t >= warmup_seconds]
    if not window:
        return {}
    means = {}
    for key in METRIC_FIELDS:
        total = sum((s.row()[key] for s in window), Fraction(0))
        means[key] = round(float(total / len(window)), 6)
    return means


class RunWriter:
    """Single-writer sink for one run's timeseries and knowledge-base streams."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self._files: dict[str, Any] = {}
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self._csv_file = self._open("timeseries.csv")
            self._csv = csv.writer(self._csv_file, lineterminator="\n")
            self._csv.writerow(CSV_HEADER)
            for stream in KB_STREAMS:
                self._open(f"kb_{stream}.jsonl")
        except OSError as exc:
            self.close()
            raise IoError(self.out_dir, exc) from exc

    def _open(self, name: str):
        handle = open(self.out_dir / name, "w", newline="")
        self._files[name] = handle
        return handle

    def emit(self, sample: MetricSample, kb_records: Mapping[str, Iterable[Mapping[str, Any]]] = ()) -> None:
        """Append one CSV row plus any knowledge-base records for this tick."""
        try:
            self._csv.writerow([fmt(v) for v in sample.row().values()])
            for stream, records in dict(kb_records).items():
                self.kb(stream, records, sample.t)
        except OSError as exc:
            raise IoError(self.out_dir, exc) from exc

    def kb(self, stream: str, records: Iterable[Mapping[str, Any]], t) -> None:
        handle = self._files[f"kb_{stream}.jsonl"]
        for record in records:
            line = {"t": to_json(t), **to_json(dict(record))}
            handle.write(json.dumps(line, sort_keys=True) + "\n")

    def write_summary(self, summary: Mapping[str, Any]) -> Path:
        path = self.out_dir / "summary.json"
        try:
            path.write_text(json.dumps(to_json(summary), indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise IoError(path, exc) from exc
        return path

    def close(self) -> None:
        for handle in self._files.values():
            handle.close()
        self._files.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class IoError(OSError):
    def __init__(self, path, cause: BaseException):
        self.path = Path(path)
        super().__init__(f"{self.path}: {cause}")
