"""Domain types and scenario configuration shared by the whole simulator.

All mCPU and percentage quantities are held as :class:`fractions.Fraction` so
capacity bookkeeping (transfers, losses, severities) stays exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from enum import Enum
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Any

WEIGHT_TOLERANCE = Fraction(1, 10**6)


class ConfigError(ValueError):
    """Raised when a scenario config violates an invariant.

    ``field`` names the offending field so callers can report it.
    """

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class Decision(str, Enum):
    SCALE_UP = "ScaleUp"
    SCALE_DOWN = "ScaleDown"
    NO_SCALE = "NoScale"


class DisruptionStatus(str, Enum):
    NO_DISRUPTION = "NoDisruption"
    DISRUPTION_IDENTIFIED = "DisruptionIdentified"


class Mode(str, Enum):
    SECURE = "secure"
    BASELINE = "baseline"


def exact(value: Any) -> Fraction:
    """Convert an int/float/str/Fraction to an exact Fraction.

    Floats go through ``repr`` so ``8.3`` becomes 83/10 rather than the
    binary approximation.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not quantities")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class ServiceSpec:
    name: str
    res_req: Fraction
    res_limit: Fraction
    min_replicas: int
    max_replicas: int
    threshold: Fraction
    demand_weight: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("res_req", "res_limit", "threshold", "demand_weight"):
            object.__setattr__(self, name, exact(getattr(self, name)))
        if not self.name:
            raise ConfigError("name", "service name must be non-empty")
        if self.res_req <= 0:
            raise ConfigError("res_req", f"must be > 0, got {self.res_req}")
        if self.res_limit < self.res_req:
            raise ConfigError("res_limit", f"must be >= res_req ({self.res_req}), got {self.res_limit}")
        if self.min_replicas < 1:
            raise ConfigError("min_replicas", f"must be >= 1, got {self.min_replicas}")
        if self.max_replicas < self.min_replicas:
            raise ConfigError(
                "max_replicas",
                f"must be >= min_replicas ({self.min_replicas}), got {self.max_replicas}",
            )
        if not 0 < self.threshold <= 100:
            raise ConfigError("threshold", f"must be in (0, 100], got {self.threshold}")
        if self.demand_weight < 0:
            raise ConfigError("demand_weight", f"must be >= 0, got {self.demand_weight}")

    @property
    def utilization_cap(self) -> Fraction:
        """Highest measurable utilization (percent) before throttling."""
        return 100 * self.res_limit / self.res_req


@dataclass(frozen=True)
class ServiceState:
    """Dynamic per-service state.

    ``slots`` are the replica positions the service can provision right now.
    ``spare_mcpu`` is owned capacity too small to form another slot (left over
    after transfers between services with different requests).
    ``capacity_mcpu`` is the autoscaler's planned budget for the service.
    """

    current_replicas: int
    slots: int
    utilization: Fraction = Fraction(0)
    capacity_mcpu: Fraction = Fraction(0)
    spare_mcpu: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("utilization", "capacity_mcpu", "spare_mcpu"):
            object.__setattr__(self, name, exact(getattr(self, name)))
        if not 0 <= self.current_replicas <= self.slots:
            raise ValueError(
                f"current_replicas must be in [0, slots={self.slots}], got {self.current_replicas}"
            )
        if self.capacity_mcpu < 0:
            raise ValueError(f"capacity_mcpu must be >= 0, got {self.capacity_mcpu}")
        if self.spare_mcpu < 0:
            raise ValueError(f"spare_mcpu must be >= 0, got {self.spare_mcpu}")

    def physical_mcpu(self, spec: ServiceSpec) -> Fraction:
        return self.slots * spec.res_req + self.spare_mcpu

    @classmethod
    def initial(cls, spec: ServiceSpec) -> "ServiceState":
        return cls(
            current_replicas=spec.min_replicas,
            slots=spec.max_replicas,
            capacity_mcpu=spec.max_replicas * spec.res_req,
        )


@dataclass(frozen=True)
class ScalingReport:
    service: str
    desired_replicas: int
    decision: Decision
    escalate: bool
    current_replicas: int = 0

    def __post_init__(self):
        if self.desired_replicas < 0:
            raise ValueError(f"desired_replicas must be >= 0, got {self.desired_replicas}")
        if self.decision is Decision.SCALE_UP and self.desired_replicas <= self.current_replicas:
            raise ValueError("ScaleUp requires desired_replicas > current_replicas")


@dataclass(frozen=True)
class DisruptionAssessment:
    irc: Fraction
    crc: Fraction
    res_loss: Fraction
    status: DisruptionStatus
    severity: Fraction

    def __post_init__(self):
        if self.res_loss != self.irc - self.crc:
            raise ValueError("res_loss must equal irc - crc")
        if (self.status is DisruptionStatus.DISRUPTION_IDENTIFIED) != (self.res_loss > 0):
            raise ValueError("status must be DisruptionIdentified exactly when res_loss > 0")
        if not 0 <= self.severity <= 100:
            raise ValueError(f"severity out of [0, 100]: {self.severity}")


@dataclass(frozen=True)
class FinalDecision:
    service: str
    res_decision: Decision
    res_desired: int
    res_max: int

    def __post_init__(self):
        if self.res_desired > self.res_max:
            raise ValueError(
                f"{self.service}: res_desired {self.res_desired} exceeds res_max {self.res_max}"
            )


@dataclass(frozen=True)
class DisruptionEvent:
    time_seconds: Fraction
    target_wastage_percent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "time_seconds", exact(self.time_seconds))
        object.__setattr__(self, "target_wastage_percent", exact(self.target_wastage_percent))


@dataclass(frozen=True)
class ScenarioConfig:
    services: tuple[ServiceSpec, ...]
    tick_seconds: Fraction = Fraction(15)
    duration_seconds: Fraction = Fraction(900)
    ramp_seconds: Fraction = Fraction(300)
    peak_users: int = 600
    per_user_mcpu: Fraction = Fraction("2.7")
    disruption: DisruptionEvent | None = None
    mode: Mode = Mode.SECURE
    seed: int = 0
    demand_noise_percent: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("tick_seconds", "duration_seconds", "ramp_seconds", "per_user_mcpu", "demand_noise_percent"):
            object.__setattr__(self, name, exact(getattr(self, name)))

    def service(self, name: str) -> ServiceSpec:
        for spec in self.services:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def with_disruption(self, target_percent: Any | None, time_seconds: Any = 330) -> "ScenarioConfig":
        if target_percent is None:
            return replace(self, disruption=None)
        return replace(self, disruption=DisruptionEvent(time_seconds, target_percent))


def validate_config(config: ScenarioConfig) -> ScenarioConfig:
    """Check every scenario invariant, returning the (possibly renormalized) config.

    Demand weights summing to within 1e-6 of one are rescaled to sum to
    exactly one; anything further off is rejected.
    """
    if not config.services:
        raise ConfigError("services", "at least one service is required")
    names = [s.name for s in config.services]
    if len(set(names)) != len(names):
        raise ConfigError("name", "service names must be unique")
    if config.tick_seconds <= 0:
        raise ConfigError("tick_seconds", f"must be > 0, got {config.tick_seconds}")
    if config.duration_seconds < 0:
        raise ConfigError("duration_seconds", f"must be >= 0, got {config.duration_seconds}")
    if config.ramp_seconds < 0:
        raise ConfigError("ramp_seconds", f"must be >= 0, got {config.ramp_seconds}")
    if config.ramp_seconds > config.duration_seconds:
        raise ConfigError("ramp_seconds", "must not exceed duration_seconds")
    if config.peak_users < 0:
        raise ConfigError("peak_users", f"must be >= 0, got {config.peak_users}")
    if config.per_user_mcpu < 0:
        raise ConfigError("per_user_mcpu", f"must be >= 0, got {config.per_user_mcpu}")
    if not 0 <= config.demand_noise_percent < 100:
        raise ConfigError("demand_noise_percent", "must be in [0, 100)")
    if not 0 <= config.seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    if config.disruption is not None:
        d = config.disruption
        if not 0 <= d.target_wastage_percent < 100:
            raise ConfigError(
                "target_wastage_percent", f"must be in [0, 100), got {d.target_wastage_percent}"
            )
        if not 0 <= d.time_seconds < config.duration_seconds:
            raise ConfigError("time_seconds", "must be in [0, duration_seconds)")

    total = sum((s.demand_weight for s in config.services), Fraction(0))
    if total == 1:
        return config
    if total == 0 or abs(total - 1) > WEIGHT_TOLERANCE:
        raise ConfigError("demand_weight", f"weights must sum to 1, got {float(total)}")
    services = tuple(replace(s, demand_weight=s.demand_weight / total) for s in config.services)
    return replace(config, services=services)


# Peak demand (600 users x 2.7 mCPU) keeps every service within 5 replicas at
# a 50% threshold; frontend and productcatalogservice sit right at the ceiling.
BENCHMARK_SERVICES: tuple[tuple[str, int, int, str], ...] = (
    ("adservice", 200, 300, "0.06"),
    ("cartservice", 200, 300, "0.24"),
    ("checkoutservice", 100, 200, "0.09"),
    ("currencyservice", 100, 200, "0.09"),
    ("emailservice", 100, 200, "0.015"),
    ("frontend", 100, 200, "0.15"),
    ("paymentservice", 100, 200, "0.015"),
    ("productcatalogservice", 100, 200, "0.15"),
    ("recommendationservice", 100, 200, "0.12"),
    ("redis", 70, 125, "0.04"),
    ("shippingservice", 100, 200, "0.03"),
)


def benchmark_cluster(max_replicas: int = 5, threshold: int = 50) -> list[ServiceSpec]:
    """The 11-service e-commerce benchmark in its 5R-50% configuration."""
    return [
        ServiceSpec(
            name=name,
            res_req=Fraction(req),
            res_limit=Fraction(limit),
            min_replicas=1,
            max_replicas=max_replicas,
            threshold=Fraction(threshold),
            demand_weight=Fraction(weight),
        )
        for name, req, limit, weight in BENCHMARK_SERVICES
    ]


def benchmark_config(**overrides: Any) -> ScenarioConfig:
    config = ScenarioConfig(services=tuple(benchmark_cluster()))
    return validate_config(replace(config, **overrides)) if overrides else validate_config(config)


# --- JSON (de)serialization -------------------------------------------------

_SERVICE_FIELDS = {"name", "res_req", "res_limit", "min_replicas", "max_replicas", "threshold", "demand_weight"}
_DISRUPTION_FIELDS = {"time_seconds", "target_wastage_percent"}
_CONFIG_FIELDS = {
    "services",
    "tick_seconds",
    "duration_seconds",
    "ramp_seconds",
    "peak_users",
    "per_user_mcpu",
    "disruption",
    "mode",
    "seed",
    "demand_noise_percent",
}
_REQUIRED_SERVICE_FIELDS = _SERVICE_FIELDS - {"demand_weight"}


def _reject_unknown(data: dict, allowed: set[str], where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(where, "expected a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(unknown[0], f"unknown field in {where}")


def _number(data: dict, key: str) -> Fraction:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    try:
        return exact(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(key, f"not a number: {value!r}") from exc


def _integer(data: dict, key: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def config_from_dict(data: dict) -> ScenarioConfig:
    _reject_unknown(data, _CONFIG_FIELDS, "config")
    if "services" not in data or not isinstance(data["services"], list):
        raise ConfigError("services", "a list of services is required")
    services = []
    for raw in data["services"]:
        _reject_unknown(raw, _SERVICE_FIELDS, "service")
        missing = sorted(_REQUIRED_SERVICE_FIELDS - set(raw))
        if missing:
            raise ConfigError(missing[0], "missing service field")
        services.append(
            ServiceSpec(
                name=str(raw["name"]),
                res_req=_number(raw, "res_req"),
                res_limit=_number(raw, "res_limit"),
                min_replicas=_integer(raw, "min_replicas"),
                max_replicas=_integer(raw, "max_replicas"),
                threshold=_number(raw, "threshold"),
                demand_weight=_number(raw, "demand_weight") if "demand_weight" in raw else Fraction(0),
            )
        )
    kwargs: dict[str, Any] = {"services": tuple(services)}
    for key in ("tick_seconds", "duration_seconds", "ramp_seconds", "per_user_mcpu", "demand_noise_percent"):
        if key in data:
            kwargs[key] = _number(data, key)
    for key in ("peak_users", "seed"):
        if key in data:
            kwargs[key] = _integer(data, key)
    if "mode" in data:
        try:
            kwargs["mode"] = Mode(str(data["mode"]).lower())
        except ValueError as exc:
            raise ConfigError("mode", f"expected secure or baseline, got {data['mode']!r}") from exc
    if data.get("disruption") is not None:
        raw = data["disruption"]
        _reject_unknown(raw, _DISRUPTION_FIELDS, "disruption")
        if "target_wastage_percent" not in raw:
            raise ConfigError("target_wastage_percent", "missing disruption field")
        kwargs["disruption"] = DisruptionEvent(
            time_seconds=_number(raw, "time_seconds") if "time_seconds" in raw else Fraction(330),
            target_wastage_percent=_number(raw, "target_wastage_percent"),
        )
    return validate_config(ScenarioConfig(**kwargs))


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else float(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def config_to_dict(config: ScenarioConfig) -> dict:
    return _jsonable(asdict(config))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("path", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("json", f"{path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")

