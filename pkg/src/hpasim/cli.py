"""Command-line front end.

    hpasim run --config bench.json --severity medium --mode secure --out runs/a
    hpasim compare --config bench.json --severities low,medium,high --repeats 10 --out runs/cmp
    hpasim scenario init --out bench.json
"""

from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .disruption import TargetUnreachable
from .engine import run as run_scenario
from .metrics import METRIC_FIELDS, IoError, fmt
from .model import ConfigError, Mode, ScenarioConfig, benchmark_config, dump_config, load_config

log = logging.getLogger("hpasim")

SEVERITY_KEYWORDS = {"low": Fraction(25), "medium": Fraction(50), "high": Fraction(75)}
DEFAULT_DISRUPTION_TIME = Fraction(330)
COMPARISON_HEADER = ("mode", "severity", "seed_count") + METRIC_FIELDS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_severity(text: str) -> Fraction | None:
    """``none`` -> None, keywords -> 25/50/75, or an explicit percentage in [0, 100)."""
    key = text.strip().lower()
    if key == "none":
        return None
    if key in SEVERITY_KEYWORDS:
        return SEVERITY_KEYWORDS[key]
    try:
        value = Fraction(key)
    except (ValueError, ZeroDivisionError):
        value = None
    if value is None or not 0 <= value < 100:
        raise ConfigError(
            "severity",
            f"invalid severity {text!r}: use none, low, medium, high or a percentage in [0, 100)",
        )
    return value


def apply_severity(config: ScenarioConfig, severity: Fraction | None) -> ScenarioConfig:
    if severity is None:
        return replace(config, disruption=None)
    when = config.disruption.time_seconds if config.disruption else DEFAULT_DISRUPTION_TIME
    return config.with_disruption(severity, when)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hpasim", description="Disruption-aware autoscaling simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--mode", choices=[m.value for m in Mode])
    p_run.add_argument("--severity")
    p_run.add_argument("--out", type=Path, default=Path("run_out"))

    p_cmp = sub.add_parser("compare", help="sweep both modes over severities and seeds")
    p_cmp.add_argument("--config", required=True, type=Path)
    p_cmp.add_argument("--severities", default="low,medium,high")
    p_cmp.add_argument("--repeats", type=int, default=10)
    p_cmp.add_argument("--seed", type=int, help="base seed (default: the config's seed)")
    p_cmp.add_argument("--out", type=Path, default=Path("compare_out"))

    p_scn = sub.add_parser("scenario", help="scenario config helpers")
    scn_sub = p_scn.add_subparsers(dest="scenario_command", required=True, parser_class=_Parser)
    p_init = scn_sub.add_parser("init", help="write the bundled 5R-50%% benchmark config")
    p_init.add_argument("--out", required=True, type=Path)
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.mode is not None:
        config = replace(config, mode=Mode(args.mode))
    if args.severity is not None:
        config = apply_severity(config, parse_severity(args.severity))
    result = run_scenario(config, args.out)
    log.info("wrote %s", args.out)
    means = result.summary["means"]
    for key in METRIC_FIELDS:
        if key in means:
            print(f"{key:>15}: {means[key]:.2f}")
    return 0


def improvement(secure: float, baseline: float, higher_is_better: bool = False) -> str:
    if baseline == 0:
        return ""
    delta = secure - baseline if higher_is_better else baseline - secure
    return f"{100 * delta / baseline:.2f}"


def cmd_compare(args) -> int:
    config = load_config(args.config)
    if args.repeats < 1:
        raise ConfigError("repeats", "must be >= 1")
    tokens = [t for t in args.severities.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("severities", "at least one severity is required")
    severities = [(t.strip().lower(), parse_severity(t)) for t in tokens]
    base_seed = config.seed if args.seed is None else args.seed
    args.out.mkdir(parents=True, exist_ok=True)

    means: dict[tuple[str, str], dict[str, float]] = {}
    for label, severity in severities:
        for mode in (Mode.SECURE, Mode.BASELINE):
            runs = []
            for k in range(args.repeats):
                cfg = apply_severity(replace(config, mode=mode, seed=base_seed + k), severity)
                out = args.out / mode.value / label / f"seed_{base_seed + k}"
                runs.append(run_scenario(cfg, out).summary["means"])
            means[mode.value, label] = {
                key: statistics.fmean(r.get(key, 0.0) for r in runs) for key in METRIC_FIELDS
            }
            log.info("%s %s done", mode.value, label)

    with open(args.out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        for label, _ in severities:
            for mode in (Mode.SECURE, Mode.BASELINE):
                m = means[mode.value, label]
                writer.writerow([mode.value, label, args.repeats] + [fmt(m[key]) for key in METRIC_FIELDS])

    with open(args.out / "improvement.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("severity",) + METRIC_FIELDS)
        for label, _ in severities:
            s, b = means["secure", label], means["baseline", label]
            writer.writerow(
                [label] + [improvement(s[key], b[key], higher_is_better=key == "supply_cpu") for key in METRIC_FIELDS]
            )
    print((args.out / "comparison.csv").read_text(), end="")
    return 0


def cmd_scenario(args) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    dump_config(benchmark_config(), args.out)
    print(args.out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "compare": cmd_compare, "scenario": cmd_scenario}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TargetUnreachable, IoError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
