"""Command-line front end.

Exit codes: 0 success (and every checked property holds), 1 a verified
property failed, 2 scenario file parse error, 3 invalid scenario or
configuration. ``DIAGFD_MAX_ROUNDS`` overrides the scenario round limit.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .analysis import assignment_diameter, run_all_checks, verdicts_csv, verdicts_text
from .core import DiagnosisError
from .detectors import DetectorKind, converged_views, recompute_assignment, validate_system
from .engine import (
    OrderingPolicy,
    Scenario,
    ScenarioError,
    report_to_csv,
    run_scenario,
    trace_to_text,
)
from .scenario_io import ScenarioParseError, parse_scenario_file


def _load_scenario(path: str) -> Scenario:
    scenario = parse_scenario_file(path)
    override = os.environ.get("DIAGFD_MAX_ROUNDS")
    if override is not None:
        try:
            limit = int(override)
        except ValueError:
            raise ScenarioError(
                f"DIAGFD_MAX_ROUNDS must be an integer, got {override!r}"
            ) from None
        scenario = replace(scenario, max_rounds=limit)
    scenario.validate()
    return scenario


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    trace_level = "tests" if args.trace else "counts"
    report = run_scenario(scenario, trace_level=trace_level)
    _write_or_print(report_to_csv(report), args.output)
    if args.trace:
        Path(args.trace).write_text(trace_to_text(report), encoding="utf-8")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    report = run_scenario(scenario, trace_level="counts")
    verdicts = run_all_checks(report)
    sys.stdout.write(verdicts_text(verdicts))
    if args.csv:
        Path(args.csv).write_text(verdicts_csv(verdicts), encoding="utf-8")
    return 0 if all(v.holds for v in verdicts) else 1


def cmd_topology(args: argparse.Namespace) -> int:
    kind = DetectorKind.parse(args.detector)
    validate_system(kind, args.n)
    crashed = _parse_int_list(args.crashed) if args.crashed else []
    for pid in crashed:
        if not 0 <= pid < args.n:
            raise ScenarioError(f"crashed pid {pid} outside [0, {args.n})")
    if len(set(crashed)) != len(crashed):
        raise ScenarioError("crashed list repeats a process")
    correct = [p for p in range(args.n) if p not in set(crashed)]
    assignment = recompute_assignment(
        kind, args.n, converged_views(args.n, crashed), correct=correct
    )
    text = assignment.to_adjacency_text()
    if text:
        sys.stdout.write(text + "\n")
    diameter = assignment_diameter(assignment, correct=correct)
    diameter_text = "unreachable" if diameter == float("inf") else str(int(diameter))
    sys.stdout.write(f"arcs: {len(assignment.arcs)}\n")
    sys.stdout.write(f"diameter: {diameter_text}\n")
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(chunk.strip()) for chunk in text.split(",") if chunk.strip()]


def _parse_seeds(text: str) -> list[int]:
    if "-" in text and "," not in text:
        lo, _, hi = text.partition("-")
        return list(range(int(lo), int(hi) + 1))
    return _parse_int_list(text)


def _sweep_scenario(kind: DetectorKind, n: int, seed: int, ordering: OrderingPolicy) -> Scenario:
    rng = random.Random(seed)
    return Scenario(
        n=n,
        detector=kind,
        crashes=((rng.randint(1, 3), rng.randrange(n)),),
        ordering=ordering,
        seed=seed,
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    kind = DetectorKind.parse(args.detector)
    sizes = _parse_int_list(args.n_list)
    for n in sizes:
        validate_system(kind, n)
    seeds = _parse_seeds(args.seeds)
    ordering = OrderingPolicy.parse(args.ordering)
    jobs = [(n, seed) for n in sizes for seed in seeds]

    def one(job: tuple[int, int]) -> str:
        n, seed = job
        scenario = _sweep_scenario(kind, n, seed, ordering)
        report = run_scenario(scenario, trace_level="counts")
        event = report.events[0]
        latency = "-" if event.latency is None else str(event.latency)
        quiescent = "-" if report.quiescent_round is None else str(report.quiescent_round)
        return (
            f"{kind.value},{n},{seed},{event.pid},{event.crash_round},{latency},"
            f"{len(report.rounds)},{sum(report.tests_per_round())},"
            f"{sum(report.items_per_round())},{quiescent}"
        )

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(job) for job in jobs]

    header = (
        "detector,n,seed,crash_pid,crash_round,latency,rounds,"
        "total_tests,total_items,quiescent_round"
    )
    _write_or_print("\n".join([header, *rows]) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diagfd",
        description="Round-based simulator for test-based failure detectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file and emit per-round CSV")
    p_run.add_argument("scenario")
    p_run.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p_run.add_argument("--trace", default=None, help="also dump a per-test trace file")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run a scenario and check properties")
    p_verify.add_argument("scenario")
    p_verify.add_argument("--csv", default=None, help="write verdicts as CSV")
    p_verify.set_defaults(func=cmd_verify)

    p_topo = sub.add_parser("topology", help="print a detector's testing assignment")
    p_topo.add_argument("--detector", required=True)
    p_topo.add_argument("--n", type=int, required=True)
    p_topo.add_argument("--crashed", default="", help="comma-separated crashed pids")
    p_topo.set_defaults(func=cmd_topology)

    p_sweep = sub.add_parser("sweep", help="run seeded single-crash scenarios in bulk")
    p_sweep.add_argument("--detector", required=True)
    p_sweep.add_argument("--n-list", required=True, help="comma-separated system sizes")
    p_sweep.add_argument("--seeds", required=True, help="range a-b or comma list")
    p_sweep.add_argument("--ordering", default=OrderingPolicy.SEEDED_RANDOM.value)
    p_sweep.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker threads")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"parse error at line {exc.lineno}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DiagnosisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
