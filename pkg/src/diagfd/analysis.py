"""Verification layer: graph metrics on testing assignments and property
checkers (completeness, accuracy, latency and volume bounds) over
simulation reports, plus an exhaustive intra-round-ordering oracle for
latency envelopes at small system sizes.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .core import DiagnosisError
from .detectors import DetectorKind, TestingAssignment
from .engine import (
    Scenario,
    Simulation,
    SimulationReport,
    reference_diameter,
)

UNREACHABLE = math.inf


class InapplicableRegimeError(DiagnosisError):
    """A checker was asked about a regime its bounds do not cover."""


class PropertyKind(enum.Enum):
    STRONG_COMPLETENESS = "strong-completeness"
    WEAK_COMPLETENESS = "weak-completeness"
    STRONG_ACCURACY = "strong-accuracy"
    LATENCY_BOUND = "latency-bound"
    TEST_COUNT_BOUND = "test-count-bound"
    ITEMS_BOUND = "items-bound"


@dataclass(frozen=True)
class PropertyVerdict:
    prop: PropertyKind
    holds: bool
    witness: str | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        if not self.holds and not self.witness:
            raise ValueError("a failing verdict must carry a witness")


# -- graph metrics ------------------------------------------------------


def _shortest_paths_from(
    source: int, nodes: frozenset[int], arcs: Iterable[tuple[int, int]]
) -> dict[int, int]:
    succ: dict[int, list[int]] = {}
    for a, b in arcs:
        if a in nodes and b in nodes:
            succ.setdefault(a, []).append(b)
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in succ.get(u, ()):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def assignment_diameter(
    assignment: TestingAssignment, correct: Sequence[int] | None = None
) -> int | float:
    """Longest shortest directed path; ``UNREACHABLE`` (infinity) when some
    ordered pair has no path. With ``correct`` given, both endpoints and all
    intermediate hops are restricted to that set."""
    nodes = frozenset(range(assignment.n) if correct is None else correct)
    if not nodes:
        raise ValueError("diameter of an empty graph")
    best = 0
    for source in nodes:
        dist = _shortest_paths_from(source, nodes, assignment.arcs)
        if len(dist) < len(nodes):
            return UNREACHABLE
        best = max(best, max(dist.values()))
    return best


def correct_strongly_connected(
    assignment: TestingAssignment, correct: Sequence[int]
) -> bool:
    """True iff the subgraph induced by the correct processes is strongly
    connected (vacuously true for a single correct process)."""
    nodes = frozenset(correct)
    if len(nodes) <= 1:
        return True
    start = min(nodes)
    forward = _shortest_paths_from(start, nodes, assignment.arcs)
    if len(forward) < len(nodes):
        return False
    reversed_arcs = [(b, a) for a, b in assignment.arcs]
    backward = _shortest_paths_from(start, nodes, reversed_arcs)
    return len(backward) == len(nodes)


def event_detection_bound(
    assignment: TestingAssignment, event_pid: int, correct: Sequence[int]
) -> int | float:
    """Longest testing path from any correct process to the event process,
    relaying only through correct processes; this is the worst-case number
    of rounds the event can take to reach everyone."""
    alive = frozenset(correct)
    testers_of: dict[int, list[int]] = {}
    for a, b in assignment.arcs:
        testers_of.setdefault(b, []).append(a)
    dist = {event_pid: 0}
    frontier = [event_pid]
    while frontier:
        nxt = []
        for node in frontier:
            for tester in testers_of.get(node, ()):
                if tester in alive and tester not in dist:
                    dist[tester] = dist[node] + 1
                    nxt.append(tester)
        frontier = nxt
    if any(p not in dist for p in alive):
        return UNREACHABLE
    return max((dist[p] for p in alive), default=0)


def split_trust_assignment(n: int = 6) -> tuple[TestingAssignment, tuple[int, ...]]:
    """All processes correct, but 0 and 1 test only each other while the
    rest test around their own ring and suspect both 0 and 1. The correct
    processes are not strongly connected, so accuracy cannot be satisfied.
    """
    if n < 5:
        raise ValueError("the split-trust fixture needs at least 5 processes")
    arcs = {(0, 1), (1, 0)}
    others = list(range(2, n))
    for idx, pid in enumerate(others):
        arcs.add((pid, others[(idx + 1) % len(others)]))
    return TestingAssignment(n=n, arcs=frozenset(arcs)), tuple(range(n))


# -- behavioural checkers ----------------------------------------------


def check_strong_completeness(report: SimulationReport) -> PropertyVerdict:
    """Every crashed process ends the run suspected by every correct one."""
    for event in report.events:
        for observer in report.correct:
            ts = report.final_tables[observer][event.pid]
            if not (ts >= 0 and ts % 2 == 1):
                return PropertyVerdict(
                    PropertyKind.STRONG_COMPLETENESS,
                    holds=False,
                    witness=(
                        f"process {observer} ends round {len(report.rounds)} with "
                        f"timestamp {ts} for crashed process {event.pid}"
                    ),
                )
    return PropertyVerdict(PropertyKind.STRONG_COMPLETENESS, holds=True)


def check_weak_completeness(report: SimulationReport) -> PropertyVerdict:
    for event in report.events:
        if not report.correct:
            continue
        if not any(
            report.final_tables[obs][event.pid] >= 0
            and report.final_tables[obs][event.pid] % 2 == 1
            for obs in report.correct
        ):
            return PropertyVerdict(
                PropertyKind.WEAK_COMPLETENESS,
                holds=False,
                witness=f"no correct process suspects crashed process {event.pid}",
            )
    return PropertyVerdict(PropertyKind.WEAK_COMPLETENESS, holds=True)


def check_strong_accuracy(report: SimulationReport) -> PropertyVerdict:
    """No correct process ends the run suspecting another correct process."""
    for observer in report.correct:
        row = report.final_tables[observer]
        for subject in report.correct:
            if subject == observer:
                continue
            ts = row[subject]
            if ts >= 0 and ts % 2 == 1:
                return PropertyVerdict(
                    PropertyKind.STRONG_ACCURACY,
                    holds=False,
                    witness=(
                        f"correct process {observer} ends the run suspecting "
                        f"correct process {subject} (timestamp {ts})"
                    ),
                )
    return PropertyVerdict(PropertyKind.STRONG_ACCURACY, holds=True)


def _correct_count_at(report: SimulationReport, round_no: int) -> int:
    crashed = sum(1 for e in report.events if e.crash_round <= round_no)
    return report.scenario.n - crashed


def _expected_tests(kind: DetectorKind, n: int, correct: int) -> tuple[int | None, int]:
    """(exact expectation or None, upper bound) for tests in one round."""
    if kind is DetectorKind.BRUTE_FORCE:
        exact = correct * (n - 1)
        return exact, exact
    if kind is DetectorKind.VRING:
        if correct == 0:
            return 0, 0
        exact = n if correct >= 2 else n - 1
        return exact, exact
    log_n = n.bit_length() - 1
    ceiling = n * log_n
    return (ceiling if correct == n else None), ceiling


def check_bounds(report: SimulationReport) -> list[PropertyVerdict]:
    """Check per-round test counts, per-event latency, and per-test item
    volume against the detector's no-false-suspicion bounds."""
    if report.injections_fired:
        raise InapplicableRegimeError(
            "test/latency bounds are stated for runs without false suspicions; "
            f"this run fired {report.injections_fired}"
        )
    scenario = report.scenario
    kind, n = scenario.detector, scenario.n
    verdicts: list[PropertyVerdict] = []

    tests_witness = None
    for rt in report.rounds:
        exact, ceiling = _expected_tests(kind, n, _correct_count_at(report, rt.round))
        if exact is not None and rt.tests_executed != exact:
            tests_witness = (
                f"round {rt.round}: {rt.tests_executed} tests, expected {exact}"
            )
            break
        if rt.tests_executed > ceiling:
            tests_witness = (
                f"round {rt.round}: {rt.tests_executed} tests exceed ceiling {ceiling}"
            )
            break
    verdicts.append(
        PropertyVerdict(
            PropertyKind.TEST_COUNT_BOUND,
            holds=tests_witness is None,
            witness=tests_witness,
        )
    )

    latency_limit = reference_diameter(kind, n)
    latency_witness = None
    for event in report.events:
        if event.latency is None:
            latency_witness = (
                f"event at process {event.pid} undetected after "
                f"{len(report.rounds)} rounds (bound {latency_limit})"
            )
            break
        if event.latency > latency_limit:
            latency_witness = (
                f"event at process {event.pid}: latency {event.latency} exceeds "
                f"{latency_limit}"
            )
            break
    verdicts.append(
        PropertyVerdict(
            PropertyKind.LATENCY_BOUND,
            holds=latency_witness is None,
            witness=latency_witness,
            note=f"limit {latency_limit} rounds",
        )
    )

    items_limit = 0 if kind is DetectorKind.BRUTE_FORCE else max(0, n - 2)
    items_witness = None
    for rt in report.rounds:
        if rt.max_items_per_test > items_limit:
            items_witness = (
                f"round {rt.round}: a test transferred {rt.max_items_per_test} items, "
                f"limit {items_limit}"
            )
            break
    verdicts.append(
        PropertyVerdict(
            PropertyKind.ITEMS_BOUND,
            holds=items_witness is None,
            witness=items_witness,
            note=f"limit {items_limit} items per test",
        )
    )
    return verdicts


def check_latency_within_diameter(report: SimulationReport) -> PropertyVerdict:
    """Measured latency of each event never exceeds the longest testing
    path to it in the assignment prevailing when it occurred."""
    if report.injections_fired:
        raise InapplicableRegimeError(
            "the diameter bound is stated for runs without false suspicions"
        )
    events = sorted(report.events, key=lambda e: e.crash_round)
    for prev, nxt in zip(events, events[1:]):
        if prev.detected_round is None or nxt.crash_round <= prev.detected_round:
            return PropertyVerdict(
                PropertyKind.LATENCY_BOUND,
                holds=True,
                note="skipped: overlapping events, single-event bound not applicable",
            )
    for event in events:
        assignment = report.assignment_at(event.crash_round)
        correct_then = [
            p
            for p in range(report.scenario.n)
            if not any(e.pid == p and e.crash_round <= event.crash_round for e in events)
        ]
        bound = event_detection_bound(assignment, event.pid, correct_then)
        if bound is UNREACHABLE or math.isinf(bound):
            return PropertyVerdict(
                PropertyKind.LATENCY_BOUND,
                holds=True,
                note=(
                    f"skipped: process {event.pid} unreachable from some correct "
                    "process in the prevailing assignment"
                ),
            )
        if event.latency is None or event.latency > bound:
            observed = "undetected" if event.latency is None else str(event.latency)
            return PropertyVerdict(
                PropertyKind.LATENCY_BOUND,
                holds=False,
                witness=(
                    f"event at process {event.pid}: latency {observed} vs "
                    f"testing-path bound {bound}"
                ),
                note="prevailing-assignment bound",
            )
    return PropertyVerdict(
        PropertyKind.LATENCY_BOUND, holds=True, note="prevailing-assignment bound"
    )


def run_all_checks(report: SimulationReport) -> list[PropertyVerdict]:
    """Every checker applicable to the report's regime."""
    verdicts = [
        check_strong_completeness(report),
        check_weak_completeness(report),
        check_strong_accuracy(report),
    ]
    if not report.injections_fired:
        verdicts.extend(check_bounds(report))
        verdicts.append(check_latency_within_diameter(report))
    return verdicts


# -- rendering -----------------------------------------------------------


def verdicts_text(verdicts: Sequence[PropertyVerdict]) -> str:
    width = max(len(v.prop.value) for v in verdicts)
    lines = []
    for v in verdicts:
        status = "PASS" if v.holds else "FAIL"
        detail = v.witness if v.witness else (v.note or "")
        lines.append(f"{v.prop.value:<{width}}  {status}  {detail}".rstrip())
    return "\n".join(lines) + "\n"


def verdicts_csv(verdicts: Sequence[PropertyVerdict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["property", "holds", "witness"])
    for v in verdicts:
        writer.writerow([v.prop.value, str(v.holds).lower(), v.witness or ""])
    return buf.getvalue()


# -- exhaustive ordering oracle ------------------------------------------


def enumerate_ordering_latencies(
    kind: DetectorKind, n: int, crash_pid: int, *, kernel=None
) -> tuple[int, int]:
    """Exact best/worst detection latency for a single crash, by exhausting
    every per-round interleaving of the correct testers.

    The system first converges with no faults, then ``crash_pid`` fails and
    every permutation of the testers is explored per round, with memoization
    on world state. Exponential in principle; intended for n <= 6.
    """
    scenario = Scenario(n=n, detector=kind)
    sim = Simulation(scenario, kernel=kernel, trace_level="counts")
    guard = scenario.effective_max_rounds()
    while sim.quiescent_round is None:
        if sim.round >= guard:
            raise AssertionError("fault-free run failed to converge")
        sim.run_round()
    sim.apply_crash(crash_pid)
    correct = sim.correct_processes()
    depth_limit = reference_diameter(kind, n) + 1

    memo: dict[bytes, tuple[int, int]] = {}

    def state_key(state: tuple) -> bytes:
        return state[0].tobytes() + state[1].tobytes()

    def explore(state: tuple, depth: int) -> tuple[int, int]:
        key = state_key(state)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if depth > depth_limit:
            raise AssertionError(
                f"latency exceeded {depth_limit} rounds for {kind.value}, "
                f"n={n}, crash={crash_pid}"
            )
        lows: list[int] = []
        highs: list[int] = []
        children: dict[bytes, tuple] = {}
        for perm in itertools.permutations(correct):
            sim.restore_state(state)
            sim.run_round(schedule=perm)
            if sim.event_detected(crash_pid):
                lows.append(1)
                highs.append(1)
            else:
                child = sim.save_state()
                children.setdefault(state_key(child), child)
        for child in children.values():
            low, high = explore(child, depth + 1)
            lows.append(1 + low)
            highs.append(1 + high)
        result = (min(lows), max(highs))
        memo[key] = result
        return result

    return explore(sim.save_state(), 1)
