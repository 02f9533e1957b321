"""Deterministic round-based execution of a detector over a scenario.

A scenario fixes the system size, the detector, a crash schedule, an
optional false-suspicion schedule, the intra-round ordering policy, and a
seed. Two runs of the same scenario produce byte-identical traces.

Crashes apply at round boundaries, before any test of that round, so the
crash round is the first round that counts toward detection latency.
Within a round, each scheduled tester executes its whole plan before the
next tester starts, and diagnostic deltas propagate test by test, which is
what makes single-round full propagation reachable under a favourable
ordering.
"""

from __future__ import annotations

import enum
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .core import (
    UNKNOWN_TS,
    Classification,
    DiagnosisError,
    DiagnosticItem,
    GroundState,
    TestOutcome,
    TimestampTable,
    diagnostic_delta,
    merge_diagnostic,
    record_test_outcome,
)
from .detectors import (
    DetectorKind,
    TestingAssignment,
    brute_force_plan,
    validate_system,
    vcube_plan,
    vring_plan,
)


class ScenarioError(DiagnosisError):
    """Scenario that cannot be run as specified."""


class OrderingPolicy(enum.Enum):
    FIXED = "fixed"
    SEEDED_RANDOM = "seeded-random"
    BEST_CASE = "best-case"
    WORST_CASE = "worst-case"

    @classmethod
    def parse(cls, text: str) -> OrderingPolicy:
        for policy in cls:
            if policy.value == text:
                return policy
        known = ", ".join(p.value for p in cls)
        raise ScenarioError(f"unknown ordering {text!r} (expected one of: {known})")


@dataclass(frozen=True)
class ExplicitInjections:
    """False suspicions as explicit (round, tester, tested) triples."""

    triples: tuple[tuple[int, int, int], ...]

    @property
    def last_round(self) -> int:
        return max((r for r, _, _ in self.triples), default=0)


@dataclass(frozen=True)
class ProbabilisticInjections:
    """Each executed test on a live target is overridden to suspect with
    probability ``rate``, drawn from a dedicated seeded stream."""

    rate: float
    seed: int


Injections = ExplicitInjections | ProbabilisticInjections | None


def reference_diameter(kind: DetectorKind, n: int) -> int:
    """Diameter of the detector's all-correct testing assignment."""
    if kind is DetectorKind.BRUTE_FORCE:
        return 1
    if kind is DetectorKind.VRING:
        return n - 1
    return n.bit_length() - 1


@dataclass(frozen=True)
class Scenario:
    n: int
    detector: DetectorKind
    crashes: tuple[tuple[int, int], ...] = ()  # (round, pid)
    injections: Injections = None
    ordering: OrderingPolicy = OrderingPolicy.FIXED
    seed: int = 0
    max_rounds: int | None = None
    stop_on_quiescence: bool = True
    enforce_single_event: bool = False

    def validate(self) -> None:
        validate_system(self.detector, self.n)
        seen: set[int] = set()
        for rnd, pid in self.crashes:
            if rnd < 1:
                raise ScenarioError(f"crash round {rnd} is below 1")
            if not 0 <= pid < self.n:
                raise ScenarioError(f"crash pid {pid} outside [0, {self.n})")
            if pid in seen:
                raise ScenarioError(f"process {pid} crashes more than once")
            seen.add(pid)
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ScenarioError(f"max_rounds {self.max_rounds} is below 1")
        inj = self.injections
        if isinstance(inj, ProbabilisticInjections):
            if not 0.0 <= inj.rate < 1.0:
                raise ScenarioError(f"injection probability {inj.rate} outside [0, 1)")
        elif isinstance(inj, ExplicitInjections):
            for rnd, tester, tested in inj.triples:
                if rnd < 1:
                    raise ScenarioError(f"injection round {rnd} is below 1")
                if tester == tested:
                    raise ScenarioError(f"injection {tester}->{tested} is a self test")
                if not (0 <= tester < self.n and 0 <= tested < self.n):
                    raise ScenarioError(
                        f"injection {tester}->{tested} names a process outside [0, {self.n})"
                    )

    def effective_max_rounds(self) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        last_event = max((r for r, _ in self.crashes), default=1)
        return last_event + 4 * reference_diameter(self.detector, self.n) + 2

    def canonical(self) -> Scenario:
        """Sort schedules so value equality matches behavioural equality."""
        out = replace(self, crashes=tuple(sorted(self.crashes)))
        if isinstance(self.injections, ExplicitInjections):
            out = replace(
                out,
                injections=ExplicitInjections(tuple(sorted(self.injections.triples))),
            )
        return out


@dataclass(frozen=True)
class TestRecord:
    """One executed test as recorded in a round trace; ``merged`` lists the
    item subjects the tester actually absorbed."""

    tester: int
    tested: int
    verdict: Classification
    items: tuple[DiagnosticItem, ...]
    merged: tuple[int, ...]


@dataclass(frozen=True)
class RoundTrace:
    round: int
    tests_executed: int
    items_transferred: int
    max_items_per_test: int
    table_changes: int
    injections_fired: int
    arcs: frozenset[tuple[int, int]]
    tests: tuple[TestRecord, ...] | None = None
    tables: tuple[tuple[int, ...], ...] | None = None


@dataclass(frozen=True)
class EventRecord:
    pid: int
    crash_round: int
    detected_round: int | None

    @property
    def latency(self) -> int | None:
        """Rounds from the crash until every correct process suspects the
        process; the crash round itself counts as the first."""
        if self.detected_round is None:
            return None
        return self.detected_round - self.crash_round + 1


@dataclass(frozen=True)
class SimulationReport:
    scenario: Scenario
    rounds: tuple[RoundTrace, ...]
    events: tuple[EventRecord, ...]
    final_tables: tuple[tuple[int, ...], ...]
    correct: tuple[int, ...]
    quiescent_round: int | None
    injections_fired: int

    @property
    def crashed(self) -> tuple[int, ...]:
        return tuple(sorted(set(range(self.scenario.n)) - set(self.correct)))

    def ground_state(self, pid: int) -> GroundState:
        return GroundState.CORRECT if pid in self.correct else GroundState.FAILED

    def tests_per_round(self) -> list[int]:
        return [rt.tests_executed for rt in self.rounds]

    def items_per_round(self) -> list[int]:
        return [rt.items_transferred for rt in self.rounds]

    def assignment_at(self, round_no: int) -> TestingAssignment:
        return TestingAssignment(n=self.scenario.n, arcs=self.rounds[round_no - 1].arcs)

    def final_classification(self, observer: int, subject: int) -> Classification:
        ts = self.final_tables[observer][subject]
        if ts == UNKNOWN_TS:
            return Classification.UNKNOWN
        return Classification.CORRECT if ts % 2 == 0 else Classification.SUSPECT


def compute_schedule(
    policy: OrderingPolicy,
    correct: Sequence[int],
    last_event: int | None,
    arcs: Iterable[tuple[int, int]],
    rng: random.Random,
) -> list[int]:
    """Order in which the correct testers execute their plans this round.

    Best case schedules the most recent event's testers first and then
    follows increasing BFS distance from the event in the reversed testing
    graph, so information gathered early is pulled onward within the same
    round. Worst case is the exact reverse.
    """
    base = sorted(correct)
    if policy is OrderingPolicy.FIXED:
        return base
    if policy is OrderingPolicy.SEEDED_RANDOM:
        rng.shuffle(base)
        return base
    if last_event is None:
        return base

    alive = set(base)
    testers_of: dict[int, list[int]] = {}
    for a, b in arcs:
        testers_of.setdefault(b, []).append(a)
    dist = {last_event: 0}
    frontier = [last_event]
    while frontier:
        nxt: list[int] = []
        for node in frontier:
            for tester in sorted(testers_of.get(node, ())):
                if tester in alive and tester not in dist:
                    dist[tester] = dist[node] + 1
                    nxt.append(tester)
        frontier = nxt
    unreachable = len(base) + 1
    ordered = sorted(base, key=lambda p: (dist.get(p, unreachable), p))
    if policy is OrderingPolicy.WORST_CASE:
        ordered.reverse()
    return ordered


class Simulation:
    """Mutable world state plus the per-round execution machinery.

    State lives in flat numpy arrays shared with the kernel backend; a
    simulation is single-threaded, but independent simulations never share
    state and can run in parallel.
    """

    def __init__(self, scenario: Scenario, *, kernel=None, trace_level: str = "tests"):
        scenario.validate()
        if trace_level not in ("counts", "tests", "full"):
            raise ValueError(f"unknown trace level {trace_level!r}")
        self.scenario = scenario
        self.kernel = kernel if kernel is not None else _backend.active_kernel
        self.trace_level = trace_level
        n = scenario.n
        self.n = n
        self.round = 0
        self.quiescent_round: int | None = None
        self.injections_fired = 0

        self.ground = np.ones(n, dtype=np.int8)
        self.tables = np.full((n, n), UNKNOWN_TS, dtype=np.int64)
        np.fill_diagonal(self.tables, 0)
        self.last_sent = np.full((n, n, n), UNKNOWN_TS, dtype=np.int64)

        self._crashes_by_round: dict[int, list[int]] = {}
        for rnd, pid in sorted(scenario.crashes):
            self._crashes_by_round.setdefault(rnd, []).append(pid)
        self._last_crash_round = max(self._crashes_by_round, default=0)

        inj = scenario.injections
        self._explicit_by_round: dict[int, list[tuple[int, int]]] = {}
        self._inject_rng: random.Random | None = None
        self._inject_rate = 0.0
        if isinstance(inj, ExplicitInjections):
            for rnd, tester, tested in sorted(inj.triples):
                self._explicit_by_round.setdefault(rnd, []).append((tester, tested))
            self._last_injection_round = inj.last_round
        elif isinstance(inj, ProbabilisticInjections):
            self._inject_rng = random.Random(inj.seed)
            self._inject_rate = inj.rate
            self._last_injection_round = 0
        else:
            self._last_injection_round = 0

        self._order_rng = random.Random(scenario.seed)
        self._last_event: int | None = None
        self._events: list[dict] = []

        cap = n * (n - 1)
        icap = max(1, cap * max(0, n - 2))
        self._schedule_buf = np.zeros(n, dtype=np.int64)
        self._plan_off = np.zeros(n + 1, dtype=np.int64)
        self._plan_tgt = np.zeros(cap, dtype=np.int64)
        self._forced = np.zeros((n, n), dtype=np.int8)
        self._out_tester = np.zeros(cap, dtype=np.int64)
        self._out_tested = np.zeros(cap, dtype=np.int64)
        self._out_verdict = np.zeros(cap, dtype=np.int8)
        self._out_items_off = np.zeros(cap + 1, dtype=np.int64)
        self._out_item_subject = np.zeros(icap, dtype=np.int64)
        self._out_item_ts = np.zeros(icap, dtype=np.int64)
        self._out_item_merged = np.zeros(icap, dtype=np.int8)

        kind = scenario.detector
        self._static_targets: dict[int, tuple[int, ...]] | None = None
        if kind is DetectorKind.BRUTE_FORCE:
            self._static_targets = {i: brute_force_plan(i, n).targets for i in range(n)}
        elif kind is DetectorKind.VRING:
            self._static_targets = {i: vring_plan(i, n).targets for i in range(n)}
        self._adaptive = 1 if kind is DetectorKind.VRING else 0
        self._transfers = 1 if kind.transfers_diagnostics else 0
        self._plan_cache: dict[tuple[int, bytes], tuple[int, ...]] = {}
        self._arcs_cache: dict[bytes, frozenset[tuple[int, int]]] = {}

    # -- views ---------------------------------------------------------

    def correct_processes(self) -> list[int]:
        return [i for i in range(self.n) if self.ground[i]]

    def view_of(self, pid: int) -> TimestampTable:
        return TimestampTable(owner=pid, entries=tuple(int(x) for x in self.tables[pid]))

    def _classification_signature(self) -> bytes:
        enc = np.where(self.tables < 0, 2, self.tables & 1).astype(np.uint8)
        return enc.tobytes() + self.ground.tobytes()

    def _targets_for(self, tester: int) -> tuple[int, ...]:
        if self._static_targets is not None:
            return self._static_targets[tester]
        sig = np.where(self.tables[tester] < 0, 2, self.tables[tester] & 1)
        key = (tester, sig.astype(np.uint8).tobytes())
        cached = self._plan_cache.get(key)
        if cached is None:
            cached = vcube_plan(tester, self.n, self.tables[tester]).targets
            self._plan_cache[key] = cached
        return cached

    def current_arcs(self) -> frozenset[tuple[int, int]]:
        """Testing assignment implied by the current views of the correct
        processes (vRing arcs cover the probe prefix the views predict)."""
        sig = self._classification_signature()
        cached = self._arcs_cache.get(sig)
        if cached is not None:
            return cached
        kind = self.scenario.detector
        arcs: set[tuple[int, int]] = set()
        for i in self.correct_processes():
            if kind is DetectorKind.VRING:
                row = self.tables[i]
                for k in range(1, self.n):
                    j = (i + k) % self.n
                    arcs.add((i, j))
                    ts = int(row[j])
                    if not (ts >= 0 and ts % 2 == 1):
                        break
            else:
                arcs.update((i, j) for j in self._targets_for(i))
        frozen = frozenset(arcs)
        self._arcs_cache[sig] = frozen
        return frozen

    # -- state capture (used by the ordering-enumeration oracle) --------

    def save_state(self) -> tuple:
        return (self.tables.copy(), self.last_sent.copy(), self.ground.copy(), self.round)

    def restore_state(self, state: tuple) -> None:
        tables, last_sent, ground, round_no = state
        np.copyto(self.tables, tables)
        np.copyto(self.last_sent, last_sent)
        np.copyto(self.ground, ground)
        self.round = round_no

    def apply_crash(self, pid: int) -> None:
        """Crash ``pid`` immediately (outside the scenario schedule)."""
        if not self.ground[pid]:
            raise ScenarioError(f"process {pid} already crashed")
        self.ground[pid] = 0
        self._last_event = pid
        self._events.append({"pid": pid, "crash_round": self.round + 1, "detected": None})

    def event_detected(self, pid: int) -> bool:
        """True when every currently correct process suspects ``pid``."""
        correct = self.correct_processes()
        if not correct:
            return True
        col = self.tables[correct, pid]
        return bool(np.all((col >= 0) & (col % 2 == 1)))

    # -- single-test reference path (kernel-independent) ----------------

    def execute_test(
        self,
        tester: int,
        tested: int,
        *,
        already_tested: Iterable[int] = (),
        force_suspect: bool = False,
    ) -> TestOutcome:
        """Execute one test through the core-model operations.

        This is the value-semantics reference for what the kernels do per
        test; the engine's hot path goes through the kernel instead.
        """
        if not self.ground[tester]:
            raise AssertionError(f"scheduled tester {tester} is not correct")
        suspect = (not self.ground[tested]) or force_suspect
        verdict = Classification.SUSPECT if suspect else Classification.CORRECT

        view = self.view_of(tester)
        view = record_test_outcome(view, tested, verdict)
        items: tuple[DiagnosticItem, ...] = ()
        if not suspect and self._transfers:
            state = self.view_of(tested)
            snapshot = [int(x) for x in self.last_sent[tested, tester]]
            items, new_snapshot = diagnostic_delta(
                state, snapshot, exclude={tested, tester}
            )
            self.last_sent[tested, tester] = new_snapshot
            view = merge_diagnostic(view, items, exclude={tested, *already_tested})
        self.tables[tester] = view.entries
        return TestOutcome(tester=tester, tested=tested, verdict=verdict, items=items)

    # -- round execution -------------------------------------------------

    def _apply_scheduled_crashes(self, round_no: int) -> None:
        for pid in self._crashes_by_round.get(round_no, ()):
            if self.scenario.enforce_single_event:
                pending = [e for e in self._events if e["detected"] is None]
                if pending:
                    raise ScenarioError(
                        f"single-event discipline violated: process {pid} crashes at "
                        f"round {round_no} while event at process {pending[0]['pid']} "
                        "is still undetected"
                    )
            self.ground[pid] = 0
            self._last_event = pid
            self._events.append({"pid": pid, "crash_round": round_no, "detected": None})

    def _forced_mask(self, round_no: int, plans: list[tuple[int, tuple[int, ...]]]) -> int:
        self._forced.fill(0)
        fired_candidates = 0
        for tester, tested in self._explicit_by_round.get(round_no, ()):
            self._forced[tester, tested] = 1
            fired_candidates += 1
        if self._inject_rng is not None and self._inject_rate > 0.0:
            rate = self._inject_rate
            rng = self._inject_rng
            for tester, targets in plans:
                for tested in targets:
                    if rng.random() < rate:
                        self._forced[tester, tested] = 1
                        fired_candidates += 1
        return fired_candidates

    def run_round(self, schedule: Sequence[int] | None = None) -> RoundTrace:
        round_no = self.round + 1
        self.round = round_no
        self._apply_scheduled_crashes(round_no)

        correct = self.correct_processes()
        plans = [(tester, self._targets_for(tester)) for tester in sorted(correct)]
        arcs = self.current_arcs()

        if schedule is None:
            order = compute_schedule(
                self.scenario.ordering, correct, self._last_event, arcs, self._order_rng
            )
        else:
            order = list(schedule)
            if sorted(order) != sorted(correct):
                raise ScenarioError("schedule override must list every correct process once")

        has_injections = bool(self._explicit_by_round) or self._inject_rng is not None
        if has_injections:
            self._forced_mask(round_no, plans)
        else:
            self._forced.fill(0)

        targets_by_tester = dict(plans)
        pos = 0
        for k, tester in enumerate(order):
            self._schedule_buf[k] = tester
            self._plan_off[k] = pos
            targets = targets_by_tester[tester]
            width = len(targets)
            self._plan_tgt[pos : pos + width] = targets
            pos += width
        self._plan_off[len(order)] = pos

        n_tests, n_items, n_changes, n_forced = self.kernel.run_round(
            self.ground,
            self.tables,
            self.last_sent,
            self._schedule_buf[: len(order)],
            self._plan_off[: len(order) + 1],
            self._plan_tgt,
            self._adaptive,
            self._transfers,
            self._forced,
            self._out_tester,
            self._out_tested,
            self._out_verdict,
            self._out_items_off,
            self._out_item_subject,
            self._out_item_ts,
            self._out_item_merged,
        )
        self.injections_fired += n_forced

        max_items = 0
        records: tuple[TestRecord, ...] | None = None
        offs = self._out_items_off
        if n_tests:
            max_items = int(np.max(np.diff(offs[: n_tests + 1])))
        if self.trace_level != "counts":
            recs = []
            for t in range(n_tests):
                lo, hi = int(offs[t]), int(offs[t + 1])
                items = tuple(
                    DiagnosticItem(
                        subject=int(self._out_item_subject[x]),
                        ts=int(self._out_item_ts[x]),
                    )
                    for x in range(lo, hi)
                )
                merged = tuple(
                    int(self._out_item_subject[x])
                    for x in range(lo, hi)
                    if self._out_item_merged[x]
                )
                recs.append(
                    TestRecord(
                        tester=int(self._out_tester[t]),
                        tested=int(self._out_tested[t]),
                        verdict=(
                            Classification.CORRECT
                            if self._out_verdict[t]
                            else Classification.SUSPECT
                        ),
                        items=items,
                        merged=merged,
                    )
                )
            records = tuple(recs)

        tables_snapshot = None
        if self.trace_level == "full":
            tables_snapshot = tuple(tuple(int(x) for x in row) for row in self.tables)

        for event in self._events:
            if event["detected"] is None and self.event_detected(event["pid"]):
                event["detected"] = round_no

        stable = n_changes == 0 and n_items == 0
        schedule_done = (
            round_no >= self._last_crash_round
            and round_no >= self._last_injection_round
            and (self._inject_rng is None or self._inject_rate == 0.0)
        )
        if stable and schedule_done and self.quiescent_round is None:
            self.quiescent_round = round_no

        return RoundTrace(
            round=round_no,
            tests_executed=n_tests,
            items_transferred=n_items,
            max_items_per_test=max_items,
            table_changes=n_changes,
            injections_fired=n_forced,
            arcs=arcs,
            tests=records,
            tables=tables_snapshot,
        )

    def run(self) -> SimulationReport:
        traces: list[RoundTrace] = []
        limit = self.scenario.effective_max_rounds()
        while self.round < limit:
            traces.append(self.run_round())
            if self.scenario.stop_on_quiescence and self.quiescent_round is not None:
                break
        return self._report(traces)

    def _report(self, traces: list[RoundTrace]) -> SimulationReport:
        events = tuple(
            EventRecord(pid=e["pid"], crash_round=e["crash_round"], detected_round=e["detected"])
            for e in self._events
        )
        return SimulationReport(
            scenario=self.scenario,
            rounds=tuple(traces),
            events=events,
            final_tables=tuple(tuple(int(x) for x in row) for row in self.tables),
            correct=tuple(self.correct_processes()),
            quiescent_round=self.quiescent_round,
            injections_fired=self.injections_fired,
        )


def run_scenario(
    scenario: Scenario, *, kernel=None, trace_level: str = "tests"
) -> SimulationReport:
    """Run ``scenario`` to quiescence or its round limit and report."""
    return Simulation(scenario, kernel=kernel, trace_level=trace_level).run()


def report_to_csv(report: SimulationReport) -> str:
    """Per-round metrics plus a per-event latency summary block."""
    lines = ["round,tests_executed,items_transferred,events_pending,events_detected"]
    for rt in report.rounds:
        pending = sum(
            1
            for e in report.events
            if e.crash_round <= rt.round
            and (e.detected_round is None or e.detected_round > rt.round)
        )
        detected = sum(
            1
            for e in report.events
            if e.detected_round is not None and e.detected_round <= rt.round
        )
        lines.append(
            f"{rt.round},{rt.tests_executed},{rt.items_transferred},{pending},{detected}"
        )
    lines.append("")
    lines.append("# summary")
    for e in report.events:
        detected = "-" if e.detected_round is None else str(e.detected_round)
        latency = "-" if e.latency is None else str(e.latency)
        lines.append(
            f"# event pid={e.pid} crash_round={e.crash_round} "
            f"detected_round={detected} latency={latency}"
        )
    quiescent = "-" if report.quiescent_round is None else str(report.quiescent_round)
    lines.append(f"# quiescent_round={quiescent}")
    lines.append(
        f"# rounds={len(report.rounds)}"
        f" total_tests={sum(report.tests_per_round())}"
        f" total_items={sum(report.items_per_round())}"
    )
    return "\n".join(lines) + "\n"


def trace_to_text(report: SimulationReport) -> str:
    """One line per executed test, in execution order."""
    lines = []
    for rt in report.rounds:
        if rt.tests is None:
            raise ValueError("trace output needs a report recorded at trace level 'tests'")
        for rec in rt.tests:
            lines.append(
                f"round={rt.round} tester={rec.tester} tested={rec.tested} "
                f"verdict={rec.verdict.value} items={len(rec.items)}"
            )
    return "\n".join(lines) + "\n"
