"""Engine behaviour: round execution, ordering policies, injections,
quiescence, determinism, and the scenario fixtures the detectors must
reproduce exactly."""

import random

import pytest

from diagfd.core import Classification
from diagfd.detectors import DetectorKind
from diagfd.engine import (
    EventRecord,
    ExplicitInjections,
    OrderingPolicy,
    ProbabilisticInjections,
    Scenario,
    ScenarioError,
    Simulation,
    compute_schedule,
    report_to_csv,
    run_scenario,
    trace_to_text,
)

CORRECT = Classification.CORRECT
SUSPECT = Classification.SUSPECT


def _sequence(report, round_no):
    return [
        (t.tester, t.tested, t.verdict) for t in report.rounds[round_no - 1].tests
    ]


class TestExecuteTest:
    def test_failed_process_always_tests_suspect(self):
        sim = Simulation(Scenario(n=4, detector=DetectorKind.VRING))
        sim.apply_crash(2)
        outcome = sim.execute_test(1, 2)
        assert outcome.verdict is SUSPECT
        assert outcome.items == ()

    def test_live_process_tests_correct(self):
        sim = Simulation(Scenario(n=4, detector=DetectorKind.VRING))
        outcome = sim.execute_test(0, 1)
        assert outcome.verdict is CORRECT

    def test_injected_suspicion_overrides_live_verdict(self):
        sim = Simulation(Scenario(n=4, detector=DetectorKind.VRING))
        outcome = sim.execute_test(0, 1, force_suspect=True)
        assert outcome.verdict is SUSPECT
        assert sim.ground[1] == 1
        assert outcome.items == ()

    def test_crashed_tester_rejected(self):
        sim = Simulation(Scenario(n=4, detector=DetectorKind.VRING))
        sim.apply_crash(0)
        with pytest.raises(AssertionError):
            sim.execute_test(0, 1)


class TestRunRound:
    def test_brute_force_counts(self):
        report = run_scenario(Scenario(n=4, detector=DetectorKind.BRUTE_FORCE, max_rounds=3))
        assert report.tests_per_round() == [12, 12, 12][: len(report.rounds)]

    def test_crashes_apply_before_tests(self):
        report = run_scenario(
            Scenario(n=4, detector=DetectorKind.BRUTE_FORCE, crashes=((1, 3),))
        )
        first = report.rounds[0]
        assert all(t.verdict is SUSPECT for t in first.tests if t.tested == 3)
        assert all(t.tester != 3 for t in first.tests)

    def test_vring_probes_are_contiguous(self):
        report = run_scenario(
            Scenario(n=6, detector=DetectorKind.VRING, crashes=((1, 1), (1, 2)))
        )
        for rt in report.rounds:
            seen = []
            for rec in rt.tests:
                if not seen or seen[-1] != rec.tester:
                    seen.append(rec.tester)
            assert len(seen) == len(set(seen)), "a tester's probes were interleaved"

    def test_schedule_override_must_cover_correct_processes(self):
        sim = Simulation(Scenario(n=4, detector=DetectorKind.BRUTE_FORCE))
        with pytest.raises(ScenarioError):
            sim.run_round(schedule=[0, 1])


class TestOrderingPolicies:
    def test_fixed_is_ascending(self):
        rng = random.Random(0)
        assert compute_schedule(OrderingPolicy.FIXED, [3, 1, 2], None, set(), rng) == [1, 2, 3]

    def test_seeded_random_is_reproducible(self):
        arcs = set()
        a = compute_schedule(OrderingPolicy.SEEDED_RANDOM, range(8), None, arcs, random.Random(7))
        b = compute_schedule(OrderingPolicy.SEEDED_RANDOM, range(8), None, arcs, random.Random(7))
        c = compute_schedule(OrderingPolicy.SEEDED_RANDOM, range(8), None, arcs, random.Random(8))
        assert a == b
        assert a != c

    def test_best_case_schedules_event_testers_first(self):
        # ring of 6, event at 1: its tester 0 first, then upstream testers
        arcs = {(i, (i + 1) % 6) for i in range(6)}
        correct = [0, 2, 3, 4, 5]
        order = compute_schedule(OrderingPolicy.BEST_CASE, correct, 1, arcs, random.Random(0))
        assert order == [0, 5, 4, 3, 2]

    def test_worst_case_is_reverse_of_best(self):
        arcs = {(i, (i + 1) % 6) for i in range(6)}
        correct = [0, 2, 3, 4, 5]
        best = compute_schedule(OrderingPolicy.BEST_CASE, correct, 1, arcs, random.Random(0))
        worst = compute_schedule(OrderingPolicy.WORST_CASE, correct, 1, arcs, random.Random(0))
        assert worst == list(reversed(best))

    def test_no_event_falls_back_to_ascending(self):
        order = compute_schedule(OrderingPolicy.BEST_CASE, [2, 0, 1], None, set(), random.Random(0))
        assert order == [0, 1, 2]


class TestLatency:
    @pytest.mark.parametrize("kind", list(DetectorKind))
    def test_best_case_detects_in_one_round(self, kind):
        n = 8
        report = run_scenario(
            Scenario(n=n, detector=kind, crashes=((1, 3),), ordering=OrderingPolicy.BEST_CASE)
        )
        assert report.events[0].latency == 1

    def test_worst_case_ring_needs_n_minus_one_rounds(self):
        report = run_scenario(
            Scenario(
                n=6,
                detector=DetectorKind.VRING,
                crashes=((1, 1),),
                ordering=OrderingPolicy.WORST_CASE,
            )
        )
        assert report.events[0].detected_round == 5
        assert report.events[0].latency == 5

    def test_latency_counts_from_crash_round(self):
        record = EventRecord(pid=3, crash_round=4, detected_round=4)
        assert record.latency == 1
        assert EventRecord(pid=3, crash_round=4, detected_round=None).latency is None

    def test_truncated_run_leaves_event_undetected(self):
        report = run_scenario(
            Scenario(
                n=6,
                detector=DetectorKind.VRING,
                crashes=((2, 1),),
                ordering=OrderingPolicy.WORST_CASE,
                max_rounds=3,
            )
        )
        assert report.events[0].detected_round is None


class TestDeterminism:
    @pytest.mark.parametrize("kind", list(DetectorKind))
    def test_equal_seeds_give_byte_identical_output(self, kind):
        scenario = Scenario(
            n=8,
            detector=kind,
            crashes=((2, 5),),
            injections=ProbabilisticInjections(rate=0.15, seed=3),
            ordering=OrderingPolicy.SEEDED_RANDOM,
            seed=42,
            max_rounds=10,
            stop_on_quiescence=False,
        )
        first = run_scenario(scenario)
        second = run_scenario(scenario)
        assert report_to_csv(first) == report_to_csv(second)
        assert trace_to_text(first) == trace_to_text(second)

    def test_different_seeds_change_random_schedules(self):
        base = Scenario(
            n=8,
            detector=DetectorKind.VRING,
            crashes=((1, 2),),
            ordering=OrderingPolicy.SEEDED_RANDOM,
            max_rounds=6,
            stop_on_quiescence=False,
        )
        from dataclasses import replace

        a = trace_to_text(run_scenario(replace(base, seed=1)))
        b = trace_to_text(run_scenario(replace(base, seed=2)))
        assert a != b


class TestFrozenCrashLaw:
    @pytest.mark.parametrize("kind", list(DetectorKind))
    def test_crashed_processes_never_test_nor_pass(self, kind):
        rng = random.Random(5)
        for trial in range(10):
            n = 8
            pids = rng.sample(range(n), k=rng.randint(1, n - 1))
            crashes = tuple(sorted((rng.randint(1, 3), pid) for pid in pids))
            report = run_scenario(
                Scenario(n=n, detector=kind, crashes=crashes, seed=trial, max_rounds=12)
            )
            crash_round = dict((pid, rnd) for rnd, pid in crashes)
            for rt in report.rounds:
                for rec in rt.tests:
                    if rec.tester in crash_round:
                        assert rt.round < crash_round[rec.tester]
                    if rec.tested in crash_round and rt.round >= crash_round[rec.tested]:
                        assert rec.verdict is SUSPECT


class TestReportAccessors:
    def test_ground_state_and_crashed_partition(self):
        from diagfd.core import GroundState

        report = run_scenario(
            Scenario(n=4, detector=DetectorKind.BRUTE_FORCE, crashes=((1, 2),))
        )
        assert report.crashed == (2,)
        assert report.ground_state(2) is GroundState.FAILED
        assert report.ground_state(0) is GroundState.CORRECT


class TestFrozenTables:
    def test_crashed_process_table_never_changes(self):
        scenario = Scenario(n=8, detector=DetectorKind.VCUBE, crashes=((2, 4),), max_rounds=8)
        sim = Simulation(scenario, trace_level="full")
        sim.run_round()
        before = tuple(int(x) for x in sim.tables[4])
        for _ in range(6):
            sim.run_round()
        assert tuple(int(x) for x in sim.tables[4]) == before


class TestWorstCaseCeiling:
    @pytest.mark.parametrize("kind", list(DetectorKind))
    def test_tests_per_round_never_exceed_all_pairs(self, kind):
        n = 8
        ceiling = n * n - n
        report = run_scenario(
            Scenario(
                n=n,
                detector=kind,
                injections=ProbabilisticInjections(rate=0.35, seed=11),
                max_rounds=12,
                stop_on_quiescence=False,
            )
        )
        assert all(t <= ceiling for t in report.tests_per_round())


class TestQuiescence:
    @pytest.mark.parametrize("kind", list(DetectorKind))
    def test_fault_free_runs_reach_quiescence(self, kind):
        report = run_scenario(Scenario(n=8, detector=kind))
        assert report.quiescent_round is not None
        assert report.rounds[-1].items_transferred == 0
        assert report.rounds[-1].table_changes == 0

    def test_steady_state_items_stay_zero(self):
        report = run_scenario(
            Scenario(n=8, detector=DetectorKind.VRING, max_rounds=20, stop_on_quiescence=False)
        )
        assert report.quiescent_round is not None
        for rt in report.rounds:
            if rt.round >= report.quiescent_round:
                assert rt.items_transferred == 0

    def test_probabilistic_injections_prevent_quiescence(self):
        report = run_scenario(
            Scenario(
                n=4,
                detector=DetectorKind.BRUTE_FORCE,
                injections=ProbabilisticInjections(rate=0.3, seed=1),
                max_rounds=6,
            )
        )
        assert report.quiescent_round is None
        assert len(report.rounds) == 6


class TestInjections:
    def test_transient_false_suspicion_heals_to_even(self):
        # one tester briefly suspects a live process; the next direct test
        # bumps the entry to the next even value and gossip overrides the
        # stale odd value everywhere
        scenario = Scenario(
            n=8,
            detector=DetectorKind.VCUBE,
            injections=ExplicitInjections(((3, 5, 4),)),
            max_rounds=14,
            stop_on_quiescence=False,
        )
        report = run_scenario(scenario)
        assert report.injections_fired == 1
        assert report.final_tables[5][4] == 2
        for observer in range(8):
            assert report.final_classification(observer, 4) is CORRECT

    def test_contradicted_tester_stays_suspicious_while_others_heal(self):
        # one of 4's testers suspects it forever, but 4's other testers keep
        # re-testing it correct: their recovery bump (timestamp 2) outranks
        # the stale odd gossip, so only the contradicting tester ends the
        # run suspecting 4 - and that single pair already breaks accuracy
        triples = tuple((r, 5, 4) for r in range(1, 15))
        scenario = Scenario(
            n=8,
            detector=DetectorKind.VCUBE,
            injections=ExplicitInjections(triples),
            max_rounds=14,
            stop_on_quiescence=False,
        )
        report = run_scenario(scenario)
        assert report.final_tables[5][4] == 1
        for observer in range(8):
            if observer in (4, 5):
                continue
            assert report.final_classification(observer, 4) is CORRECT, observer

    def test_unanimous_false_testers_keep_victim_suspected_everywhere(self):
        # when every direct tester of 4 is made to suspect it, no process
        # ever produces counter-evidence and 4 remains suspected by the
        # whole system indefinitely
        triples = tuple((r, t, 4) for r in range(1, 15) for t in (5, 6, 0))
        scenario = Scenario(
            n=8,
            detector=DetectorKind.VCUBE,
            injections=ExplicitInjections(triples),
            max_rounds=14,
            stop_on_quiescence=False,
        )
        report = run_scenario(scenario)
        for observer in range(8):
            if observer == 4:
                continue
            assert report.final_classification(observer, 4) is SUSPECT, observer

    def test_injection_on_crashed_target_changes_nothing(self):
        scenario = Scenario(
            n=4,
            detector=DetectorKind.BRUTE_FORCE,
            crashes=((1, 2),),
            injections=ExplicitInjections(((2, 0, 2),)),
        )
        report = run_scenario(scenario)
        assert report.injections_fired == 0


class TestSingleEventDiscipline:
    def test_overlapping_events_rejected_when_enforced(self):
        scenario = Scenario(
            n=6,
            detector=DetectorKind.VRING,
            crashes=((1, 1), (2, 2)),
            ordering=OrderingPolicy.WORST_CASE,
            enforce_single_event=True,
        )
        with pytest.raises(ScenarioError):
            run_scenario(scenario)

    def test_spaced_events_accepted(self):
        scenario = Scenario(
            n=4,
            detector=DetectorKind.BRUTE_FORCE,
            crashes=((1, 1), (4, 2)),
            enforce_single_event=True,
        )
        report = run_scenario(scenario)
        assert [e.latency for e in report.events] == [1, 1]


class TestScenarioValidation:
    def test_vcube_size_rejected(self):
        with pytest.raises(Exception):
            Scenario(n=6, detector=DetectorKind.VCUBE).validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(crashes=((0, 1),)),
            dict(crashes=((1, 9),)),
            dict(crashes=((1, 1), (2, 1))),
            dict(max_rounds=0),
            dict(injections=ProbabilisticInjections(rate=1.0, seed=0)),
            dict(injections=ExplicitInjections(((1, 2, 2),))),
            dict(injections=ExplicitInjections(((0, 1, 2),))),
        ],
    )
    def test_invalid_scenarios_rejected(self, kwargs):
        with pytest.raises(ScenarioError):
            Scenario(n=4, detector=DetectorKind.BRUTE_FORCE, **kwargs).validate()


class TestDeltaTransferNarratives:
    def test_fault_free_ring_runs_one_probe_per_tester(self):
        report = run_scenario(Scenario(n=6, detector=DetectorKind.VRING, max_rounds=3))
        first = _sequence(report, 1)
        assert first == [(i, (i + 1) % 6, CORRECT) for i in range(6)]

    def test_three_crashed_ring_steady_sequences(self):
        report = run_scenario(
            Scenario(n=6, detector=DetectorKind.VRING, crashes=((1, 1), (1, 2), (1, 5)))
        )
        assert report.quiescent_round is not None
        steady = _sequence(report, len(report.rounds))
        assert steady == [
            (0, 1, SUSPECT),
            (0, 2, SUSPECT),
            (0, 3, CORRECT),
            (3, 4, CORRECT),
            (4, 5, SUSPECT),
            (4, 0, CORRECT),
        ]
        assert all(rt.tests_executed == 6 for rt in report.rounds)

    def test_first_pull_carries_facts_about_the_unprobed_half(self):
        # schedule 4, then 3, then 0 in the crash round: when 0 first tests
        # 3 correct, the transfer is exactly the facts about 4 and 5, and 0
        # absorbs both
        scenario = Scenario(n=6, detector=DetectorKind.VRING, crashes=((1, 1), (1, 2), (1, 5)))
        sim = Simulation(scenario)
        trace = sim.run_round(schedule=[4, 3, 0])
        pull = next(t for t in trace.tests if t.tester == 0 and t.tested == 3)
        assert [(it.subject, it.ts) for it in pull.items] == [(4, 0), (5, 1)]
        assert pull.merged == (4, 5)

    def test_fixed_order_first_pull_by_4_learns_other_side(self):
        scenario = Scenario(n=6, detector=DetectorKind.VRING, crashes=((1, 1), (1, 2), (1, 5)))
        sim = Simulation(scenario)
        trace = sim.run_round()  # fixed ascending: 0, 3, 4
        pull = next(t for t in trace.tests if t.tester == 4 and t.tested == 0)
        assert [(it.subject, it.ts) for it in pull.items] == [(1, 1), (2, 1), (3, 0)]
        assert pull.merged == (1, 2, 3)
