"""diagfd: test-based failure detectors in a deterministic round simulator.

Three detector behaviours (brute-force all-test-all, an adaptive virtual
ring, and a reconfiguring virtual hypercube) run over a crash-fault world
with optional injected false suspicions, with an analysis layer that checks
completeness, accuracy, latency and test-count bounds.
"""

from ._backend import BACKEND_NAME, available_kernels
from .analysis import (
    PropertyKind,
    PropertyVerdict,
    assignment_diameter,
    check_bounds,
    check_strong_accuracy,
    check_strong_completeness,
    check_weak_completeness,
    correct_strongly_connected,
    enumerate_ordering_latencies,
    run_all_checks,
)
from .core import (
    UNKNOWN_TS,
    Classification,
    DiagnosticItem,
    GroundState,
    TestOutcome,
    TimestampTable,
    classification_of,
    diagnostic_delta,
    merge_diagnostic,
    record_test_outcome,
)
from .detectors import (
    DetectorKind,
    TestingAssignment,
    TestPlan,
    brute_force_plan,
    recompute_assignment,
    vcube_cluster,
    vcube_plan,
    vring_plan,
)
from .engine import (
    EventRecord,
    ExplicitInjections,
    OrderingPolicy,
    ProbabilisticInjections,
    RoundTrace,
    Scenario,
    ScenarioError,
    Simulation,
    SimulationReport,
    report_to_csv,
    run_scenario,
    trace_to_text,
)
from .scenario_io import parse_scenario_file, parse_scenario_text, render_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Classification",
    "DetectorKind",
    "DiagnosticItem",
    "EventRecord",
    "ExplicitInjections",
    "GroundState",
    "OrderingPolicy",
    "ProbabilisticInjections",
    "PropertyKind",
    "PropertyVerdict",
    "RoundTrace",
    "Scenario",
    "ScenarioError",
    "Simulation",
    "SimulationReport",
    "TestOutcome",
    "TestPlan",
    "TestingAssignment",
    "TimestampTable",
    "UNKNOWN_TS",
    "assignment_diameter",
    "available_kernels",
    "brute_force_plan",
    "check_bounds",
    "check_strong_accuracy",
    "check_strong_completeness",
    "check_weak_completeness",
    "classification_of",
    "correct_strongly_connected",
    "diagnostic_delta",
    "enumerate_ordering_latencies",
    "merge_diagnostic",
    "parse_scenario_file",
    "parse_scenario_text",
    "recompute_assignment",
    "record_test_outcome",
    "render_scenario",
    "report_to_csv",
    "run_all_checks",
    "run_scenario",
    "trace_to_text",
    "vcube_cluster",
    "vcube_plan",
    "vring_plan",
]
