"""The three detector behaviors: brute-force, vRing, and vCube.

A detector turns a process's local view (its timestamp table) into an
ordered test plan for the round. Plans are pure functions of
(process id, system size, view), so they can be recomputed freely whenever
the view changes.
"""

from __future__ import annotations

import enum
import functools
from collections.abc import Sequence
from dataclasses import dataclass

from .core import UNKNOWN_TS, DiagnosisError


class InvalidClusterError(DiagnosisError):
    """Cluster level outside [1, log2 n]."""


class ConfigurationError(DiagnosisError):
    """Detector/system-size combination that cannot be instantiated."""


class DetectorKind(enum.Enum):
    BRUTE_FORCE = "brute-force"
    VRING = "vring"
    VCUBE = "vcube"

    @classmethod
    def parse(cls, text: str) -> DetectorKind:
        for kind in cls:
            if kind.value == text:
                return kind
        known = ", ".join(k.value for k in cls)
        raise ConfigurationError(f"unknown detector {text!r} (expected one of: {known})")

    @property
    def transfers_diagnostics(self) -> bool:
        """Brute-force testers learn everything first hand and gossip nothing."""
        return self is not DetectorKind.BRUTE_FORCE


@dataclass(frozen=True)
class TestPlan:
    """Ordered targets for one tester; adaptive plans stop at the first
    target tested correct."""

    tester: int
    targets: tuple[int, ...]
    adaptive: bool


@dataclass(frozen=True)
class TestingAssignment:
    """Directed graph of (tester, tested) arcs for one round."""

    n: int
    arcs: frozenset[tuple[int, int]]

    def to_adjacency_text(self) -> str:
        """One line per arc, ``tester -> tested``, sorted for stable diffs."""
        lines = [f"{a} -> {b}" for a, b in sorted(self.arcs)]
        return "\n".join(lines)

    def testers_of(self, pid: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, b in self.arcs if b == pid))


def _is_suspect(ts: int) -> bool:
    return ts >= 0 and ts % 2 == 1


def validate_system(kind: DetectorKind, n: int) -> None:
    """Reject combinations the detectors are not defined for."""
    if n < 2:
        raise ConfigurationError(f"system size {n} is below the minimum of 2")
    if kind is DetectorKind.VCUBE and n & (n - 1) != 0:
        raise ConfigurationError(f"vcube requires a power-of-two system size, got {n}")


def brute_force_plan(i: int, n: int) -> TestPlan:
    """Every other process, ascending, tested unconditionally."""
    return TestPlan(
        tester=i,
        targets=tuple(j for j in range(n) if j != i),
        adaptive=False,
    )


def vring_plan(i: int, n: int, view: Sequence[int] | None = None) -> TestPlan:
    """Successors of ``i`` around the ring; execution stops at the first
    target that tests correct, so the view plays no part in the candidate
    order (it is accepted for interface symmetry with the other detectors).
    """
    del view
    return TestPlan(
        tester=i,
        targets=tuple((i + k) % n for k in range(1, n)),
        adaptive=True,
    )


@functools.lru_cache(maxsize=None)
def vcube_cluster(i: int, s: int, n: int | None = None) -> tuple[int, ...]:
    """Ordered candidate list at level ``s`` for process ``i``.

    The list starts at the process differing from ``i`` in bit ``s-1`` and
    recursively appends that process's lower-level clusters, giving
    ``2**(s-1)`` distinct processes, none of them ``i``.
    """
    if s < 1:
        raise InvalidClusterError(f"cluster level {s} is below 1")
    if n is not None:
        if n & (n - 1) != 0 or n < 2:
            raise InvalidClusterError(f"cluster levels are defined for powers of two, got n={n}")
        if s > n.bit_length() - 1:
            raise InvalidClusterError(f"cluster level {s} exceeds log2({n})")
        if not 0 <= i < n:
            raise InvalidClusterError(f"process {i} outside [0, {n})")
    head = i ^ (1 << (s - 1))
    members = [head]
    for level in range(1, s):
        members.extend(vcube_cluster(head, level))
    return tuple(members)


@functools.lru_cache(maxsize=None)
def _vcube_duty_table(n: int) -> tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]:
    """For each tester j: candidate targets i with the cluster members that
    precede j in c(i, s), ordered by ascending (s, i). j tests i exactly
    when every one of those predecessors is suspected in j's view."""
    log_n = n.bit_length() - 1
    table: list[tuple[tuple[int, tuple[int, ...]], ...]] = []
    for j in range(n):
        duties: list[tuple[int, tuple[int, ...]]] = []
        for s in range(1, log_n + 1):
            for i in range(n):
                if i == j or (i ^ j).bit_length() != s:
                    continue
                cluster = vcube_cluster(i, s, n)
                preds = cluster[: cluster.index(j)]
                duties.append((i, preds))
        table.append(tuple(duties))
    return tuple(table)


def vcube_plan(j: int, n: int, view: Sequence[int]) -> TestPlan:
    """Targets whose cluster lists place ``j`` as the first process it does
    not itself suspect; ascending by (level, target id)."""
    validate_system(DetectorKind.VCUBE, n)
    targets = [
        i
        for i, preds in _vcube_duty_table(n)[j]
        if all(_is_suspect(view[p]) for p in preds)
    ]
    return TestPlan(tester=j, targets=tuple(targets), adaptive=False)


def plan_for(kind: DetectorKind, i: int, n: int, view: Sequence[int]) -> TestPlan:
    if kind is DetectorKind.BRUTE_FORCE:
        return brute_force_plan(i, n)
    if kind is DetectorKind.VRING:
        return vring_plan(i, n, view)
    return vcube_plan(i, n, view)


def _vring_expected_arcs(i: int, n: int, view: Sequence[int]) -> list[tuple[int, int]]:
    # Probing is outcome-driven; from the view we expect it to stop at the
    # first successor not currently suspected (unknown counts as testable).
    arcs = []
    for k in range(1, n):
        j = (i + k) % n
        arcs.append((i, j))
        if not _is_suspect(view[j]):
            break
    return arcs


def recompute_assignment(
    kind: DetectorKind,
    n: int,
    views: Sequence[Sequence[int]],
    correct: Sequence[int] | None = None,
) -> TestingAssignment:
    """Union of the test arcs every correct process would execute given the
    current views. ``correct`` defaults to all processes."""
    validate_system(kind, n)
    testers = range(n) if correct is None else correct
    arcs: set[tuple[int, int]] = set()
    for i in testers:
        if kind is DetectorKind.VRING:
            arcs.update(_vring_expected_arcs(i, n, views[i]))
        else:
            plan = plan_for(kind, i, n, views[i])
            arcs.update((i, j) for j in plan.targets)
    return TestingAssignment(n=n, arcs=frozenset(arcs))


def converged_views(n: int, crashed: Sequence[int]) -> list[list[int]]:
    """Views after full propagation: every live process holds timestamp 1
    for each crashed process and 0 for every other. Crashed processes keep
    frozen initial tables (they no longer matter as testers)."""
    crashed_set = set(crashed)
    views = []
    for i in range(n):
        if i in crashed_set:
            views.append([0 if j == i else UNKNOWN_TS for j in range(n)])
        else:
            views.append([1 if j in crashed_set else 0 for j in range(n)])
    return views
