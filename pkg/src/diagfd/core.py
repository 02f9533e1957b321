"""Timestamp tables and diagnostic-information primitives.

Every process keeps one timestamp per process in the system. The encoding
is fixed: -1 means the state is still unknown, an even value means the
process is considered correct, an odd value means it is suspected of having
crashed. Timestamps only ever grow at a given holder, so "greater value
wins" merging is safe and idempotent.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

UNKNOWN_TS = -1


class DiagnosisError(Exception):
    """Base class for protocol-level errors."""


class InvalidTimestampError(DiagnosisError):
    """Timestamp below -1, which no holder can ever produce."""


class SelfTestError(DiagnosisError):
    """A process tried to record a test on itself; there is no self test."""


class ProtocolViolationError(DiagnosisError):
    """A diagnostic item carried an unknown (-1) timestamp on the wire."""


class Classification(enum.Enum):
    """How a process classifies another process (or a single test verdict)."""

    UNKNOWN = "unknown"
    CORRECT = "correct"
    SUSPECT = "suspect"


class GroundState(enum.Enum):
    """Actual state of a process; transitions only CORRECT -> FAILED."""

    CORRECT = "correct"
    FAILED = "failed"


def classification_of(ts: int) -> Classification:
    """Decode a timestamp: -1 unknown, even correct, odd suspect."""
    if ts < UNKNOWN_TS:
        raise InvalidTimestampError(f"timestamp {ts} is below -1")
    if ts == UNKNOWN_TS:
        return Classification.UNKNOWN
    return Classification.CORRECT if ts % 2 == 0 else Classification.SUSPECT


def next_timestamp(current: int, suspect: bool) -> int:
    """Timestamp transition applied by a tester after one test.

    A first test pins the entry to 0 (correct) or 1 (suspect). Afterwards
    the entry is incremented exactly when the verdict contradicts the
    stored parity, so entries stay monotone and parity always encodes the
    latest verdict.
    """
    if current < UNKNOWN_TS:
        raise InvalidTimestampError(f"timestamp {current} is below -1")
    if current == UNKNOWN_TS:
        return 1 if suspect else 0
    if suspect != (current % 2 == 1):
        return current + 1
    return current


@dataclass(frozen=True)
class DiagnosticItem:
    """One gossiped fact: ``subject`` was last classified with ``ts``."""

    subject: int
    ts: int

    def __post_init__(self) -> None:
        if self.ts <= UNKNOWN_TS:
            raise ProtocolViolationError(
                f"diagnostic item for {self.subject} carries timestamp {self.ts}"
            )


@dataclass(frozen=True)
class TimestampTable:
    """A process's view of the whole system, one timestamp per process."""

    owner: int
    entries: tuple[int, ...]

    @classmethod
    def initial(cls, owner: int, n: int) -> TimestampTable:
        """Fresh table: everything unknown except the owner itself (correct)."""
        if not 0 <= owner < n:
            raise ValueError(f"owner {owner} outside [0, {n})")
        entries = tuple(0 if pid == owner else UNKNOWN_TS for pid in range(n))
        return cls(owner=owner, entries=entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    def classification(self, pid: int) -> Classification:
        return classification_of(self.entries[pid])

    def replace(self, pid: int, ts: int) -> TimestampTable:
        entries = list(self.entries)
        entries[pid] = ts
        return TimestampTable(owner=self.owner, entries=tuple(entries))


@dataclass(frozen=True)
class TestOutcome:
    """Result of one executed test, with any diagnostic items obtained."""

    tester: int
    tested: int
    verdict: Classification
    items: tuple[DiagnosticItem, ...] = ()

    def __post_init__(self) -> None:
        if self.tester == self.tested:
            raise SelfTestError(f"process {self.tester} cannot test itself")
        if self.verdict is Classification.UNKNOWN:
            raise ValueError("a test verdict is never unknown")


def record_test_outcome(
    table: TimestampTable, tested: int, verdict: Classification
) -> TimestampTable:
    """Fold one direct test verdict into the tester's table."""
    if tested == table.owner:
        raise SelfTestError(f"process {table.owner} cannot test itself")
    if verdict is Classification.UNKNOWN:
        raise ValueError("a test verdict is never unknown")
    updated = next_timestamp(table.entries[tested], verdict is Classification.SUSPECT)
    if updated == table.entries[tested]:
        return table
    return table.replace(tested, updated)


def merge_diagnostic(
    table: TimestampTable,
    items: Iterable[DiagnosticItem],
    exclude: Iterable[int],
) -> TimestampTable:
    """Absorb gossiped items, keeping the greater timestamp per subject.

    ``exclude`` must contain every process the owner tested directly in the
    current round; direct verdicts always win over gossip about the same
    round. The owner itself is never overwritten regardless of ``exclude``.
    """
    barred = set(exclude)
    barred.add(table.owner)
    entries = list(table.entries)
    changed = False
    for item in items:
        if item.ts <= UNKNOWN_TS:
            raise ProtocolViolationError(
                f"received unknown timestamp for process {item.subject}"
            )
        if item.subject in barred:
            continue
        if item.ts > entries[item.subject]:
            entries[item.subject] = item.ts
            changed = True
    if not changed:
        return table
    return TimestampTable(owner=table.owner, entries=tuple(entries))


def diagnostic_delta(
    state_of_tested: TimestampTable,
    last_sent: Sequence[int],
    exclude: Iterable[int] = (),
) -> tuple[tuple[DiagnosticItem, ...], tuple[int, ...]]:
    """Items the tested process owes its tester since the last transfer.

    Returns the items plus the advanced snapshot of what has now been sent.
    Unknown entries are never transmitted, and subjects in ``exclude``
    (typically the tested process itself and the tester, which needs
    neither) are withheld.
    """
    if len(last_sent) != state_of_tested.n:
        raise ValueError("last-sent snapshot length does not match table")
    barred = frozenset(exclude)
    items: list[DiagnosticItem] = []
    snapshot = list(last_sent)
    for subject, ts in enumerate(state_of_tested.entries):
        if subject in barred or ts == UNKNOWN_TS:
            continue
        if ts > snapshot[subject]:
            items.append(DiagnosticItem(subject=subject, ts=ts))
            snapshot[subject] = ts
    return tuple(items), tuple(snapshot)
