"""Scenario files: a small sectioned key=value format.

::

    [system]
    n = 8
    detector = vcube

    [crashes]
    2 = 4          # round = pid[, pid...]

    [injections]
    probability = 0.05
    seed = 9
    # or explicit triples instead: round = tester->tested[, tester->tested...]

    [run]
    ordering = worst-case
    seed = 42
    max_rounds = 30
    stop_on_quiescence = true
    enforce_single_event = false

Unknown sections and keys are rejected with the offending line number.
``parse_scenario_text(render_scenario(s)) == s.canonical()`` for every
valid scenario.
"""

from __future__ import annotations

from pathlib import Path

from .core import DiagnosisError
from .detectors import DetectorKind
from .engine import (
    ExplicitInjections,
    OrderingPolicy,
    ProbabilisticInjections,
    Scenario,
)


class ScenarioParseError(DiagnosisError):
    def __init__(self, message: str, lineno: int):
        super().__init__(message)
        self.lineno = lineno


_SECTIONS = ("system", "crashes", "injections", "run")
_KEYS = {"system": {"n", "detector"}, "run": {
    "ordering", "seed", "max_rounds", "stop_on_quiescence", "enforce_single_event"
}}


def _split_sections(text: str) -> dict[str, list[tuple[int, str, str]]]:
    sections: dict[str, list[tuple[int, str, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ScenarioParseError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ScenarioParseError(f"duplicate section [{name}]", lineno)
            sections[name] = []
            current = name
            continue
        if current is None:
            raise ScenarioParseError(f"content before any section: {line!r}", lineno)
        if "=" not in line:
            raise ScenarioParseError(f"expected key = value, got {line!r}", lineno)
        key, _, value = line.partition("=")
        sections[current].append((lineno, key.strip(), value.strip()))
    return sections


def _int(value: str, what: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ScenarioParseError(f"{what} must be an integer, got {value!r}", lineno) from None


def _bool(value: str, what: str, lineno: int) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ScenarioParseError(f"{what} must be true or false, got {value!r}", lineno)


def _parse_injections(
    entries: list[tuple[int, str, str]],
) -> ExplicitInjections | ProbabilisticInjections | None:
    if not entries:
        return None
    keys = {key for _, key, _ in entries}
    if keys & {"probability", "seed"}:
        extras = keys - {"probability", "seed"}
        if extras:
            lineno = next(ln for ln, k, _ in entries if k in extras)
            raise ScenarioParseError(
                "probabilistic injections cannot be mixed with explicit triples", lineno
            )
        probability = seed = None
        for lineno, key, value in entries:
            if key == "probability":
                try:
                    probability = float(value)
                except ValueError:
                    raise ScenarioParseError(
                        f"probability must be a float, got {value!r}", lineno
                    ) from None
            else:
                seed = _int(value, "injection seed", lineno)
        if probability is None:
            raise ScenarioParseError("probabilistic injections need a probability", entries[0][0])
        return ProbabilisticInjections(rate=probability, seed=seed if seed is not None else 0)

    triples: list[tuple[int, int, int]] = []
    seen_rounds: set[int] = set()
    for lineno, key, value in entries:
        round_no = _int(key, "injection round", lineno)
        if round_no in seen_rounds:
            raise ScenarioParseError(f"round {round_no} listed twice in [injections]", lineno)
        seen_rounds.add(round_no)
        for chunk in value.split(","):
            pair = chunk.strip()
            if "->" not in pair:
                raise ScenarioParseError(
                    f"expected tester->tested, got {pair!r}", lineno
                )
            tester, _, tested = pair.partition("->")
            triples.append(
                (
                    round_no,
                    _int(tester.strip(), "injection tester", lineno),
                    _int(tested.strip(), "injection tested", lineno),
                )
            )
    return ExplicitInjections(triples=tuple(sorted(triples)))


def parse_scenario_text(text: str) -> Scenario:
    sections = _split_sections(text)
    if "system" not in sections:
        raise ScenarioParseError("missing [system] section", 0)

    known: dict[str, dict[str, tuple[int, str]]] = {}
    for name in ("system", "run"):
        entries = {}
        for lineno, key, value in sections.get(name, []):
            if key not in _KEYS[name]:
                raise ScenarioParseError(f"unknown key {key!r} in [{name}]", lineno)
            if key in entries:
                raise ScenarioParseError(f"duplicate key {key!r} in [{name}]", lineno)
            entries[key] = (lineno, value)
        known[name] = entries

    system = known["system"]
    if "n" not in system:
        raise ScenarioParseError("missing key 'n' in [system]", 0)
    if "detector" not in system:
        raise ScenarioParseError("missing key 'detector' in [system]", 0)
    n = _int(system["n"][1], "n", system["n"][0])
    try:
        detector = DetectorKind.parse(system["detector"][1])
    except DiagnosisError as exc:
        raise ScenarioParseError(str(exc), system["detector"][0]) from None

    crashes: list[tuple[int, int]] = []
    seen_rounds: set[int] = set()
    for lineno, key, value in sections.get("crashes", []):
        round_no = _int(key, "crash round", lineno)
        if round_no in seen_rounds:
            raise ScenarioParseError(f"round {round_no} listed twice in [crashes]", lineno)
        seen_rounds.add(round_no)
        for chunk in value.split(","):
            crashes.append((round_no, _int(chunk.strip(), "crash pid", lineno)))

    injections = _parse_injections(sections.get("injections", []))

    run = known["run"]
    ordering = OrderingPolicy.FIXED
    if "ordering" in run:
        lineno, value = run["ordering"]
        try:
            ordering = OrderingPolicy.parse(value)
        except DiagnosisError as exc:
            raise ScenarioParseError(str(exc), lineno) from None
    seed = _int(run["seed"][1], "seed", run["seed"][0]) if "seed" in run else 0
    max_rounds = (
        _int(run["max_rounds"][1], "max_rounds", run["max_rounds"][0])
        if "max_rounds" in run
        else None
    )
    stop_on_quiescence = (
        _bool(run["stop_on_quiescence"][1], "stop_on_quiescence", run["stop_on_quiescence"][0])
        if "stop_on_quiescence" in run
        else True
    )
    enforce_single_event = (
        _bool(
            run["enforce_single_event"][1],
            "enforce_single_event",
            run["enforce_single_event"][0],
        )
        if "enforce_single_event" in run
        else False
    )

    return Scenario(
        n=n,
        detector=detector,
        crashes=tuple(sorted(crashes)),
        injections=injections,
        ordering=ordering,
        seed=seed,
        max_rounds=max_rounds,
        stop_on_quiescence=stop_on_quiescence,
        enforce_single_event=enforce_single_event,
    ).canonical()


def parse_scenario_file(path: str | Path) -> Scenario:
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))


def render_scenario(scenario: Scenario) -> str:
    """Canonical text form; parses back to an equal scenario."""
    scenario = scenario.canonical()
    lines = ["[system]", f"n = {scenario.n}", f"detector = {scenario.detector.value}", ""]

    if scenario.crashes:
        lines.append("[crashes]")
        by_round: dict[int, list[int]] = {}
        for round_no, pid in scenario.crashes:
            by_round.setdefault(round_no, []).append(pid)
        for round_no in sorted(by_round):
            pids = ", ".join(str(p) for p in sorted(by_round[round_no]))
            lines.append(f"{round_no} = {pids}")
        lines.append("")

    inj = scenario.injections
    if inj is not None:
        lines.append("[injections]")
        if isinstance(inj, ProbabilisticInjections):
            lines.append(f"probability = {inj.rate!r}")
            lines.append(f"seed = {inj.seed}")
        else:
            grouped: dict[int, list[tuple[int, int]]] = {}
            for round_no, tester, tested in inj.triples:
                grouped.setdefault(round_no, []).append((tester, tested))
            for round_no in sorted(grouped):
                pairs = ", ".join(f"{a}->{b}" for a, b in sorted(grouped[round_no]))
                lines.append(f"{round_no} = {pairs}")
        lines.append("")

    lines.append("[run]")
    lines.append(f"ordering = {scenario.ordering.value}")
    lines.append(f"seed = {scenario.seed}")
    if scenario.max_rounds is not None:
        lines.append(f"max_rounds = {scenario.max_rounds}")
    lines.append(f"stop_on_quiescence = {'true' if scenario.stop_on_quiescence else 'false'}")
    lines.append(
        f"enforce_single_event = {'true' if scenario.enforce_single_event else 'false'}"
    )
    return "\n".join(lines) + "\n"
