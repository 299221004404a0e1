"""Greedy plan synthesis over a PDFA and execution with re-planning."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Protocol

from .automaton import Pdfa, enumerate_language, word_probability


class Stuck(Exception):
    """No admissible transition leaves a non-accepting state."""

    def __init__(self, state: int, message: str = ""):
        self.state = state
        super().__init__(message or f"stuck in state with completed set {state:#b}")


@dataclass(frozen=True)
class AvailabilityView:
    unreachable: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "unreachable", frozenset(self.unreachable))


@dataclass
class Plan:
    symbols: tuple
    start: int
    expected_probability: Fraction = Fraction(1)

    def __len__(self) -> int:
        return len(self.symbols)

    def to_json(self, pdfa: Optional[Pdfa] = None) -> dict:
        out = {
            "symbols": list(self.symbols),
            "expected_probability": float(self.expected_probability),
        }
        if pdfa is not None:
            out["start"] = pdfa.dfa.state_id(self.start)
        return out


def _should_stop(pdfa: Pdfa, q: int, best, prefer_terminal: bool) -> bool:
    if q not in pdfa.accepting:
        return False
    if not prefer_terminal or best is None:
        return True
    return pdfa.accept_prob.get(q, Fraction(0)) >= best[2]


def _argmax(options):
    # highest probability, then lowest symbol; options arrive in alphabet order
    best = None
    for opt in options:
        if best is None or opt[2] > best[2]:
            best = opt
    return best


def greedy_plan(
    pdfa: Pdfa,
    start: Optional[int] = None,
    unreachable: Iterable = (),
    prefer_terminal: bool = False,
) -> Plan:
    """Follow the most probable transition until an accepting state is entered.

    ``unreachable`` describes what can be executed right now, so it only
    restricts the first transition; later steps are chosen on the
    assumption that availability may change before they run.

    With ``prefer_terminal`` the plan stops at an accepting state only when
    its termination probability is at least the best outgoing one.
    """
    q = pdfa.initial if start is None else start
    if q not in pdfa.dfa:
        raise ValueError(f"state {q:#b} is not in the automaton")
    blocked = frozenset(unreachable)
    start_q = q
    symbols = []
    prob = Fraction(1)
    while True:
        options = [o for o in pdfa.successors(q) if not (not symbols and o[0] in blocked)]
        best = _argmax(options)
        if _should_stop(pdfa, q, best, prefer_terminal):
            return Plan(tuple(symbols), start_q, prob)
        if best is None:
            raise Stuck(q)
        sym, q, p = best
        symbols.append(sym)
        prob *= p


def best_word(pdfa: Pdfa) -> tuple:
    """Most probable accepted word by exhaustive enumeration (ties: smallest word)."""
    words = sorted(enumerate_language(pdfa))
    return max(words, key=lambda w: word_probability(pdfa, w, exact=True))


class Environment(Protocol):
    def availability(self, step: int) -> AvailabilityView: ...

    def achieve(self, symbol, step: int) -> bool: ...


@dataclass(frozen=True)
class Event:
    kind: str  # planned, achieved, blocked, replanned, finished, stuck
    state: int
    step: int
    symbol: Optional[int] = None
    plan: Optional[Plan] = None


@dataclass
class ExecutionTrace:
    events: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.events)

    def kinds(self) -> list:
        return [e.kind for e in self.events]

    def count(self, kind: str) -> int:
        return sum(e.kind == kind for e in self.events)

    @property
    def achieved(self) -> tuple:
        return tuple(e.symbol for e in self.events if e.kind == "achieved")

    @property
    def outcome(self) -> Optional[str]:
        return self.events[-1].kind if self.events else None

    def to_lines(self, pdfa: Pdfa) -> list[str]:
        out = []
        for e in self.events:
            rec = {"event": e.kind, "state": pdfa.dfa.state_id(e.state), "symbol": e.symbol, "step": e.step}
            if e.plan is not None:
                rec["plan"] = list(e.plan.symbols)
                rec["expected_probability"] = float(e.plan.expected_probability)
            out.append(json.dumps(rec))
        return out

    def save(self, path, pdfa: Pdfa) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.to_lines(pdfa)))


def execute(
    pdfa: Pdfa,
    env: Environment,
    prefer_terminal: bool = False,
    max_failures: Optional[int] = None,
) -> ExecutionTrace:
    """Run greedy plans against ``env``, re-planning when the next symbol is unavailable.

    A commanded sub-goal that the environment fails to achieve is recorded
    as ``blocked`` and excluded from the immediately following re-plan only.
    More than ``max_failures`` consecutive failures end the run as stuck.
    """
    if max_failures is None:
        max_failures = 2 * len(pdfa.dfa.alphabet) + 2
    trace = ExecutionTrace()
    ev = trace.events
    q = pdfa.initial
    step = 0
    failures = 0

    def plan_from(kind: str, extra=()) -> Optional[list]:
        view = env.availability(step)
        try:
            plan = greedy_plan(pdfa, q, view.unreachable | frozenset(extra), prefer_terminal)
        except Stuck:
            ev.append(Event("stuck", q, step))
            return None
        ev.append(Event(kind, q, step, plan=plan))
        return list(plan.symbols)

    remaining = plan_from("planned")
    while remaining is not None:
        if not remaining:
            ev.append(Event("finished", q, step))
            break
        sym = remaining[0]
        if sym in env.availability(step).unreachable:
            remaining = plan_from("replanned")
            continue
        ok = env.achieve(sym, step)
        step += 1
        if ok:
            failures = 0
            q = pdfa.dfa.step(q, sym)
            ev.append(Event("achieved", q, step, sym))
            remaining.pop(0)
            continue
        failures += 1
        ev.append(Event("blocked", q, step, sym))
        if failures > max_failures:
            ev.append(Event("stuck", q, step))
            break
        remaining = plan_from("replanned", extra=(sym,))
    return trace


@dataclass
class ScheduledEnvironment:
    """Symbolic environment: symbols are unreachable at the listed steps, otherwise always achieved."""

    schedule: dict = field(default_factory=dict)  # step -> set of unreachable symbols
    default: frozenset = frozenset()

    def availability(self, step: int) -> AvailabilityView:
        return AvailabilityView(self.schedule.get(step, self.default))

    def achieve(self, symbol, step: int) -> bool:
        return symbol not in self.availability(step).unreachable

    @classmethod
    def from_json(cls, raw: dict, symbol_objects: Optional[dict] = None) -> "ScheduledEnvironment":
        """Accept ``{"unreachable": {step: [symbols]}}`` or ``{"absent": {step: [objects]}}``.

        Object schedules need ``symbol_objects`` (symbol -> object) or a
        ``symbol_objects`` entry in the document. A ``"default"`` list applies
        to unlisted steps.
        """
        if "unreachable" in raw:
            sched = {int(k): frozenset(v) for k, v in raw["unreachable"].items()}
            return cls(sched, frozenset(raw.get("default", ())))
        mapping = symbol_objects or {int(k): v for k, v in raw.get("symbol_objects", {}).items()}
        if "absent" not in raw or not mapping:
            raise ValueError("schedule needs 'unreachable', or 'absent' plus a symbol->object map")

        def to_symbols(objs):
            objs = set(objs)
            return frozenset(s for s, o in mapping.items() if o in objs)

        sched = {int(k): to_symbols(v) for k, v in raw["absent"].items()}
        return cls(sched, to_symbols(raw.get("default", ())))
