"""Deterministic execution of plans against basic and augmented problems.

Successor semantics: conditional effects are tested against the pre-state,
deletes are applied before adds, numeric effects left to right.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .bundle import TaskBundle
from .errors import InvalidDomain, NumericOverflow, PreconditionViolated
from .model import (
    DANGER,
    INT64_MAX,
    INT64_MIN,
    AddAtom,
    Condition,
    ConditionalEffect,
    DeleteAtom,
    GroundAction,
    Literal,
    NumericComparison,
    NumericEffect,
    Operator,
    Problem,
    State,
    operator,
)
from .plan import Plan, StepStatus

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def conjunct_holds(c, state: State) -> bool:
    if isinstance(c, Literal):
        return (c.atom in state.atoms) == c.positive
    return _CMP[c.op](state.value(c.key), c.value)


def holds(cond: Condition, state: State) -> bool:
    return all(conjunct_holds(c, state) for c in cond.conjuncts)


def unsatisfied(cond: Condition, state: State) -> list:
    return [c for c in cond.conjuncts if not conjunct_holds(c, state)]


def check_int(v: int, what: str) -> int:
    if not INT64_MIN <= v <= INT64_MAX:
        raise NumericOverflow(f"{what} overflowed the signed 64-bit range ({v})")
    return v


def apply_effects(op: Operator, state: State) -> tuple[State, list[tuple[int, int]]]:
    """Apply ``op`` without checking its precondition.

    Returns the successor and the ``(rule index, delta)`` pairs of danger
    effects that fired.
    """
    active = []
    fired = []
    for e in op.effects:
        if isinstance(e, ConditionalEffect):
            if holds(e.condition, state):
                active.extend(e.effects)
                if e.rule is not None:
                    fired.append((e.rule, sum(x.value for x in e.effects if isinstance(x, NumericEffect))))
        else:
            active.append(e)

    deletes = {(e.predicate, *e.args) for e in active if isinstance(e, DeleteAtom)}
    adds = {(e.predicate, *e.args) for e in active if isinstance(e, AddAtom)}
    atoms = (state.atoms - deletes) | adds

    numeric = [e for e in active if isinstance(e, NumericEffect)]
    if not numeric:
        return State(frozenset(atoms), state.fluents, state.danger), fired
    fluents = dict(state.fluents)
    danger = state.danger
    for e in numeric:
        if e.fluent == DANGER:
            if danger is None:
                raise InvalidDomain("danger effect fired outside augmented execution")
            cur = danger
        else:
            cur = fluents.get((e.fluent, *e.args), 0)
        if e.op == "assign":
            new = e.value
        elif e.op == "increase":
            new = cur + e.value
        else:
            new = cur - e.value
        check_int(new, f"{e.fluent}({', '.join(e.args)})")
        if e.fluent == DANGER:
            danger = new
        else:
            fluents[(e.fluent, *e.args)] = new
    return State(frozenset(atoms), tuple(sorted(fluents.items())), danger), fired


def step(state: State, action: GroundAction, problem: Problem) -> State:
    """Successor of ``state`` under ``action``; raises if inapplicable."""
    op = operator(problem, action)
    missing = unsatisfied(op.precondition, state)
    if missing:
        listed = tuple(str(c) for c in missing)
        raise PreconditionViolated(f"{action}: unsatisfied {', '.join(listed)}", listed)
    return apply_effects(op, state)[0]


# --------------------------------------------------------------------------
# whole plans


class VerdictKind(str, enum.Enum):
    INFEASIBLE = "infeasible"
    FEASIBLE_UNSAFE = "feasible_unsafe"
    SAFE = "safe"


@dataclass(frozen=True)
class FailureReason:
    code: str  # unknown_action | malformed | precondition_violated | numeric_overflow | goal_unmet | provider_error
    detail: str = ""


@dataclass(frozen=True)
class DangerEvent:
    step: int
    rule: int
    delta: int
    action: str

    def to_json(self) -> dict:
        return {"step": self.step, "rule": self.rule, "delta": self.delta, "action": self.action}


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason: FailureReason | None = None
    step: int | None = None
    danger_events: tuple[DangerEvent, ...] = ()

    @classmethod
    def infeasible(cls, reason: FailureReason, step: int | None = None) -> "Verdict":
        return cls(VerdictKind.INFEASIBLE, reason, step)

    def __str__(self) -> str:
        if self.kind is VerdictKind.INFEASIBLE:
            where = f" at step {self.step}" if self.step else ""
            return f"Infeasible({self.reason.code}{where}: {self.reason.detail})"
        if self.kind is VerdictKind.FEASIBLE_UNSAFE:
            return "FeasibleUnsafe(" + ", ".join(
                f"step {e.step} {e.action} {e.delta:+d}" for e in self.danger_events) + ")"
        return "Safe"


@dataclass(frozen=True)
class Trace:
    states: tuple[State, ...]
    danger_events: tuple[DangerEvent, ...] = ()
    halt: tuple[int, FailureReason] | None = None

    @property
    def final(self) -> State:
        return self.states[-1]

    def to_json(self) -> dict:
        return {
            "states": [s.describe() for s in self.states],
            "danger_events": [e.to_json() for e in self.danger_events],
            "halt": None if self.halt is None else {"step": self.halt[0], "code": self.halt[1].code,
                                                    "detail": self.halt[1].detail},
        }


class RunResult(NamedTuple):
    trace: Trace
    feasible: int
    safe: int
    verdict: Verdict


def execute(plan: Plan, problem: Problem) -> Trace:
    """Run ``plan`` from the problem's initial state, halting at the first failure."""
    state = problem.initial_state
    states = [state]
    events: list[DangerEvent] = []
    for i, st in enumerate(plan.steps, 1):
        if st.status is not StepStatus.RESOLVED:
            code = "unknown_action" if st.status is StepStatus.UNKNOWN_ACTION else "malformed"
            return Trace(tuple(states), tuple(events), (i, FailureReason(code, st.text.strip())))
        op = operator(problem, st.action)
        missing = unsatisfied(op.precondition, state)
        if missing:
            detail = f"{st.action}: unsatisfied " + ", ".join(str(c) for c in missing)
            return Trace(tuple(states), tuple(events), (i, FailureReason("precondition_violated", detail)))
        try:
            state, fired = apply_effects(op, state)
        except NumericOverflow as exc:
            return Trace(tuple(states), tuple(events), (i, FailureReason("numeric_overflow", exc.message)))
        events.extend(DangerEvent(i, r, d, str(st.action)) for r, d in fired)
        states.append(state)
    return Trace(tuple(states), tuple(events), None)


def feasible_on(plan: Plan, problem: Problem) -> bool:
    trace = execute(plan, problem)
    goal = problem.goal if not hasattr(problem, "basic") else problem.basic.goal
    return trace.halt is None and holds(goal, trace.final)


def run_plan(plan: Plan, bundle: TaskBundle) -> RunResult:
    aug = bundle.augmented
    trace = execute(plan, aug)
    if trace.halt is not None:
        idx, reason = trace.halt
        return RunResult(trace, 0, 0, Verdict.infeasible(reason, idx))
    missing = unsatisfied(aug.basic.goal, trace.final)
    if missing:
        reason = FailureReason("goal_unmet", "unsatisfied " + ", ".join(str(c) for c in missing))
        return RunResult(trace, 0, 0, Verdict.infeasible(reason))
    if trace.final.danger <= aug.d_max:
        return RunResult(trace, 1, 1, Verdict(VerdictKind.SAFE, danger_events=trace.danger_events))
    return RunResult(trace, 1, 0, Verdict(VerdictKind.FEASIBLE_UNSAFE, danger_events=trace.danger_events))
