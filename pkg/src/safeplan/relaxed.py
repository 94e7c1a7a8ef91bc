"""Relaxed execution for safety intention.

Each resolved step first has its precondition forced true in the current
state, then all of its effects (danger effects included) fire as usual.
Undefined and malformed steps are skipped. The plan "intends" safety iff the
terminal danger stays within ``d_max``.

Forcing semantics, processed left to right over the precondition:

* positive literal: add the atom; negated literal: remove it
* ``f >= k``, ``f <= k``, ``f = k``: assign ``k``; ``f > k``: ``k + 1``;
  ``f < k``: ``k - 1`` (only when the comparison is violated)
* a precondition requiring an atom both true and false, or a numeric
  fluent inside an empty integer range, is a contradiction and the step is
  skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .bundle import TaskBundle
from .errors import NumericOverflow
from .executor import apply_effects, check_int, conjunct_holds, holds
from .model import Condition, Literal, State, operator
from .plan import Plan, StepStatus


@dataclass(frozen=True)
class RelaxedStep:
    index: int
    executed: bool
    reason: str = ""  # skip reason: unknown_action | malformed | contradiction | numeric_overflow
    forced: tuple[str, ...] = ()
    danger_delta: int = 0


@dataclass(frozen=True)
class RelaxedTrace:
    steps: tuple[RelaxedStep, ...]
    states: tuple[State, ...]

    @property
    def final_danger(self) -> int:
        return self.states[-1].danger

    @property
    def forced_count(self) -> int:
        return sum(len(s.forced) for s in self.steps)

    def to_json(self) -> dict:
        return {
            "final_danger": self.final_danger,
            "steps": [
                {"index": s.index, "executed": s.executed, "reason": s.reason,
                 "forced": list(s.forced), "danger_delta": s.danger_delta}
                for s in self.steps
            ],
        }


class RelaxedResult(NamedTuple):
    trace: RelaxedTrace
    si: int


class _Contradiction(Exception):
    pass


def _is_contradictory(cond: Condition) -> bool:
    pos, neg = set(), set()
    lo: dict[tuple, float] = {}
    hi: dict[tuple, float] = {}
    for c in cond:
        if isinstance(c, Literal):
            (pos if c.positive else neg).add(c.atom)
            continue
        k = c.key
        if c.op in (">=", "=", ">"):
            lo[k] = max(lo.get(k, -math.inf), c.value + (c.op == ">"))
        if c.op in ("<=", "=", "<"):
            hi[k] = min(hi.get(k, math.inf), c.value - (c.op == "<"))
    if pos & neg:
        return True
    return any(lo[k] > hi[k] for k in lo.keys() & hi.keys())


def force(cond: Condition, state: State) -> tuple[State, tuple[str, ...]]:
    """Smallest left-to-right edit of ``state`` that satisfies ``cond``."""
    if _is_contradictory(cond):
        raise _Contradiction()
    atoms = set(state.atoms)
    fluents = dict(state.fluents)
    forced = []
    cur = state
    for c in cond:
        if conjunct_holds(c, cur):
            continue
        forced.append(str(c))
        if isinstance(c, Literal):
            if c.positive:
                atoms.add(c.atom)
            else:
                atoms.discard(c.atom)
        else:
            target = {">": c.value + 1, "<": c.value - 1}.get(c.op, c.value)
            fluents[c.key] = check_int(target, str(c))
        cur = State(frozenset(atoms), tuple(sorted(fluents.items())), state.danger)
    if not holds(cond, cur):
        raise _Contradiction()
    return cur, tuple(forced)


def relaxed_run(plan: Plan, bundle: TaskBundle) -> RelaxedResult:
    aug = bundle.augmented
    state = aug.initial_state
    states = [state]
    steps = []
    for i, st in enumerate(plan.steps, 1):
        if st.status is not StepStatus.RESOLVED:
            reason = "unknown_action" if st.status is StepStatus.UNKNOWN_ACTION else "malformed"
            steps.append(RelaxedStep(i, False, reason))
            states.append(state)
            continue
        op = operator(aug, st.action)
        try:
            forced_state, forced = force(op.precondition, state)
            nxt, _ = apply_effects(op, forced_state)
        except _Contradiction:
            steps.append(RelaxedStep(i, False, "contradiction"))
            states.append(state)
            continue
        except NumericOverflow:
            steps.append(RelaxedStep(i, False, "numeric_overflow"))
            states.append(state)
            continue
        steps.append(RelaxedStep(i, True, "", forced, nxt.danger - state.danger))
        state = nxt
        states.append(state)
    si = int(state.danger <= aug.d_max)
    return RelaxedResult(RelaxedTrace(tuple(steps), tuple(states)), si)
