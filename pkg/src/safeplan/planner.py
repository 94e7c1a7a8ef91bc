"""Breadth-first reference planner.

Returns minimum-length plans, ties broken by the lexicographic order of
``(action name, args)`` sequences. Before searching, ground actions that can
never matter are dropped: an action is kept only if it writes something
the goal reads, or something a kept action reads. Removing a dropped action
from any plan leaves every kept action and the goal unaffected, so
shortest plans never contain one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .bundle import TaskBundle
from .errors import LimitExceeded, NumericOverflow, Unsolvable
from .executor import VerdictKind, apply_effects, holds, run_plan
from .model import (
    DANGER,
    AddAtom,
    ConditionalEffect,
    DeleteAtom,
    Literal,
    NumericEffect,
    Operator,
    Problem,
    State,
    all_groundings,
    operator,
)
from .plan import Plan

MODES = ("basic", "augmented", "unsafe")


@dataclass(frozen=True)
class SearchLimits:
    max_expanded_nodes: int = 1_000_000
    max_depth: int = 50

    def __post_init__(self):
        if self.max_expanded_nodes <= 0 or self.max_depth <= 0:
            raise ValueError("search limits must be positive")


def _key(c) -> tuple:
    return c.atom if isinstance(c, Literal) else c.key


def _reads(op: Operator) -> set:
    out = {_key(c) for c in op.precondition}
    for e in op.effects:
        if isinstance(e, ConditionalEffect):
            out.update(_key(c) for c in e.condition)
    return out


def _writes(op: Operator) -> set:
    out = set()
    for e in op.effects:
        for x in (e.effects if isinstance(e, ConditionalEffect) else (e,)):
            if isinstance(x, (AddAtom, DeleteAtom)):
                out.add((x.predicate, *x.args))
            elif isinstance(x, NumericEffect):
                out.add((x.fluent, *x.args))
    return out


def relevant_operators(problem: Problem, goal_keys: set) -> list[Operator]:
    ops = [operator(problem, g) for g in all_groundings(problem)]
    writes = [_writes(op) for op in ops]
    keep = [False] * len(ops)
    relevant = set(goal_keys)
    changed = True
    while changed:
        changed = False
        for i, op in enumerate(ops):
            if not keep[i] and writes[i] & relevant:
                keep[i] = True
                relevant |= _reads(op)
                changed = True
    return [op for op, k in zip(ops, keep) if k]


def _search(bundle: TaskBundle, mode: str, limits: SearchLimits) -> list:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    aug = bundle.augmented
    problem = bundle.basic if mode == "basic" else aug
    goal = aug.basic.goal
    d_max = aug.d_max
    goal_keys = {_key(c) for c in goal}
    if mode != "basic":
        goal_keys.add((DANGER,))
    ops = relevant_operators(problem, goal_keys)
    monotone = all(r.delta >= 0 for r in aug.danger_rules)

    if mode == "basic":
        def is_goal(s: State) -> bool:
            return holds(goal, s)
    elif mode == "augmented":
        def is_goal(s: State) -> bool:
            return s.danger <= d_max and holds(goal, s)
    else:
        def is_goal(s: State) -> bool:
            return s.danger > d_max and holds(goal, s)

    def normalise(s: State) -> State | None:
        if mode == "basic" or not monotone or s.danger <= d_max:
            return s
        if mode == "augmented":
            return None  # danger can never come back down
        return State(s.atoms, s.fluents, d_max + 1) if s.danger > d_max + 1 else s

    start = normalise(problem.initial_state)
    if start is None:
        raise Unsolvable(f"{bundle.task_id}: initial danger already exceeds d_max")
    parent: dict[State, tuple[State, object] | None] = {start: None}
    depth = {start: 0}
    queue = deque([start])
    expanded = 0
    depth_cut = False
    while queue:
        s = queue.popleft()
        if is_goal(s):
            path = []
            while parent[s] is not None:
                s, a = parent[s]
                path.append(a)
            return path[::-1]
        if depth[s] >= limits.max_depth:
            depth_cut = True
            continue
        expanded += 1
        if expanded > limits.max_expanded_nodes:
            raise LimitExceeded(f"{bundle.task_id}: expanded more than {limits.max_expanded_nodes} nodes", "nodes")
        for op in ops:
            if not holds(op.precondition, s):
                continue
            try:
                t, _ = apply_effects(op, s)
            except NumericOverflow:
                continue
            t = normalise(t)
            if t is None or t in parent:
                continue
            parent[t] = (s, op.action)
            depth[t] = depth[s] + 1
            queue.append(t)
    if depth_cut:
        raise LimitExceeded(f"{bundle.task_id}: no plan within depth {limits.max_depth}", "depth")
    raise Unsolvable(f"{bundle.task_id}: no {mode} plan exists")


_EXPECTED = {
    "basic": (VerdictKind.SAFE, VerdictKind.FEASIBLE_UNSAFE),
    "augmented": (VerdictKind.SAFE,),
    "unsafe": (VerdictKind.FEASIBLE_UNSAFE,),
}


def solve(bundle: TaskBundle, mode: str = "augmented", limits: SearchLimits | None = None) -> Plan:
    """Shortest plan reaching the goal (``basic``), the goal within the danger
    threshold (``augmented``), or the goal beyond it (``unsafe``)."""
    plan = Plan.of(_search(bundle, mode, limits or SearchLimits()))
    verdict = run_plan(plan, bundle).verdict
    if verdict.kind not in _EXPECTED[mode]:
        raise AssertionError(f"{bundle.task_id}: {mode} plan re-validated as {verdict}")
    return plan


@dataclass(frozen=True)
class ReferencePair:
    feasible_plan: Plan
    safe_plan: Plan
    unsafe_plan: Plan | None
    safety_effort: int


def reference_pair(bundle: TaskBundle, limits: SearchLimits | None = None) -> ReferencePair:
    """Reference plans and safety effort.

    Safety effort compares the shortest safe plan to the shortest feasible
    plan that is unsafe; when no unsafe plan exists it falls back to the
    shortest feasible plan (giving 0).
    """
    limits = limits or SearchLimits()
    feasible = solve(bundle, "basic", limits)
    safe = solve(bundle, "augmented", limits)
    try:
        unsafe = solve(bundle, "unsafe", limits)
    except Unsolvable:
        unsafe = None
    baseline = unsafe if unsafe is not None else feasible
    return ReferencePair(feasible, safe, unsafe, len(safe) - len(baseline))
