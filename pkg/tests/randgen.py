"""Random small planning instances for property tests.

Instances stay small (at most 6 objects, 5 schemas) so that thousands can be
built and executed in a few seconds.
"""

from __future__ import annotations

import random

from safeplan.bundle import TaskBundle
from safeplan.executor import apply_effects, holds
from safeplan.model import (
    ActionSchema,
    AddAtom,
    BasicProblem,
    Condition,
    ConditionalEffect,
    DangerRule,
    DeleteAtom,
    Domain,
    GroundAction,
    Literal,
    NumericComparison,
    NumericEffect,
    NumericFluentDecl,
    ObjectDecl,
    PredicateDecl,
    State,
    TypeDecl,
    all_groundings,
    operator,
)
from safeplan.plan import Plan, PlanStep, StepStatus

OPS = ("<", "<=", "=", ">=", ">")


def _pick_args(rnd, params, pool):
    """Arguments for an atom over ``params``: variables of matching type, else None."""
    out = []
    for _, ty in params:
        cands = [v for v, t in pool if t == ty]
        if not cands:
            return None
        out.append(rnd.choice(cands))
    return tuple(out)


def _condition(rnd, preds, funcs, pool, n_max=2):
    conj = []
    for _ in range(rnd.randint(0, n_max)):
        if funcs and rnd.random() < 0.3:
            f = rnd.choice(funcs)
            args = _pick_args(rnd, f.params, pool)
            if args is not None:
                conj.append(NumericComparison(f.name, args, rnd.choice(OPS), rnd.randint(0, 3)))
        else:
            p = rnd.choice(preds)
            args = _pick_args(rnd, p.params, pool)
            if args is not None:
                conj.append(Literal(p.name, args, rnd.random() < 0.6))
    return Condition(tuple(conj))


def _effects(rnd, preds, funcs, pool, allow_cond=True):
    effs = []
    for _ in range(rnd.randint(1, 3)):
        r = rnd.random()
        if allow_cond and r < 0.2:
            inner = _effects(rnd, preds, funcs, pool, allow_cond=False)
            effs.append(ConditionalEffect(_condition(rnd, preds, funcs, pool, 1), tuple(inner)))
        elif funcs and r < 0.4:
            f = rnd.choice(funcs)
            args = _pick_args(rnd, f.params, pool)
            if args is not None:
                op = rnd.choice(("assign", "increase", "decrease"))
                effs.append(NumericEffect(op, f.name, args, rnd.randint(0, 2)))
        else:
            p = rnd.choice(preds)
            args = _pick_args(rnd, p.params, pool)
            if args is not None:
                effs.append((AddAtom if rnd.random() < 0.6 else DeleteAtom)(p.name, args))
    return effs


def random_bundle(seed: int) -> TaskBundle:
    """A random valid bundle; the goal is derived later from a random walk."""
    rnd = random.Random(seed)
    types = ["t0", "t1"][: rnd.randint(1, 2)]
    objects = tuple(ObjectDecl(f"o{i}", rnd.choice(types)) for i in range(rnd.randint(1, 6)))
    present = sorted({o.type for o in objects})
    preds = []
    for i in range(rnd.randint(2, 4)):
        ar = rnd.randint(0, 2)
        preds.append(PredicateDecl(f"p{i}", tuple((f"?a{j}", rnd.choice(present)) for j in range(ar))))
    funcs = []
    if rnd.random() < 0.5:
        ar = rnd.randint(0, 1)
        funcs.append(NumericFluentDecl("f0", tuple((f"?a{j}", rnd.choice(present)) for j in range(ar))))
    schemas = []
    for i in range(rnd.randint(1, 5)):
        params = tuple((f"?x{j}", rnd.choice(present)) for j in range(rnd.randint(0, 2)))
        pool = list(params)
        pre = _condition(rnd, preds, funcs, pool)
        schemas.append(ActionSchema(f"act{i}", params, pre, tuple(_effects(rnd, preds, funcs, pool))))
    dom = Domain("rand", tuple(TypeDecl(t) for t in types), (), tuple(preds), tuple(funcs), tuple(schemas))

    atoms = set()
    tmp = BasicProblem("rand_p", dom, objects)
    for p in preds:
        for o_args in _all_args(tmp, p.params):
            if rnd.random() < 0.35:
                atoms.add((p.name, *o_args))
    fluents = {}
    for f in funcs:
        for o_args in _all_args(tmp, f.params):
            if rnd.random() < 0.8:
                fluents[(f.name, *o_args)] = rnd.randint(0, 3)
    init = State.make(atoms, fluents)
    basic = BasicProblem("rand_p", dom, objects, init, Condition())

    rules = []
    for _ in range(rnd.randint(0, 3)):
        s = rnd.choice(schemas)
        binding = tuple(
            None if rnd.random() < 0.6 else rnd.choice([o.name for o in objects if o.type == ty])
            for _, ty in s.params
        )
        cond = _condition(rnd, preds, funcs, list(s.params))
        rules.append(DangerRule(s.name, binding, cond, rnd.choice((-1, 1, 1, 2))))
    d_init = rnd.choice((0, 0, 0, 1))
    d_max = rnd.choice((0, 0, 1, 2))
    return TaskBundle.from_parts(f"rand{seed}", basic, rules, d_init, d_max)


def _all_args(problem, params):
    from itertools import product

    pools = [[o.name for o in problem.objects if problem.domain.is_subtype(o.type, ty)] for _, ty in params]
    return list(product(*pools))


def with_goal(bundle: TaskBundle, goal: Condition) -> TaskBundle:
    from dataclasses import replace

    basic = replace(bundle.basic, goal=goal)
    return TaskBundle.from_parts(bundle.task_id, basic, bundle.rules, bundle.d_init, bundle.d_max)


def random_walk(bundle: TaskBundle, rnd: random.Random, max_len: int = 8) -> list[GroundAction]:
    """Applicable actions chosen at random, executed on the basic problem."""
    prob = bundle.basic
    acts = all_groundings(prob)
    state = prob.initial_state
    out = []
    for _ in range(rnd.randint(0, max_len)):
        ok = [a for a in acts if holds(operator(prob, a).precondition, state)]
        if not ok:
            break
        a = rnd.choice(ok)
        state, _ = apply_effects(operator(prob, a), state)
        out.append(a)
    return out


def goal_from(bundle: TaskBundle, actions, rnd: random.Random) -> Condition:
    """A goal that holds after ``actions``: a sample of the final state's facts."""
    state = bundle.basic.initial_state
    for a in actions:
        state, _ = apply_effects(operator(bundle.basic, a), state)
    conj = []
    for atom in sorted(state.atoms):
        if rnd.random() < 0.5:
            conj.append(Literal(atom[0], atom[1:], True))
    for key, v in state.fluents:
        if rnd.random() < 0.3:
            conj.append(NumericComparison(key[0], key[1:], ">=", v))
    return Condition(tuple(conj[:4]))


def random_plan(bundle: TaskBundle, rnd: random.Random, max_len: int = 8) -> Plan:
    """Arbitrary steps: mostly resolved actions, some unknown or malformed."""
    acts = all_groundings(bundle.basic)
    steps = []
    for i in range(1, rnd.randint(0, max_len) + 1):
        r = rnd.random()
        if r < 0.08 or not acts:
            steps.append(PlanStep(i, "FLY(away)", StepStatus.UNKNOWN_ACTION))
        elif r < 0.12:
            steps.append(PlanStep(i, "act0(", StepStatus.MALFORMED))
        else:
            a = rnd.choice(acts)
            steps.append(PlanStep(i, str(a), StepStatus.RESOLVED, a))
    return Plan(tuple(steps))


def instance(seed: int, feasible: bool | None = None) -> tuple[TaskBundle, Plan]:
    """A (bundle, plan) pair. ``feasible=True`` builds the goal from the plan's
    own random walk; otherwise the plan is arbitrary."""
    rnd = random.Random(seed * 7919 + 1)
    b = random_bundle(seed)
    walk = random_walk(b, rnd)
    b = with_goal(b, goal_from(b, walk, rnd))
    if feasible:
        return b, Plan.of(walk)
    if feasible is None and rnd.random() < 0.5:
        return b, Plan.of(walk)
    return b, random_plan(b, rnd)


def _final(bundle, actions):
    state = bundle.basic.initial_state
    for a in actions:
        state, _ = apply_effects(operator(bundle.basic, a), state)
    return state


def feasible_batch(seed: int, k: int = 5) -> tuple[TaskBundle, list[Plan]]:
    """One bundle and ``k`` walks that all reach its goal (built from facts
    common to every walk's final state)."""
    rnd = random.Random(seed * 104729 + 3)
    b = random_bundle(seed)
    walks = [random_walk(b, rnd) for _ in range(k)]
    finals = [_final(b, w) for w in walks]
    common = set.intersection(*(set(s.atoms) for s in finals))
    conj = [Literal(a[0], a[1:], True) for a in sorted(common) if rnd.random() < 0.6]
    for key, _ in finals[0].fluents:
        lo = min(s.value(key) for s in finals)
        if rnd.random() < 0.3:
            conj.append(NumericComparison(key[0], key[1:], ">=", lo))
    b = with_goal(b, Condition(tuple(conj[:4])))
    return b, [Plan.of(w) for w in walks]


def mixed_batch(seed: int, k: int = 6) -> tuple[TaskBundle, list[Plan]]:
    """One bundle with a walk-derived goal, then ``k`` plans: walks
    (feasible or not against that goal) and arbitrary step sequences."""
    rnd = random.Random(seed * 15485863 + 5)
    b, first = instance(seed, feasible=True)
    plans = [first]
    while len(plans) < k:
        plans.append(Plan.of(random_walk(b, rnd)) if rnd.random() < 0.5 else random_plan(b, rnd))
    return b, plans
