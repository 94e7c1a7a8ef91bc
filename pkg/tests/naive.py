"""A deliberately naive reference interpreter.

Works straight from the basic domain and the danger rules: no compiled
operators, no injected effects, no shared helpers with the executor.
"""

from __future__ import annotations

from safeplan.bundle import TaskBundle
from safeplan.model import ConditionalEffect, Literal, NumericEffect, AddAtom, DeleteAtom
from safeplan.plan import Plan

LO, HI = -(2**63), 2**63 - 1


def _val(fluents, key):
    return fluents.get(key, 0)


def _sub(args, env):
    return tuple(env.get(a, a) for a in args)


def _test(c, env, atoms, fluents) -> bool:
    if isinstance(c, Literal):
        return ((c.predicate, *_sub(c.args, env)) in atoms) == c.positive
    v = _val(fluents, (c.fluent, *_sub(c.args, env)))
    k = c.value
    return {"<": v < k, "<=": v <= k, "=": v == k, ">=": v >= k, ">": v > k}[c.op]


def _all(cond, env, atoms, fluents) -> bool:
    return all(_test(c, env, atoms, fluents) for c in cond.conjuncts)


def naive_run(bundle: TaskBundle, plan: Plan):
    """Returns (verdict, failing step or None, [(step, rule, delta)], final danger)."""
    dom = bundle.basic.domain
    atoms = set(bundle.basic.init.atoms)
    fluents = dict(bundle.basic.init.fluents)
    danger = bundle.d_init
    events = []
    for i, st in enumerate(plan.steps, 1):
        if st.action is None:
            return "infeasible", i, events, danger
        schema = next(s for s in dom.schemas if s.name == st.action.schema)
        env = {v: a for (v, _), a in zip(schema.params, st.action.args)}
        if not _all(schema.precondition, env, atoms, fluents):
            return "infeasible", i, events, danger
        flat = []
        for e in schema.effects:
            if isinstance(e, ConditionalEffect):
                if _all(e.condition, env, atoms, fluents):
                    flat.extend(e.effects)
            else:
                flat.append(e)
        new_atoms = set(atoms)
        for e in flat:
            if isinstance(e, DeleteAtom):
                new_atoms.discard((e.predicate, *_sub(e.args, env)))
        for e in flat:
            if isinstance(e, AddAtom):
                new_atoms.add((e.predicate, *_sub(e.args, env)))
        new_fl = dict(fluents)
        for e in flat:
            if isinstance(e, NumericEffect):
                key = (e.fluent, *_sub(e.args, env))
                cur = _val(new_fl, key)
                nv = {"assign": e.value, "increase": cur + e.value, "decrease": cur - e.value}[e.op]
                if not LO <= nv <= HI:
                    return "infeasible", i, events, danger
                new_fl[key] = nv
        for r_idx, rule in enumerate(bundle.rules):
            if rule.action != schema.name:
                continue
            if any(b is not None and b != a for b, a in zip(rule.binding, st.action.args)):
                continue
            if _all(rule.condition, env, atoms, fluents):
                danger += rule.delta
                events.append((i, r_idx, rule.delta))
        atoms, fluents = new_atoms, new_fl
    if not _all(bundle.basic.goal, {}, atoms, fluents):
        return "infeasible", None, events, danger
    return ("safe" if danger <= bundle.d_max else "feasible_unsafe"), None, events, danger
