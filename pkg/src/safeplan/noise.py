"""Distractor-action injection.

Each distractor ``noise_act_i`` toggles a fresh predicate over objects of a
fresh type. Nothing it reads or writes belongs to the original vocabulary,
so no goal atom or danger condition can be affected; :func:`check_disjoint`
verifies that after the fact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .bundle import TaskBundle
from .errors import VocabularyCollision
from .model import (
    ActionSchema,
    AddAtom,
    Condition,
    ConditionalEffect,
    DeleteAtom,
    Literal,
    ObjectDecl,
    PredicateDecl,
    TypeDecl,
    compile_augmented,
)

LEVELS = (2, 4, 8, 16, 32, 64)
PREFIX = "noise_act_"


@dataclass(frozen=True)
class NoiseLevel:
    count: int
    seed: int = 0
    allow_any: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if not self.allow_any and self.count not in LEVELS:
            raise ValueError(f"count must be one of {LEVELS} unless allow_any is set")


def vocabulary(bundle: TaskBundle) -> set[str]:
    """Every name the original bundle declares or mentions."""
    dom = bundle.basic.domain
    names = {t.name for t in dom.types} | {"object"}
    names |= {c.name for c in dom.constants} | {o.name for o in bundle.basic.objects}
    names |= {p.name for p in dom.predicates} | {f.name for f in dom.functions}
    names |= {s.name for s in dom.schemas}
    return names


def _fresh(base: str, taken: set[str]) -> str:
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    taken.add(name)
    return name


def _protected(bundle: TaskBundle) -> set[str]:
    """Names the goal and the danger rules depend on."""
    out = set()
    for c in bundle.basic.goal:
        out.add(getattr(c, "predicate", None) or c.fluent)
        out.update(c.args)
    for r in bundle.rules:
        out.add(r.action)
        out.update(b for b in r.binding if b is not None)
        for c in r.condition:
            out.add(getattr(c, "predicate", None) or c.fluent)
            out.update(a for a in c.args if not a.startswith("?"))
    return out


def check_disjoint(original: TaskBundle, injected: TaskBundle) -> None:
    """Raise VocabularyCollision if any added name overlaps the original
    vocabulary, the goal, or a danger condition."""
    added = vocabulary(injected) - vocabulary(original)
    new_schemas = [s for s in injected.basic.domain.schemas
                   if s.name not in original.basic.domain.schema_map]
    touched = set()
    for s in new_schemas:
        touched.add(s.name)
        touched.update(ty for _, ty in s.params)
        for c in s.precondition:
            touched.add(c.predicate if isinstance(c, Literal) else c.fluent)
        for e in s.effects:
            for x in (e.effects if isinstance(e, ConditionalEffect) else (e,)):
                touched.add(getattr(x, "predicate", None) or x.fluent)
            if isinstance(e, ConditionalEffect):
                touched.update(getattr(c, "predicate", None) or c.fluent for c in e.condition)
    clash = (touched - added) | (touched & _protected(original)) | (added & vocabulary(original))
    if clash:
        raise VocabularyCollision(f"distractors touch existing names: {sorted(clash)}")


def inject(bundle: TaskBundle, level: NoiseLevel) -> TaskBundle:
    """Return a copy of ``bundle`` with ``level.count`` distractor schemas.

    The seed picks each distractor's arity (1 or 2), the number of dummy
    objects, and where the distractors sit in the schema list.
    """
    if level.count == 0:
        return bundle
    rnd = random.Random(f"{level.seed}:{level.count}:{bundle.task_id}")
    basic = bundle.basic
    dom = basic.domain
    taken = vocabulary(bundle)
    ty = _fresh("noise_thing", taken)
    n_obj = rnd.randint(2, 3)
    objects = tuple(ObjectDecl(_fresh(f"noise_obj_{i}", taken), ty) for i in range(n_obj))
    preds, schemas = [], []
    for i in range(level.count):
        arity = rnd.choice((1, 2))
        params = tuple((f"?x{j}", ty) for j in range(arity))
        vars_ = tuple(v for v, _ in params)
        pred = PredicateDecl(_fresh(f"noise_flag_{i}", taken), params)
        on = Condition((Literal(pred.name, vars_, True),))
        off = Condition((Literal(pred.name, vars_, False),))
        schemas.append(ActionSchema(
            _fresh(f"{PREFIX}{i}", taken),
            params,
            Condition(),
            (ConditionalEffect(on, (DeleteAtom(pred.name, vars_),)),
             ConditionalEffect(off, (AddAtom(pred.name, vars_),))),
        ))
        preds.append(pred)
    pos = rnd.randint(0, len(dom.schemas))
    new_dom = replace(
        dom,
        types=dom.types + (TypeDecl(ty),),
        predicates=dom.predicates + tuple(preds),
        schemas=dom.schemas[:pos] + tuple(schemas) + dom.schemas[pos:],
    )
    new_basic = replace(basic, domain=new_dom, objects=basic.objects + objects)
    aug = compile_augmented(new_basic, bundle.rules, bundle.d_init, bundle.d_max)
    out = replace(bundle, basic=new_basic, augmented=aug)
    check_disjoint(bundle, out)
    return out
