"""Symbolic vocabulary of basic and safety-augmented planning problems.

Everything here is an immutable value. Identifiers are stored canonically
(lower case, ``-`` folded to ``_``) so ``MOVE_TO``, ``move-to`` and
``Move_To`` name the same thing.

Atoms and fluent keys are plain tuples ``(name, arg1, arg2, ...)``; that is
what states store and what the planner hashes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    ArityMismatch,
    BindingArityMismatch,
    InvalidDomain,
    ReservedFluentDeclared,
    TypeMismatch,
    UnknownSchema,
    UnknownSchemaInRule,
    UnknownSymbol,
)

DANGER = "danger"
OBJECT = "object"
INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
# |d_init| above this is almost certainly a authoring mistake
D_INIT_BOUND = 10**6
COMPARISON_OPS = ("<", "<=", "=", ">=", ">")
NUMERIC_EFFECT_OPS = ("assign", "increase", "decrease")


def canon(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def is_var(term: str) -> bool:
    return term.startswith("?")


# --------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class TypeDecl:
    name: str
    parent: str | None = OBJECT


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    type: str = OBJECT


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class NumericFluentDecl:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


# --------------------------------------------------------------------------
# conditions and effects


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[str, ...] = ()
    positive: bool = True

    @property
    def atom(self) -> tuple:
        return (self.predicate, *self.args)

    def __str__(self) -> str:
        s = f"{self.predicate}({', '.join(self.args)})"
        return s if self.positive else f"not {s}"


@dataclass(frozen=True)
class NumericComparison:
    fluent: str
    args: tuple[str, ...]
    op: str
    value: int

    @property
    def key(self) -> tuple:
        return (self.fluent, *self.args)

    def __str__(self) -> str:
        return f"{self.fluent}({', '.join(self.args)}) {self.op} {self.value}"


Conjunct = Union[Literal, NumericComparison]


@dataclass(frozen=True)
class Condition:
    conjuncts: tuple[Conjunct, ...] = ()

    def __iter__(self):
        return iter(self.conjuncts)

    def __len__(self) -> int:
        return len(self.conjuncts)

    def __str__(self) -> str:
        return " and ".join(str(c) for c in self.conjuncts) or "true"

    def variables(self) -> set[str]:
        return {a for c in self.conjuncts for a in c.args if is_var(a)}

    def mentions(self, name: str) -> bool:
        return any(
            (c.predicate if isinstance(c, Literal) else c.fluent) == name for c in self.conjuncts
        )


@dataclass(frozen=True)
class AddAtom:
    predicate: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class DeleteAtom:
    predicate: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class NumericEffect:
    op: str
    fluent: str
    args: tuple[str, ...]
    value: int


@dataclass(frozen=True)
class ConditionalEffect:
    """``when condition then effects``.

    ``binding`` and ``rule`` are set only on compiler-injected danger
    effects: the effect fires only for groundings matching ``binding``
    (``None`` entries are wildcards), and ``rule`` indexes the originating
    danger rule.
    """

    condition: Condition
    effects: tuple
    binding: tuple[str | None, ...] | None = None
    rule: int | None = None


Effect = Union[AddAtom, DeleteAtom, NumericEffect, ConditionalEffect]


def _effect_args(eff) -> tuple[str, ...]:
    return eff.args


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: Condition = Condition()
    effects: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.params)

    def signature(self) -> str:
        return f"{self.name.upper()}({', '.join(f'{v} - {t}' for v, t in self.params)})"


@dataclass(frozen=True)
class DangerRule:
    action: str
    binding: tuple[str | None, ...]
    condition: Condition
    delta: int

    def __post_init__(self):
        if self.delta == 0:
            raise InvalidDomain(f"danger rule on {self.action} has zero delta")


@dataclass(frozen=True)
class GroundAction:
    schema: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.schema.upper()}({', '.join(self.args)})"

    @property
    def sort_key(self) -> tuple:
        return (self.schema, self.args)


@dataclass(frozen=True)
class State:
    """Ground world snapshot.

    ``fluents`` is a sorted tuple of ``(key, value)`` pairs so equal states
    hash equally. ``danger`` is ``None`` outside augmented execution.
    """

    atoms: frozenset = frozenset()
    fluents: tuple = ()
    danger: int | None = None

    @classmethod
    def make(cls, atoms: Iterable[tuple] = (), fluents: Mapping | None = None, danger=None) -> "State":
        return cls(frozenset(atoms), tuple(sorted((fluents or {}).items())), danger)

    @cached_property
    def fluent_map(self) -> dict:
        return dict(self.fluents)

    def value(self, key: tuple) -> int:
        if key == (DANGER,):
            if self.danger is None:
                raise InvalidDomain("danger fluent read outside augmented execution")
            return self.danger
        # unassigned numeric fluents read as 0
        return self.fluent_map.get(key, 0)

    def canonical(self) -> tuple:
        return (tuple(sorted(self.atoms)), self.fluents, self.danger)

    def describe(self) -> dict:
        return {
            "atoms": [f"{a[0]}({', '.join(a[1:])})" for a in sorted(self.atoms)],
            "fluents": {f"{k[0]}({', '.join(k[1:])})": v for k, v in self.fluents},
            "danger": self.danger,
        }

    # cached_property needs a writable __dict__; exclude it from eq/hash
    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return (self.atoms, self.fluents, self.danger) == (other.atoms, other.fluents, other.danger)

    def __hash__(self):
        return hash((self.atoms, self.fluents, self.danger))


# --------------------------------------------------------------------------
# domain and problems


@dataclass(frozen=True)
class Domain:
    name: str
    types: tuple[TypeDecl, ...] = ()
    constants: tuple[ObjectDecl, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    functions: tuple[NumericFluentDecl, ...] = ()
    schemas: tuple[ActionSchema, ...] = ()
    requirements: tuple[str, ...] = ()

    def __post_init__(self):
        _validate_domain(self)

    @cached_property
    def type_parent(self) -> dict[str, str | None]:
        parents: dict[str, str | None] = {OBJECT: None}
        for t in self.types:
            if t.name != OBJECT:
                parents[t.name] = t.parent or OBJECT
        return parents

    @cached_property
    def predicate_map(self) -> dict[str, PredicateDecl]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def function_map(self) -> dict[str, NumericFluentDecl]:
        return {f.name: f for f in self.functions}

    @cached_property
    def schema_map(self) -> dict[str, ActionSchema]:
        return {s.name: s for s in self.schemas}

    def is_subtype(self, t: str, ancestor: str) -> bool:
        cur: str | None = t
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self.type_parent.get(cur)
        return False

    def schema(self, name: str) -> ActionSchema:
        try:
            return self.schema_map[canon(name)]
        except KeyError:
            raise UnknownSchema(f"unknown action {name!r}") from None

    def has_injected_effects(self) -> bool:
        return any(
            isinstance(e, ConditionalEffect) and e.rule is not None
            for s in self.schemas
            for e in s.effects
        )


def _check_atom_ref(dom: Domain, name: str, args, where: str, numeric: bool) -> None:
    table = dom.function_map if numeric else dom.predicate_map
    if name == DANGER and numeric:
        return
    decl = table.get(name)
    if decl is None:
        kind = "numeric fluent" if numeric else "predicate"
        raise UnknownSymbol(f"{where}: undeclared {kind} {name!r}")
    if decl.arity != len(args):
        raise ArityMismatch(f"{where}: {name} takes {decl.arity} argument(s), got {len(args)}")


def _check_condition(dom: Domain, cond: Condition, bound: set[str], where: str) -> None:
    for c in cond:
        if isinstance(c, Literal):
            if c.predicate == DANGER:
                raise ReservedFluentDeclared(f"{where}: conditions may not mention {DANGER!r}")
            _check_atom_ref(dom, c.predicate, c.args, where, numeric=False)
        else:
            if c.fluent == DANGER:
                raise ReservedFluentDeclared(f"{where}: conditions may not mention {DANGER!r}")
            if c.op not in COMPARISON_OPS:
                raise InvalidDomain(f"{where}: bad comparison operator {c.op!r}")
            _check_atom_ref(dom, c.fluent, c.args, where, numeric=True)
        free = {a for a in c.args if is_var(a)} - bound
        if free:
            raise InvalidDomain(f"{where}: unbound variable(s) {sorted(free)}")


def _check_effects(dom: Domain, effects, bound: set[str], where: str, nested: bool) -> None:
    for e in effects:
        if isinstance(e, ConditionalEffect):
            if nested:
                raise InvalidDomain(f"{where}: conditional effects nest at most one level")
            if e.rule is None:
                _check_condition(dom, e.condition, bound, where)
            _check_effects(dom, e.effects, bound, where, nested=True)
            if e.rule is None and any(
                isinstance(x, NumericEffect) and x.fluent == DANGER for x in e.effects
            ):
                raise ReservedFluentDeclared(f"{where}: only compiled danger rules may write {DANGER!r}")
            continue
        if isinstance(e, NumericEffect):
            if e.op not in NUMERIC_EFFECT_OPS:
                raise InvalidDomain(f"{where}: bad numeric effect {e.op!r}")
            if e.fluent == DANGER and not nested:
                raise ReservedFluentDeclared(f"{where}: only compiled danger rules may write {DANGER!r}")
            _check_atom_ref(dom, e.fluent, e.args, where, numeric=True)
        elif isinstance(e, (AddAtom, DeleteAtom)):
            if e.predicate == DANGER:
                raise ReservedFluentDeclared(f"{where}: {DANGER!r} is reserved")
            _check_atom_ref(dom, e.predicate, e.args, where, numeric=False)
        else:
            raise InvalidDomain(f"{where}: unknown effect {e!r}")
        free = {a for a in e.args if is_var(a)} - bound
        if free:
            raise InvalidDomain(f"{where}: unbound variable(s) {sorted(free)}")


def _validate_domain(dom: Domain) -> None:
    seen: set[str] = set()
    for t in dom.types:
        if t.name in seen:
            raise InvalidDomain(f"duplicate type {t.name!r}")
        seen.add(t.name)
    parents = dom.type_parent
    for t, p in parents.items():
        if p is not None and p not in parents:
            raise UnknownSymbol(f"type {t!r} has undeclared parent {p!r}")
    for t in parents:
        cur, hops = t, 0
        while cur is not None:
            cur = parents.get(cur)
            hops += 1
            if hops > len(parents) + 1:
                raise InvalidDomain(f"type hierarchy has a cycle through {t!r}")

    for decls, kind in ((dom.predicates, "predicate"), (dom.functions, "function")):
        names = set()
        for d in decls:
            if d.name == DANGER:
                raise ReservedFluentDeclared(f"{DANGER!r} is reserved and may not be declared")
            if d.name in names:
                raise InvalidDomain(f"duplicate {kind} {d.name!r}")
            names.add(d.name)
            for _, ty in d.params:
                if ty not in parents:
                    raise UnknownSymbol(f"{kind} {d.name}: undeclared type {ty!r}")
    if set(dom.predicate_map) & set(dom.function_map):
        raise InvalidDomain("a name is declared as both predicate and function")

    const_names = set()
    for c in dom.constants:
        if c.type not in parents:
            raise UnknownSymbol(f"constant {c.name}: undeclared type {c.type!r}")
        if c.name in const_names:
            raise InvalidDomain(f"duplicate constant {c.name!r}")
        const_names.add(c.name)

    schema_names = set()
    for s in dom.schemas:
        if s.name in schema_names:
            raise InvalidDomain(f"duplicate action {s.name!r}")
        schema_names.add(s.name)
        bound = set()
        for v, ty in s.params:
            if not is_var(v) or v in bound:
                raise InvalidDomain(f"action {s.name}: bad or duplicate parameter {v!r}")
            if ty not in parents:
                raise UnknownSymbol(f"action {s.name}: undeclared type {ty!r}")
            bound.add(v)
        where = f"action {s.name}"
        _check_condition(dom, s.precondition, bound, where)
        _check_effects(dom, s.effects, bound, where, nested=False)


@dataclass(frozen=True)
class BasicProblem:
    name: str
    domain: Domain
    objects: tuple[ObjectDecl, ...] = ()
    init: State = State()
    goal: Condition = Condition()

    def __post_init__(self):
        _validate_problem(self)

    @cached_property
    def object_types(self) -> dict[str, str]:
        out = {c.name: c.type for c in self.domain.constants}
        out.update({o.name: o.type for o in self.objects})
        return out

    @property
    def schemas(self) -> tuple[ActionSchema, ...]:
        return self.domain.schemas

    @property
    def initial_state(self) -> State:
        return self.init

    def schema(self, name: str) -> ActionSchema:
        return self.domain.schema(name)

    @cached_property
    def operator_cache(self) -> dict:
        return {}


def _validate_problem(p: BasicProblem) -> None:
    dom = p.domain
    names = {c.name for c in dom.constants}
    for o in p.objects:
        if o.name in names:
            raise InvalidDomain(f"duplicate object {o.name!r}")
        if o.type not in dom.type_parent:
            raise UnknownSymbol(f"object {o.name}: undeclared type {o.type!r}")
        names.add(o.name)

    def check_ground(name, args, numeric, where):
        _check_atom_ref(dom, name, args, where, numeric)
        decl = (dom.function_map if numeric else dom.predicate_map)[name]
        for a, (_, ty) in zip(args, decl.params):
            if a not in names:
                raise UnknownSymbol(f"{where}: unknown object {a!r}")
            if not dom.is_subtype(p.object_types[a], ty):
                raise TypeMismatch(f"{where}: {a} is not a {ty}")

    for atom in p.init.atoms:
        if atom[0] == DANGER:
            raise ReservedFluentDeclared(f"{DANGER!r} may not appear in the initial state")
        check_ground(atom[0], atom[1:], False, "init")
    for key, _ in p.init.fluents:
        if key[0] == DANGER:
            raise ReservedFluentDeclared(f"{DANGER!r} may not appear in the initial state")
        check_ground(key[0], key[1:], True, "init")
    if p.init.danger is not None:
        raise InvalidDomain("basic problem initial state carries a danger value")
    for c in p.goal:
        if any(is_var(a) for a in c.args):
            raise InvalidDomain(f"goal conjunct {c} is not ground")
        if isinstance(c, NumericComparison):
            if c.fluent == DANGER:
                raise ReservedFluentDeclared(f"basic goal may not mention {DANGER!r}")
            check_ground(c.fluent, c.args, True, "goal")
        else:
            check_ground(c.predicate, c.args, False, "goal")
    # schema constants must be domain constants
    consts = {c.name for c in dom.constants}
    for s in dom.schemas:
        for c in s.precondition:
            for a in c.args:
                if not is_var(a) and a not in consts:
                    raise UnknownSymbol(f"action {s.name}: {a!r} is not a domain constant")


@dataclass(frozen=True)
class AugmentedProblem:
    """A basic problem plus danger rules; built by :func:`compile_augmented`."""

    basic: BasicProblem
    danger_rules: tuple[DangerRule, ...]
    d_init: int
    d_max: int
    domain: Domain = field(compare=False, repr=False)
    goal: Condition = field(compare=False, repr=False)

    @property
    def name(self) -> str:
        return self.basic.name

    @property
    def objects(self) -> tuple[ObjectDecl, ...]:
        return self.basic.objects

    @property
    def object_types(self) -> dict[str, str]:
        return self.basic.object_types

    @property
    def schemas(self) -> tuple[ActionSchema, ...]:
        return self.domain.schemas

    @cached_property
    def initial_state(self) -> State:
        return replace(self.basic.init, danger=self.d_init)

    @property
    def init(self) -> State:
        return self.initial_state

    def schema(self, name: str) -> ActionSchema:
        return self.domain.schema(name)

    @cached_property
    def operator_cache(self) -> dict:
        return {}


Problem = Union[BasicProblem, AugmentedProblem]


# --------------------------------------------------------------------------
# operations


def ground(problem: Problem, schema: ActionSchema | str, args: Sequence[str]) -> GroundAction:
    """Instantiate ``schema`` with object names, checking arity and types."""
    if isinstance(schema, str):
        schema = problem.schema(schema)
    args = tuple(canon(a) for a in args)
    if len(args) != schema.arity:
        raise ArityMismatch(
            f"{schema.name.upper()} takes {schema.arity} argument(s), got {len(args)}"
        )
    dom = problem.domain
    types = problem.object_types
    for a, (var, ty) in zip(args, schema.params):
        if a not in types:
            raise UnknownSymbol(f"{schema.name.upper()}: unknown object {a!r}")
        if not dom.is_subtype(types[a], ty):
            raise TypeMismatch(f"{schema.name.upper()}: {a} ({types[a]}) is not a {ty} for {var}")
    return GroundAction(schema.name, args)


def all_groundings(problem: Problem) -> list[GroundAction]:
    """Every type-correct ground action, sorted by (name, args)."""
    import itertools

    dom = problem.domain
    by_type: dict[str, list[str]] = {}
    for t in dom.type_parent:
        by_type[t] = sorted(o for o, ot in problem.object_types.items() if dom.is_subtype(ot, t))
    out = []
    for s in problem.schemas:
        pools = [by_type[ty] for _, ty in s.params]
        for combo in itertools.product(*pools):
            out.append(GroundAction(s.name, tuple(combo)))
    out.sort(key=lambda g: g.sort_key)
    return out


@dataclass(frozen=True)
class Operator:
    """A ground action with its precondition and effects substituted."""

    action: GroundAction
    precondition: Condition
    effects: tuple


def _subst_args(args, sub):
    return tuple(sub.get(a, a) for a in args)


def _subst_condition(cond: Condition, sub) -> Condition:
    return Condition(tuple(replace(c, args=_subst_args(c.args, sub)) for c in cond))


def _subst_effects(effects, sub, args) -> tuple:
    out = []
    for e in effects:
        if isinstance(e, ConditionalEffect):
            if e.binding is not None and any(b is not None and b != a for b, a in zip(e.binding, args)):
                continue
            out.append(
                ConditionalEffect(
                    _subst_condition(e.condition, sub),
                    _subst_effects(e.effects, sub, args),
                    None,
                    e.rule,
                )
            )
        else:
            out.append(replace(e, args=_subst_args(e.args, sub)))
    return tuple(out)


def operator(problem: Problem, action: GroundAction) -> Operator:
    """Ground operator for ``action``; memoised per problem."""
    cache = problem.operator_cache
    op = cache.get(action)
    if op is None:
        schema = problem.schema(action.schema)
        if len(action.args) != schema.arity:
            raise ArityMismatch(f"{action} does not match {schema.signature()}")
        sub = {v: a for (v, _), a in zip(schema.params, action.args)}
        op = Operator(
            action,
            _subst_condition(schema.precondition, sub),
            _subst_effects(schema.effects, sub, action.args),
        )
        cache[action] = op
    return op


def compile_augmented(
    basic: BasicProblem, rules: Sequence[DangerRule], d_init: int = 0, d_max: int = 0
) -> AugmentedProblem:
    """Inject one guarded ``increase(danger, delta)`` effect per rule and
    extend the goal with ``danger <= d_max``."""
    dom = basic.domain
    if dom.has_injected_effects() or DANGER in dom.predicate_map or DANGER in dom.function_map:
        raise ReservedFluentDeclared(f"basic problem already declares or writes {DANGER!r}")
    if abs(d_init) > D_INIT_BOUND:
        raise InvalidDomain(f"d_init={d_init} outside configured bound {D_INIT_BOUND}")
    rules = tuple(rules)
    extra: dict[str, list[ConditionalEffect]] = {}
    for i, r in enumerate(rules):
        schema = dom.schema_map.get(canon(r.action))
        if schema is None:
            raise UnknownSchemaInRule(f"danger rule {i} names unknown action {r.action!r}")
        if len(r.binding) != schema.arity:
            raise BindingArityMismatch(
                f"danger rule {i}: binding has {len(r.binding)} slot(s), {schema.name} takes {schema.arity}"
            )
        for b, (var, ty) in zip(r.binding, schema.params):
            if b is None:
                continue
            if b not in basic.object_types:
                raise UnknownSymbol(f"danger rule {i}: unknown object {b!r}")
            if not dom.is_subtype(basic.object_types[b], ty):
                raise TypeMismatch(f"danger rule {i}: {b} is not a {ty} for {var}")
        where = f"danger rule {i}"
        _check_condition(dom, r.condition, {v for v, _ in schema.params}, where)
        for c in r.condition:
            for a in c.args:
                if not is_var(a) and a not in basic.object_types:
                    raise UnknownSymbol(f"{where}: unknown object {a!r}")
        extra.setdefault(schema.name, []).append(
            ConditionalEffect(r.condition, (NumericEffect("increase", DANGER, (), r.delta),), r.binding, i)
        )
    schemas = tuple(
        replace(s, effects=s.effects + tuple(extra.get(s.name, ()))) if s.name in extra else s
        for s in dom.schemas
    )
    aug_domain = replace(dom, schemas=schemas)
    goal = Condition(basic.goal.conjuncts + (NumericComparison(DANGER, (), "<=", d_max),))
    return AugmentedProblem(basic, rules, d_init, d_max, aug_domain, goal)
