"""Reader and writer for the supported PDDL subset.

Supported: typed STRIPS, negative preconditions, one level of ``when``
conditional effects, integer numeric fluents with assign/increase/decrease
and comparisons against integer constants. Disjunction, quantifiers,
implication, object equality, derived predicates and durative actions are
rejected with :class:`UnsupportedConstruct`.
"""

from __future__ import annotations

import re

from .errors import (
    PddlSyntaxError,
    ReservedFluentDeclared,
    SafePlanError,
    SourceSpan,
    UnknownSymbol,
    UnsupportedConstruct,
)
from .model import (
    DANGER,
    OBJECT,
    ActionSchema,
    AddAtom,
    BasicProblem,
    Condition,
    ConditionalEffect,
    DeleteAtom,
    Domain,
    Literal,
    NumericComparison,
    NumericEffect,
    NumericFluentDecl,
    ObjectDecl,
    PredicateDecl,
    State,
    TypeDecl,
    canon,
    is_var,
)

UNSUPPORTED_HEADS = {"or", "exists", "forall", "imply", "either", "scale_up", "scale_down"}
UNSUPPORTED_SECTIONS = {":derived", ":durative_action", ":constraints", ":process", ":event"}
UNSUPPORTED_REQUIREMENTS = {
    ":disjunctive_preconditions", ":existential_preconditions", ":universal_preconditions",
    ":quantified_preconditions", ":durative_actions", ":derived_predicates",
    ":timed_initial_literals", ":probabilistic_effects", ":preferences", ":constraints",
}
_FLIP = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}
_NEGATE = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}
_INT = re.compile(r"^[+-]?\d+$")


# --------------------------------------------------------------------------
# s-expressions


class Sym(str):
    span: SourceSpan


class SList(list):
    span: SourceSpan


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def parse_sexprs(text: str, file: str = "<string>") -> list:
    """Parse all top-level s-expressions; atoms become :class:`Sym`."""
    stack: list[SList] = []
    top: list = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group()
        col = m.start() - line_start + 1
        span = SourceSpan(file, line, col, col + len(tok))
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        if tok == "(":
            node = SList()
            node.span = span
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise PddlSyntaxError("unbalanced ')'", span)
            node = stack.pop()
            (stack[-1] if stack else top).append(node)
        else:
            sym = Sym(tok)
            sym.span = span
            if not stack:
                raise PddlSyntaxError(f"stray token {tok!r} outside any expression", span)
            stack[-1].append(sym)
    if stack:
        raise PddlSyntaxError("unclosed '('", stack[-1].span)
    return top


def _span(node) -> SourceSpan | None:
    return getattr(node, "span", None)


def _head(node) -> str | None:
    if isinstance(node, SList) and node and isinstance(node[0], Sym):
        return canon(node[0])
    return None


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PddlSyntaxError(f"expected {what}", _span(node))
    return node


def _expect_sym(node, what: str) -> Sym:
    if not isinstance(node, Sym):
        raise PddlSyntaxError(f"expected {what}", _span(node))
    return node


def _typed_list(items, what: str) -> list[tuple[str, str, SourceSpan]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out, pending = [], []
    i = 0
    while i < len(items):
        it = items[i]
        if isinstance(it, Sym) and it == "-":
            if i + 1 >= len(items):
                raise PddlSyntaxError(f"dangling '-' in {what}", it.span)
            ty = items[i + 1]
            if isinstance(ty, SList):
                if _head(ty) == "either":
                    raise UnsupportedConstruct("'either' types are not supported", ty.span)
                raise PddlSyntaxError(f"expected a type name in {what}", ty.span)
            if not pending:
                raise PddlSyntaxError(f"'-' without names in {what}", it.span)
            out.extend((canon(n), canon(ty), n.span) for n in pending)
            pending = []
            i += 2
            continue
        pending.append(_expect_sym(it, f"a name in {what}"))
        i += 1
    out.extend((canon(n), OBJECT, n.span) for n in pending)
    return out


def _int(node, what: str) -> int:
    if isinstance(node, Sym) and _INT.match(node):
        return int(node)
    if isinstance(node, Sym):
        try:
            f = float(node)
        except ValueError:
            raise PddlSyntaxError(f"expected an integer for {what}", node.span) from None
        raise UnsupportedConstruct(f"non-integer value {f} for {what}; fluents are integers", node.span)
    raise UnsupportedConstruct(f"{what} must be an integer constant", _span(node))


# --------------------------------------------------------------------------
# conditions and effects


class _Scope:
    """Symbol tables for resolving names while parsing a domain or problem."""

    def __init__(self, predicates, functions, variables=None, objects=None, ground_only=False):
        self.predicates = predicates
        self.functions = functions
        self.variables = variables or {}
        self.objects = objects or {}
        self.ground_only = ground_only

    def term(self, node) -> str:
        sym = _expect_sym(node, "a variable or object")
        name = canon(sym)
        if is_var(name):
            if self.ground_only:
                raise PddlSyntaxError(f"variable {sym} where a ground term is required", sym.span)
            if name not in self.variables:
                raise UnknownSymbol(f"unbound variable {sym}", sym.span)
        elif name not in self.objects:
            raise UnknownSymbol(f"unknown object {sym}", sym.span)
        return name

    def atom(self, node, numeric: bool) -> tuple[str, tuple[str, ...]]:
        lst = _expect_list(node, "an atom")
        if not lst:
            raise PddlSyntaxError("empty atom", lst.span)
        name = canon(_expect_sym(lst[0], "a predicate name"))
        table = self.functions if numeric else self.predicates
        if name == DANGER:
            raise ReservedFluentDeclared(f"{DANGER!r} is reserved", lst[0].span)
        if name not in table:
            other = self.predicates if numeric else self.functions
            kind = "numeric fluent" if numeric else "predicate"
            hint = " (declared as the other kind)" if name in other else ""
            raise UnknownSymbol(f"undeclared {kind} {lst[0]}{hint}", lst[0].span)
        args = tuple(self.term(a) for a in lst[1:])
        if len(args) != table[name]:
            raise PddlSyntaxError(
                f"{name} takes {table[name]} argument(s), got {len(args)}", lst.span)
        return name, args


def parse_condition(node, scope: _Scope) -> Condition:
    out: list = []
    _condition_into(node, scope, out)
    return Condition(tuple(out))


def _condition_into(node, scope: _Scope, out: list) -> None:
    lst = _expect_list(node, "a condition")
    if not lst:
        return
    head = _head(lst)
    if head == "and":
        for sub in lst[1:]:
            _condition_into(sub, scope, out)
    elif head in UNSUPPORTED_HEADS or head in ("when",):
        raise UnsupportedConstruct(f"'{lst[0]}' is not supported in conditions (conjunctions only)", lst.span)
    elif head == "not":
        if len(lst) != 2:
            raise PddlSyntaxError("'not' takes exactly one argument", lst.span)
        inner = _expect_list(lst[1], "a negated atom")
        ih = _head(inner)
        if ih in _NEGATE:
            cmp = _comparison(inner, scope)
            out.append(NumericComparison(cmp.fluent, cmp.args, _NEGATE[cmp.op], cmp.value))
        elif ih == "=":
            raise UnsupportedConstruct("negated equality is not supported", inner.span)
        elif ih in UNSUPPORTED_HEADS or ih in ("and", "not"):
            raise UnsupportedConstruct(f"'not' over '{inner[0]}' is not supported", inner.span)
        else:
            name, args = scope.atom(inner, numeric=False)
            out.append(Literal(name, args, False))
    elif head in _FLIP:
        out.append(_comparison(lst, scope))
    else:
        name, args = scope.atom(lst, numeric=False)
        out.append(Literal(name, args, True))


def _comparison(lst: SList, scope: _Scope) -> NumericComparison:
    if len(lst) != 3:
        raise PddlSyntaxError(f"'{lst[0]}' takes two arguments", lst.span)
    op = str(lst[0])
    left, right = lst[1], lst[2]
    if isinstance(left, Sym) and isinstance(right, SList):
        left, right, op = right, left, _FLIP[op]
    if isinstance(left, Sym) and isinstance(right, Sym):
        if op == "=" and not _INT.match(left):
            raise UnsupportedConstruct("object equality is not supported", lst.span)
        raise UnsupportedConstruct("comparison must relate a numeric fluent to a constant", lst.span)
    if isinstance(right, SList):
        raise UnsupportedConstruct("comparisons between two fluents are not supported", lst.span)
    name, args = scope.atom(left, numeric=True)
    return NumericComparison(name, args, op, _int(right, f"comparison on {name}"))


def parse_effects(node, scope: _Scope, nested: bool = False) -> tuple:
    out: list = []
    _effects_into(node, scope, out, nested)
    return tuple(out)


def _effects_into(node, scope: _Scope, out: list, nested: bool) -> None:
    lst = _expect_list(node, "an effect")
    if not lst:
        return
    head = _head(lst)
    if head == "and":
        for sub in lst[1:]:
            _effects_into(sub, scope, out, nested)
    elif head == "when":
        if nested:
            raise UnsupportedConstruct("conditional effects nest at most one level", lst.span)
        if len(lst) != 3:
            raise PddlSyntaxError("'when' takes a condition and an effect", lst.span)
        out.append(ConditionalEffect(parse_condition(lst[1], scope), parse_effects(lst[2], scope, True)))
    elif head in UNSUPPORTED_HEADS:
        raise UnsupportedConstruct(f"'{lst[0]}' is not supported in effects", lst.span)
    elif head == "not":
        if len(lst) != 2:
            raise PddlSyntaxError("'not' takes exactly one argument", lst.span)
        name, args = scope.atom(lst[1], numeric=False)
        out.append(DeleteAtom(name, args))
    elif head in ("assign", "increase", "decrease"):
        if len(lst) != 3:
            raise PddlSyntaxError(f"'{lst[0]}' takes a fluent and a value", lst.span)
        name, args = scope.atom(lst[1], numeric=True)
        out.append(NumericEffect(head, name, args, _int(lst[2], f"{head} of {name}")))
    else:
        name, args = scope.atom(lst, numeric=False)
        out.append(AddAtom(name, args))


# --------------------------------------------------------------------------
# domain and problem


def _define(text: str, file: str, kind: str) -> tuple[str, list]:
    exprs = parse_sexprs(text, file)
    if len(exprs) != 1 or _head(exprs[0]) != "define":
        raise PddlSyntaxError(f"expected a single (define ({kind} ...)) form",
                              _span(exprs[0]) if exprs else SourceSpan(file, 1, 1, 1))
    root = exprs[0]
    if len(root) < 2 or _head(root[1]) != kind or len(root[1]) != 2:
        raise PddlSyntaxError(f"expected ({kind} NAME)", _span(root[1]) if len(root) > 1 else root.span)
    return canon(root[1][1]), root[2:]


def _with_span(exc: SafePlanError, span) -> SafePlanError:
    if exc.span is None:
        exc.span = span
    return exc


def parse_domain(text: str, file: str = "domain.pddl") -> Domain:
    name, sections = _define(text, file, "domain")
    types: list[TypeDecl] = []
    constants: list[ObjectDecl] = []
    predicates: list[PredicateDecl] = []
    functions: list[NumericFluentDecl] = []
    requirements: list[str] = []
    action_nodes = []
    for sec in sections:
        sec = _expect_list(sec, "a domain section")
        head = _head(sec)
        if head == ":requirements":
            for r in sec[1:]:
                req = _expect_sym(r, "a requirement").lower()
                if canon(req) in UNSUPPORTED_REQUIREMENTS:
                    raise UnsupportedConstruct(f"requirement {r} is not supported", r.span)
                requirements.append(req)
        elif head == ":types":
            for n, parent, sp in _typed_list(sec[1:], ":types"):
                if n == OBJECT:
                    continue
                if any(t.name == n for t in types):
                    raise PddlSyntaxError(f"duplicate type {n}", sp)
                types.append(TypeDecl(n, parent))
        elif head == ":constants":
            constants.extend(ObjectDecl(n, t) for n, t, _ in _typed_list(sec[1:], ":constants"))
        elif head == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "a predicate declaration")
                pname = canon(_expect_sym(p[0], "a predicate name"))
                if pname == DANGER:
                    raise ReservedFluentDeclared(f"{DANGER!r} is reserved and may not be declared", p[0].span)
                params = tuple((v, t) for v, t, _ in _typed_list(p[1:], pname))
                predicates.append(PredicateDecl(pname, params))
        elif head == ":functions":
            items = list(sec[1:])
            i = 0
            while i < len(items):
                f = items[i]
                if isinstance(f, Sym) and f == "-":
                    ty = canon(items[i + 1]) if i + 1 < len(items) else ""
                    if ty not in ("number", "int", "integer"):
                        raise UnsupportedConstruct(f"function type {ty!r} is not supported", f.span)
                    i += 2
                    continue
                f = _expect_list(f, "a function declaration")
                fname = canon(_expect_sym(f[0], "a function name"))
                if fname == DANGER:
                    raise ReservedFluentDeclared(f"{DANGER!r} is reserved and may not be declared", f[0].span)
                functions.append(NumericFluentDecl(fname, tuple((v, t) for v, t, _ in _typed_list(f[1:], fname))))
                i += 1
        elif head == ":action":
            action_nodes.append(sec)
        elif head in UNSUPPORTED_SECTIONS:
            raise UnsupportedConstruct(f"section {sec[0]} is not supported", sec.span)
        else:
            raise PddlSyntaxError(f"unknown domain section {sec[0] if sec else '()'}", sec.span)

    type_names = {OBJECT} | {t.name for t in types}
    for t in types:
        if t.parent not in type_names:
            raise UnknownSymbol(f"type {t.name} has undeclared parent {t.parent}", None)
    pred_arity = {p.name: p.arity for p in predicates}
    func_arity = {f.name: f.arity for f in functions}
    const_map = {c.name: c.type for c in constants}
    schemas = [_parse_action(a, pred_arity, func_arity, const_map, type_names) for a in action_nodes]
    try:
        return Domain(name, tuple(types), tuple(constants), tuple(predicates), tuple(functions),
                      tuple(schemas), tuple(requirements))
    except SafePlanError as exc:
        raise _with_span(exc, SourceSpan(file, 1, 1, 1))


def _parse_action(sec: SList, preds, funcs, consts, type_names) -> ActionSchema:
    if len(sec) < 2:
        raise PddlSyntaxError("action without a name", sec.span)
    name = canon(_expect_sym(sec[1], "an action name"))
    fields = {}
    i = 2
    while i < len(sec):
        key = _expect_sym(sec[i], "an action keyword")
        if i + 1 >= len(sec):
            raise PddlSyntaxError(f"{key} without a value", key.span)
        fields[canon(key)] = sec[i + 1]
        i += 2
    for k in fields:
        if k not in (":parameters", ":precondition", ":effect"):
            raise UnsupportedConstruct(f"action keyword {k} is not supported", sec.span)
    params = []
    if ":parameters" in fields:
        plist = _expect_list(fields[":parameters"], "a parameter list")
        for v, t, sp in _typed_list(plist, f"{name} parameters"):
            if not is_var(v):
                raise PddlSyntaxError(f"parameter {v} must start with '?'", sp)
            if t not in type_names:
                raise UnknownSymbol(f"undeclared type {t}", sp)
            params.append((v, t))
    scope = _Scope(preds, funcs, dict(params), consts)
    pre = parse_condition(fields[":precondition"], scope) if ":precondition" in fields else Condition()
    eff = parse_effects(fields[":effect"], scope) if ":effect" in fields else ()
    return ActionSchema(name, tuple(params), pre, eff)


def parse_problem(text: str, domain: Domain, file: str = "problem.pddl") -> BasicProblem:
    name, sections = _define(text, file, "problem")
    objects: list[ObjectDecl] = []
    init_nodes, goal_node = [], None
    for sec in sections:
        sec = _expect_list(sec, "a problem section")
        head = _head(sec)
        if head == ":domain":
            dname = canon(_expect_sym(sec[1], "a domain name")) if len(sec) > 1 else ""
            if dname != domain.name:
                raise UnknownSymbol(f"problem is for domain {dname!r}, not {domain.name!r}", sec.span)
        elif head == ":objects":
            for n, t, sp in _typed_list(sec[1:], ":objects"):
                if t not in domain.type_parent:
                    raise UnknownSymbol(f"undeclared type {t}", sp)
                objects.append(ObjectDecl(n, t))
        elif head == ":init":
            init_nodes = sec[1:]
        elif head == ":goal":
            if len(sec) != 2:
                raise PddlSyntaxError(":goal takes one condition", sec.span)
            goal_node = sec[1]
        elif head == ":metric":
            continue
        elif head in UNSUPPORTED_SECTIONS:
            raise UnsupportedConstruct(f"section {sec[0]} is not supported", sec.span)
        else:
            raise PddlSyntaxError(f"unknown problem section {sec[0] if sec else '()'}", sec.span)

    objmap = {c.name: c.type for c in domain.constants}
    objmap.update({o.name: o.type for o in objects})
    scope = _Scope({p.name: p.arity for p in domain.predicates},
                   {f.name: f.arity for f in domain.functions}, objects=objmap, ground_only=True)
    atoms, fluents = set(), {}
    for node in init_nodes:
        lst = _expect_list(node, "an initial fact")
        head = _head(lst)
        if head == "=":
            if len(lst) != 3:
                raise PddlSyntaxError("'=' takes a fluent and a value", lst.span)
            fname, args = scope.atom(lst[1], numeric=True)
            fluents[(fname, *args)] = _int(lst[2], f"initial value of {fname}")
        elif head in ("not", "and") or head in UNSUPPORTED_HEADS:
            raise UnsupportedConstruct(f"'{lst[0]}' is not allowed in :init", lst.span)
        else:
            pname, args = scope.atom(lst, numeric=False)
            atoms.add((pname, *args))
    goal = parse_condition(goal_node, scope) if goal_node is not None else Condition()
    try:
        return BasicProblem(name, domain, tuple(objects), State.make(atoms, fluents), goal)
    except SafePlanError as exc:
        raise _with_span(exc, SourceSpan(file, 1, 1, 1))


def parse_condition_text(text: str, problem, params: dict[str, str], file: str) -> Condition:
    """Parse a standalone condition (goal syntax) whose variables are ``params``."""
    exprs = parse_sexprs(text, file)
    if len(exprs) != 1:
        raise PddlSyntaxError("expected exactly one condition expression",
                              _span(exprs[1]) if len(exprs) > 1 else SourceSpan(file, 1, 1, 1))
    dom = problem.domain
    scope = _Scope({p.name: p.arity for p in dom.predicates}, {f.name: f.arity for f in dom.functions},
                   variables=params, objects=problem.object_types)
    return parse_condition(exprs[0], scope)


# --------------------------------------------------------------------------
# writing


def _args(args) -> str:
    return "".join(f" {a}" for a in args)


def _typed(pairs) -> str:
    return " ".join(f"{n} - {t}" for n, t in pairs)


def conjunct_to_pddl(c) -> str:
    if isinstance(c, Literal):
        s = f"({c.predicate}{_args(c.args)})"
        return s if c.positive else f"(not {s})"
    return f"({c.op} ({c.fluent}{_args(c.args)}) {c.value})"


def condition_to_pddl(cond: Condition) -> str:
    parts = [conjunct_to_pddl(c) for c in cond]
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")" if parts else "(and)"


def effect_to_pddl(e) -> str:
    if isinstance(e, AddAtom):
        return f"({e.predicate}{_args(e.args)})"
    if isinstance(e, DeleteAtom):
        return f"(not ({e.predicate}{_args(e.args)}))"
    if isinstance(e, NumericEffect):
        return f"({e.op} ({e.fluent}{_args(e.args)}) {e.value})"
    inner = " ".join(effect_to_pddl(x) for x in e.effects)
    return f"(when {condition_to_pddl(e.condition)} (and {inner}))"


def domain_to_pddl(dom: Domain) -> str:
    lines = [f"(define (domain {dom.name})"]
    if dom.requirements:
        lines.append("  (:requirements " + " ".join(dom.requirements) + ")")
    if dom.types:
        lines.append("  (:types")
        lines.extend(f"    {t.name} - {t.parent or OBJECT}" for t in dom.types)
        lines.append("  )")
    if dom.constants:
        lines.append("  (:constants " + _typed((c.name, c.type) for c in dom.constants) + ")")
    if dom.predicates:
        lines.append("  (:predicates")
        lines.extend(f"    ({p.name}{' ' if p.params else ''}{_typed(p.params)})" for p in dom.predicates)
        lines.append("  )")
    if dom.functions:
        lines.append("  (:functions")
        lines.extend(f"    ({f.name}{' ' if f.params else ''}{_typed(f.params)}) - number" for f in dom.functions)
        lines.append("  )")
    for s in dom.schemas:
        lines.append(f"  (:action {s.name}")
        lines.append(f"    :parameters ({_typed(s.params)})")
        lines.append(f"    :precondition {condition_to_pddl(s.precondition)}")
        effs = " ".join(effect_to_pddl(e) for e in s.effects)
        lines.append(f"    :effect (and {effs})" if effs else "    :effect (and)")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def problem_to_pddl(p: BasicProblem) -> str:
    lines = [f"(define (problem {p.name})", f"  (:domain {p.domain.name})"]
    if p.objects:
        lines.append("  (:objects " + _typed((o.name, o.type) for o in p.objects) + ")")
    lines.append("  (:init")
    lines.extend(f"    ({a[0]}{_args(a[1:])})" for a in sorted(p.init.atoms))
    lines.extend(f"    (= ({k[0]}{_args(k[1:])}) {v})" for k, v in p.init.fluents)
    lines.append("  )")
    lines.append(f"  (:goal {condition_to_pddl(p.goal)})")
    lines.append(")")
    return "\n".join(lines) + "\n"
