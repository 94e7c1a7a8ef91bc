"""Bundle directories and free-form plan text.

Bundle layout::

    <task>/domain.pddl
    <task>/problem.pddl
    <task>/danger.json      {"rules": [...], "d_init": 0, "d_max": 0}
    <task>/meta.json        optional
    <task>/refs/*.plan      optional reference plans
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .bundle import MetaRecord, TaskBundle
from .errors import (
    ArityMismatch,
    PddlSyntaxError,
    SafePlanError,
    SourceSpan,
    TypeMismatch,
    UnknownSymbol,
)
from .model import DangerRule, canon, compile_augmented, ground
from .pddl import parse_condition_text, parse_domain, parse_problem
from .plan import Plan, PlanStep, RawPlanText, StepStatus

DANGER_FILE = "danger.json"


def _json_span(text: str, needle: str, file: str) -> SourceSpan:
    idx = text.find(needle)
    if idx < 0:
        return SourceSpan(file, 1, 1, 1)
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return SourceSpan(file, line, col, col + len(needle))


def parse_danger(text: str, basic, file: str = DANGER_FILE) -> tuple[list[DangerRule], int, int]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PddlSyntaxError(f"invalid JSON: {exc.msg}", SourceSpan(file, exc.lineno, exc.colno, exc.colno + 1))
    if not isinstance(data, dict) or not isinstance(data.get("rules", []), list):
        raise PddlSyntaxError("danger spec must be an object with a 'rules' list", SourceSpan(file, 1, 1, 1))
    rules = []
    for i, r in enumerate(data.get("rules", [])):
        action = str(r.get("action", ""))
        span = _json_span(text, f'"{action}"', file)
        schema = basic.domain.schema_map.get(canon(action))
        if schema is None:
            raise UnknownSymbol(f"danger rule {i} names unknown action {action!r}", span)
        binding = r.get("binding", ["*"] * schema.arity)
        if not isinstance(binding, list):
            raise PddlSyntaxError(f"danger rule {i}: binding must be a list", span)
        binding = tuple(None if b == "*" else canon(str(b)) for b in binding)
        delta = r.get("delta")
        if not isinstance(delta, int) or isinstance(delta, bool) or delta == 0:
            raise PddlSyntaxError(f"danger rule {i}: delta must be a nonzero integer", span)
        cond_text = r.get("condition", "(and)")
        cspan = _json_span(text, cond_text, file)
        try:
            cond = parse_condition_text(cond_text, basic, dict(schema.params), f"{file}#rules[{i}]")
        except SafePlanError as exc:
            exc.span = cspan
            raise
        rules.append(DangerRule(schema.name, binding, cond, delta))
    d_init, d_max = data.get("d_init", 0), data.get("d_max", 0)
    for k, v in (("d_init", d_init), ("d_max", d_max)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise PddlSyntaxError(f"{k} must be an integer", _json_span(text, f'"{k}"', file))
    return rules, d_init, d_max


def load_bundle_texts(path: Path) -> dict[str, str]:
    texts = {}
    for name in ("domain.pddl", "problem.pddl", DANGER_FILE):
        f = path / name
        if not f.is_file():
            raise FileNotFoundError(f"{path}: missing {name}")
        texts[name] = f.read_text(encoding="utf-8")
    return texts


def parse_bundle(path: str | Path) -> TaskBundle:
    path = Path(path)
    texts = load_bundle_texts(path)
    domain = parse_domain(texts["domain.pddl"], str(path / "domain.pddl"))
    basic = parse_problem(texts["problem.pddl"], domain, str(path / "problem.pddl"))
    dfile = str(path / DANGER_FILE)
    rules, d_init, d_max = parse_danger(texts[DANGER_FILE], basic, dfile)
    try:
        aug = compile_augmented(basic, rules, d_init, d_max)
    except SafePlanError as exc:
        if exc.span is None:
            exc.span = SourceSpan(dfile, 1, 1, 1)
        raise
    meta_file = path / "meta.json"
    task_id = path.name
    if meta_file.is_file():
        meta = MetaRecord.from_json(json.loads(meta_file.read_text(encoding="utf-8")), task_id)
    else:
        meta = MetaRecord(task_id)
    refs = {}
    if (path / "refs").is_dir():
        refs = {f.stem: f.read_text(encoding="utf-8") for f in sorted((path / "refs").glob("*.plan"))}
    return TaskBundle(meta.task_id, basic, aug, meta, refs, path)


def find_bundles(root: str | Path) -> list[Path]:
    """Bundle directories under ``root`` (or ``root`` itself), sorted by name."""
    root = Path(root)
    if (root / "domain.pddl").is_file():
        return [root]
    return sorted(p.parent for p in root.glob("*/domain.pddl"))


# --------------------------------------------------------------------------
# plan text

_IDENT = r"[A-Za-z_][\w-]*"
_FUNC = re.compile(rf"^({_IDENT})\s*\((.*)\)$")
_PAREN = re.compile(rf"^\(\s*({_IDENT})((?:\s+[^\s()]+)*)\s*\)$")
_BARE = re.compile(rf"^({_IDENT})((?:\s+{_IDENT})*)$")
_ARG = re.compile(rf"^{_IDENT}$|^\d[\w-]*$")
_NUMBERING = re.compile(r"^(?:step\s*\d+\s*[:.)-]?|\d+\s*[.):]|\d+\s+-|[-*•+])\s*", re.I)
_TRAILER = re.compile(r"\s*(?:\[\d+(?:\.\d+)?\]|;.*)$")


def _clean_line(line: str) -> str:
    s = line.strip()
    s = _NUMBERING.sub("", s, count=1)
    s = s.strip().strip("`").strip()
    if s.startswith("("):
        s = _TRAILER.sub("", s)
    else:
        s = re.sub(r"\s*;\s*$", "", s)
    return s.rstrip(".,").strip()


def _resolve(name: str, args: list[str], line_no: int, text: str, bundle: TaskBundle) -> PlanStep:
    problem = bundle.basic
    schema = problem.domain.schema_map.get(canon(name))
    if schema is None:
        return PlanStep(line_no, text, StepStatus.UNKNOWN_ACTION, None, f"no action named {name}")
    if any(not _ARG.match(a) for a in args):
        return PlanStep(line_no, text, StepStatus.MALFORMED, None, "unparseable argument")
    try:
        action = ground(problem, schema, args)
    except (ArityMismatch, TypeMismatch, UnknownSymbol) as exc:
        return PlanStep(line_no, text, StepStatus.MALFORMED, None, exc.message)
    return PlanStep(line_no, text, StepStatus.RESOLVED, action)


def parse_plan(raw: RawPlanText | str, bundle: TaskBundle) -> Plan:
    """Never raises. Prose lines are ignored rather than counted as steps."""
    text = raw.text if isinstance(raw, RawPlanText) else raw
    schemas = bundle.basic.domain.schema_map
    steps = []
    ignored = 0
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("```") or stripped.startswith(";"):
            ignored += 1
            continue
        s = _clean_line(stripped)
        m = _FUNC.match(s)
        if m:
            inner = m.group(2).strip()
            args = [a.strip() for a in inner.split(",")] if "," in inner else inner.split()
            steps.append(_resolve(m.group(1), [a for a in args if a] if inner else [], line_no, stripped, bundle))
            continue
        m = _PAREN.match(s)
        if m:
            steps.append(_resolve(m.group(1), m.group(2).split(), line_no, stripped, bundle))
            continue
        m = _BARE.match(s)
        if m and canon(m.group(1)) in schemas:
            steps.append(_resolve(m.group(1), m.group(2).split(), line_no, stripped, bundle))
            continue
        first = re.match(rf"\(?\s*({_IDENT})", s)
        if first and canon(first.group(1)) in schemas:
            steps.append(PlanStep(line_no, stripped, StepStatus.MALFORMED, None, "unrecognised step syntax"))
        else:
            ignored += 1
    return Plan(tuple(steps), ignored)


def plan_from_file(path: str | Path, bundle: TaskBundle) -> Plan:
    return parse_plan(Path(path).read_text(encoding="utf-8"), bundle)
