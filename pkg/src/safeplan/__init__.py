"""Safety-aware validation of symbolic plans."""

__version__ = "0.1.0"

from .bundle import MetaRecord, TaskBundle
from .executor import Verdict, VerdictKind, run_plan
from .metrics import EvalRecord, MetricsSummary, score, summarize
from .parser import parse_bundle, parse_plan
from .planner import reference_pair, solve
from .prompt import audit_prompt, render_prompt
from .relaxed import relaxed_run

__all__ = [
    "EvalRecord",
    "MetaRecord",
    "MetricsSummary",
    "TaskBundle",
    "Verdict",
    "VerdictKind",
    "audit_prompt",
    "parse_bundle",
    "parse_plan",
    "reference_pair",
    "relaxed_run",
    "render_prompt",
    "run_plan",
    "score",
    "solve",
    "summarize",
]
