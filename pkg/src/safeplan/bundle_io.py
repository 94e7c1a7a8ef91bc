"""Reading and writing bundles, results and reports.

Every file is written to a temporary sibling first and renamed into
place, so readers never see a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .bundle import TaskBundle
from .errors import EmptyInput
from .metrics import EvalRecord, MetricsSummary, check_unique
from .pddl import condition_to_pddl, domain_to_pddl, problem_to_pddl

SCHEMA_VERSION = "1.0"
SCHEMA_PATH = Path(__file__).with_name("schemas") / "report.schema.json"
CSV_COLUMNS = ("model_id", "slice_key", "slice_value", "n_tasks", "F", "S", "SP", "SI")


def atomic_write(path: str | Path, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


# --------------------------------------------------------------------------
# bundles


def danger_to_json(bundle: TaskBundle) -> dict:
    rules = []
    for r in bundle.rules:
        rules.append({
            "action": r.action.upper(),
            "binding": ["*" if b is None else b for b in r.binding],
            "condition": condition_to_pddl(r.condition),
            "delta": r.delta,
        })
    return {"rules": rules, "d_init": bundle.d_init, "d_max": bundle.d_max}


def write_bundle(bundle: TaskBundle, path: str | Path) -> Path:
    path = Path(path)
    atomic_write(path / "domain.pddl", domain_to_pddl(bundle.basic.domain))
    atomic_write(path / "problem.pddl", problem_to_pddl(bundle.basic))
    atomic_write(path / "danger.json", dumps(danger_to_json(bundle)))
    atomic_write(path / "meta.json", dumps(bundle.meta.to_json()))
    for name, text in sorted(bundle.refs.items()):
        atomic_write(path / "refs" / f"{name}.plan", text)
    return path


# --------------------------------------------------------------------------
# per-plan results


def results_to_jsonl(records: Iterable[EvalRecord]) -> str:
    recs = sorted(check_unique(records), key=lambda r: r.key)
    return "".join(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n" for r in recs)


def write_results(records: Iterable[EvalRecord], path: str | Path) -> None:
    atomic_write(path, results_to_jsonl(records))


def read_results(path: str | Path) -> list[EvalRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(EvalRecord.from_json(json.loads(line)))
    return check_unique(out)


def read_plans_jsonl(path: str | Path) -> dict[tuple[str, str], str]:
    """``{task_id, model_id, plan}`` lines -> {(model_id, task_id): plan}."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            key = (str(row["model_id"]), str(row["task_id"]))
            if key in out:
                raise ValueError(f"{path}:{n}: duplicate plan for model {key[0]!r}, task {key[1]!r}")
            out[key] = str(row.get("plan", ""))
    return out


# --------------------------------------------------------------------------
# reports


def build_report(summaries: Sequence[MetricsSummary], analysis: Mapping[str, Any] | None = None,
                 meta: Mapping[str, Any] | None = None) -> dict:
    if not summaries:
        raise EmptyInput("no summaries to report")
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": dict(meta or {}),
        "summaries": [s.to_json() for s in summaries],
        "analysis": dict(analysis) if analysis is not None else None,
    }


def report_csv(summaries: Sequence[MetricsSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in summaries:
        row = s.to_json()
        w.writerow(["" if row[c] is None else (f"{row[c]:.6f}" if isinstance(row[c], float) else row[c])
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def write_report(out_dir: str | Path, summaries: Sequence[MetricsSummary],
                 analysis: Mapping[str, Any] | None = None, meta: Mapping[str, Any] | None = None) -> dict:
    """Write report.json and report.csv; nothing is written if inputs are empty."""
    report = build_report(summaries, analysis, meta)
    text_json, text_csv = dumps(report), report_csv(summaries)
    out = Path(out_dir)
    atomic_write(out / "report.json", text_json)
    atomic_write(out / "report.csv", text_csv)
    return report


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
