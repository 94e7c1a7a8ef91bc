import json

import jsonschema
import pytest

from conftest import FIXTURE_NAMES, FIXTURES, SAFE_KNIFE, UNSAFE_KNIFE, load
from safeplan.bundle_io import (
    load_schema,
    read_plans_jsonl,
    read_results,
    results_to_jsonl,
    write_bundle,
    write_report,
    write_results,
)
from safeplan.errors import EmptyInput
from safeplan.executor import VerdictKind
from safeplan.metrics import score, summarize_all
from safeplan.parser import parse_bundle
from safeplan.plan import RawPlanText


def _records():
    out = []
    for name in FIXTURE_NAMES:
        b = load(name)
        out.append(score(RawPlanText(b.refs["safe"], "good", name), b))
        out.append(score(RawPlanText(b.refs.get("unsafe", ""), "bad", name), b))
    return out


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_bundle_write_read_round_trip(name, tmp_path):
    b = load(name)
    back = parse_bundle(write_bundle(b, tmp_path / name))
    assert back == b and dict(back.refs) == dict(b.refs)


def test_results_sorted_and_keys_sorted(tmp_path):
    recs = _records()
    text = results_to_jsonl(reversed(recs))
    lines = [json.loads(x) for x in text.splitlines()]
    assert [(r["task_id"], r["model_id"]) for r in lines] == sorted((r["task_id"], r["model_id"]) for r in lines)
    first = text.splitlines()[0]
    assert list(json.loads(first)) == sorted(json.loads(first))
    write_results(recs, tmp_path / "r.jsonl")
    assert results_to_jsonl(read_results(tmp_path / "r.jsonl")) == text


def test_enum_values_serialized_exactly(knife):
    lines = [score(RawPlanText(t, "m", "knife_child"), knife).to_json()["verdict"]
             for t in (SAFE_KNIFE, UNSAFE_KNIFE, "")]
    assert lines == ["safe", "feasible_unsafe", "infeasible"]
    assert [v.value for v in VerdictKind] == ["infeasible", "feasible_unsafe", "safe"]
    golden = {"danger_group": "physical", "danger_type": "mechanical", "entity": "human", "source": "fixture"}
    assert knife.meta.labels() == golden


def test_report_validates_and_is_deterministic(tmp_path):
    recs = _records()
    rep = write_report(tmp_path / "a", summarize_all(recs), meta={"x": 1})
    write_report(tmp_path / "b", summarize_all(recs), meta={"x": 1})
    jsonschema.validate(rep, load_schema())
    for f in ("report.json", "report.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    header = (tmp_path / "a" / "report.csv").read_text().splitlines()[0]
    assert header == "model_id,slice_key,slice_value,n_tasks,F,S,SP,SI"


def test_empty_report_writes_nothing(tmp_path):
    with pytest.raises(EmptyInput):
        write_report(tmp_path / "r", [])
    assert not (tmp_path / "r").exists()


def test_no_temp_files_left(tmp_path):
    write_results(_records(), tmp_path / "r.jsonl")
    assert [p.name for p in tmp_path.iterdir()] == ["r.jsonl"]


def test_read_plans_jsonl(tmp_path):
    p = tmp_path / "plans.jsonl"
    p.write_text('{"task_id": "a", "model_id": "m", "plan": "X()"}\n\n{"task_id": "b", "model_id": "m", "plan": ""}\n')
    assert read_plans_jsonl(p) == {("m", "a"): "X()", ("m", "b"): ""}
    p.write_text('{"task_id": "a", "model_id": "m", "plan": "X()"}\n' * 2)
    with pytest.raises(ValueError):
        read_plans_jsonl(p)


def test_fixture_meta_files_are_well_formed():
    for name in FIXTURE_NAMES:
        meta = json.loads((FIXTURES / name / "meta.json").read_text())
        assert meta["source"] == "fixture" and meta["task_id"] == name
