"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[C<n>] PASS|FAIL ...`` line (visible with
``pytest -s`` or in the captured output of ``pytest -v``) before asserting.
"""

import random
import time

import numpy as np
import pytest

from conftest import FIXTURE_NAMES, FIXTURES, SAFE_KNIFE, UNSAFE_KNIFE, load
from naive import naive_run
from randgen import feasible_batch, instance, mixed_batch, random_plan
from safeplan.analysis import cohens_d, decomposition_fit, loglinear_fit, rng
from safeplan.cli import main
from safeplan.executor import VerdictKind, feasible_on, run_plan
from safeplan.noise import LEVELS, NoiseLevel, inject
from safeplan.parser import parse_plan
from safeplan.plan import Plan, PlanStep, StepStatus
from safeplan.planner import reference_pair, solve
from safeplan.prompt import _tokens, audit_prompt, danger_only_tokens, render_prompt
from safeplan.relaxed import relaxed_run

ROOT = FIXTURES.parent
COVERAGE_SEED = 0  # fixed before the first run; never tuned


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{label}] {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def test_c1_knife_golden(report):
    t0 = time.perf_counter()
    b = load("knife_child")
    unsafe = run_plan(parse_plan(UNSAFE_KNIFE, b), b).verdict
    safe = run_plan(parse_plan(SAFE_KNIFE, b), b).verdict
    ref = reference_pair(b)
    elapsed = time.perf_counter() - t0
    events = [(e.step, e.action) for e in unsafe.danger_events]
    ok = (unsafe.kind is VerdictKind.FEASIBLE_UNSAFE
          and events == [(2, "PLACE_ON(knife, table)")]
          and b.rules[unsafe.danger_events[0].rule].condition.conjuncts[0].predicate == "child_near"
          and safe.kind is VerdictKind.SAFE
          and ref.feasible_plan.to_text() == UNSAFE_KNIFE
          and ref.safe_plan.to_text() == SAFE_KNIFE
          and ref.safety_effort == 2
          and elapsed < 1.0)
    report("C1", ok, f"unsafe={unsafe.kind.value} events={events} safe={safe.kind.value} "
                     f"effort={ref.safety_effort} time={elapsed:.3f}s")
    assert ok


def test_c2_verdict_algebra(report):
    n = bad = 0
    seed = 0
    while n < 10_000:
        b, plans = mixed_batch(seed)
        seed += 1
        for p in plans:
            n += 1
            r = run_plan(p, b)
            kind = r.verdict.kind
            expect = {VerdictKind.INFEASIBLE: (0, 0), VerdictKind.FEASIBLE_UNSAFE: (1, 0),
                      VerdictKind.SAFE: (1, 1)}[kind]
            if (r.feasible, r.safe) != expect or r.safe > r.feasible \
                    or feasible_on(p, b.basic) != bool(r.feasible):
                bad += 1
    report("C2", bad == 0, f"{n} pairs, {bad} exceptions")
    assert bad == 0


def test_c3_si_soundness(report):
    n = disagree = 0
    seed = 0
    while n < 10_000:
        b, plans = feasible_batch(seed)
        seed += 1
        for p in plans:
            r = run_plan(p, b)
            assert r.feasible == 1
            n += 1
            disagree += relaxed_run(p, b).si != r.safe
    rnd = random.Random(7)
    m = moved = 0
    for s in range(2_000):
        b, p = instance(s)
        steps = list(p.steps)
        for _ in range(rnd.randint(1, 4)):
            steps.insert(rnd.randint(0, len(steps)), PlanStep(0, "UNDEFINED()", StepStatus.UNKNOWN_ACTION))
        m += 1
        moved += relaxed_run(Plan(tuple(steps)), b).trace.final_danger != relaxed_run(p, b).trace.final_danger
    ok = disagree == 0 and moved == 0
    report("C3", ok, f"{n} feasible plans, {disagree} si/safety disagreements; "
                     f"{m} insertions, {moved} changed relaxed danger")
    assert ok


def test_c4_naive_oracle(report):
    mismatches = 0
    for s in range(1_000):
        b, p = instance(100_000 + s)
        r = run_plan(p, b)
        kind, step, events, danger = naive_run(b, p)
        same = r.verdict.kind.value == kind and r.verdict.step == step
        if same and kind != "infeasible":
            same = [(e.step, e.rule, e.delta) for e in r.verdict.danger_events] == events \
                and r.trace.final.danger == danger
        mismatches += not same
    report("C4", mismatches == 0, f"1000 instances, {mismatches} mismatches")
    assert mismatches == 0


def test_c5_statistics_exact(report):
    x = [1, 3, 10, 30, 100, 300, 1000]
    fit = loglinear_fit([(p, 12.5 + 26.8 * np.log10(p)) for p in x], resamples=200)
    slope_err = abs(fit.beta1 - 26.8)
    g = rng(1)
    f, si = g.uniform(0, 1, 30), g.uniform(0, 1, 30)
    dec = decomposition_fit(zip(f, si, f * si))
    d = cohens_d([1, 2, 3], [3, 4, 5])
    ok = slope_err < 1e-9 and abs(dec.beta1 - 1) < 1e-6 and abs(dec.r2 - 1) < 1e-12 and f"{d:.6f}" == "2.000000"
    report("C5a", ok, f"collinear |err|={slope_err:.1e} decomposition slope={dec.beta1:.9f} "
                      f"R2={dec.r2:.12f} cohens_d={d:.6f}")
    assert ok


def test_c5_bootstrap_coverage(report):
    # 18 models spread evenly over three orders of magnitude, true slope 26.8, sigma 5
    g = rng(COVERAGE_SEED)
    x = np.logspace(0, 3, 18)
    hits = 0
    for i in range(500):
        y = 40 + 26.8 * np.log10(x) + g.normal(0, 5, len(x))
        lo, hi = loglinear_fit(zip(x, y), seed=i, resamples=10_000).ci95
        hits += lo <= 26.8 <= hi
    cov = hits / 500
    ok = 0.93 <= cov <= 0.97
    report("C5b", ok, f"coverage {cov:.3f} over 500 datasets (target 0.93-0.97)")
    assert ok


def test_c6_noise_invariance(report):
    checks = bad = 0
    for name in FIXTURE_NAMES:
        b = load(name)
        base = {k: run_plan(parse_plan(t, b), b).verdict.kind for k, t in b.refs.items()}
        lengths = {m: len(solve(b, m)) for m in ("basic", "augmented")}
        for level in LEVELS:
            nb = inject(b, NoiseLevel(level, 0))
            for k, t in nb.refs.items():
                checks += 1
                bad += run_plan(parse_plan(t, nb), nb).verdict.kind != base[k]
            for m, n in lengths.items():
                checks += 1
                bad += len(solve(nb, m)) != n
    report("C6", bad == 0, f"{len(FIXTURE_NAMES)} bundles x {len(LEVELS)} levels, {checks} checks, {bad} exceptions")
    assert bad == 0


def test_c7_determinism(report, tmp_path, capsys):
    runs = []
    for i, par in enumerate(("1", "1", "8")):
        out = tmp_path / f"run{i}"
        codes = (
            main(["evaluate", str(FIXTURES), "--provider", f"directory:{ROOT / 'plans'}", "--parallel", par,
                  "--out", str(out), "--quiet"]),
            main(["analyze", "--results", str(out / "results.jsonl"), "--models", str(ROOT / "models.csv"),
                  "--bundles", str(FIXTURES), "--seed", "11", "--out", str(out), "--quiet"]),
        )
        capsys.readouterr()
        assert codes == (0, 0)
        runs.append({f: (out / f).read_bytes() for f in ("results.jsonl", "report.json", "report.csv")})
    ok = runs[0] == runs[1] == runs[2]
    report("C7", ok, "evaluate+analyze x3 (parallel 1, 1, 8): "
                     + ("byte-identical" if ok else "outputs differ"))
    assert ok


def test_c8_prompt_hygiene(report):
    failed = []
    for name in FIXTURE_NAMES:
        b = load(name)
        prompt = render_prompt(b)
        if audit_prompt(prompt, b) or danger_only_tokens(b) & set(_tokens(prompt)):
            failed.append(name)
    ok = not failed
    report("C8", ok, f"{len(FIXTURE_NAMES) - len(failed)}/{len(FIXTURE_NAMES)} prompts clean"
                     + (f"; leaking: {failed}" if failed else ""))
    assert ok
