"""Command line entry point.

Exit codes: 0 success, 1 negative outcome (unsafe or infeasible plan,
failed validation, unsolvable task), 2 usage or input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import DEFAULT_RESAMPLES, analyze, read_models
from .bundle import TaskBundle
from .bundle_io import dumps, read_results, write_bundle, write_report, write_results
from .errors import LimitExceeded, SafePlanError, Unsolvable
from .executor import VerdictKind, run_plan
from .metrics import SLICE_KEYS, score, summarize, summarize_all
from .noise import LEVELS, NoiseLevel, inject
from .parser import find_bundles, parse_bundle, parse_plan
from .plan import RawPlanText
from .planner import MODES, SearchLimits, reference_pair, solve
from .prompt import audit_prompt, render_prompt
from .relaxed import relaxed_run
from .runner import ProviderConfig, collect_plans

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("safeplan")


class UsageError(Exception):
    pass


class Out:
    def __init__(self, fmt: str, quiet: bool):
        self.fmt, self.quiet = fmt, quiet

    def emit(self, data: Any, text: str) -> None:
        if self.fmt == "json":
            sys.stdout.write(dumps(data))
        elif not self.quiet or not text.startswith(";"):
            sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def _bundles(paths: Sequence[str]) -> list[TaskBundle]:
    out = []
    for p in paths:
        found = find_bundles(p)
        if not found:
            raise UsageError(f"no task bundles under {p}")
        out.extend(parse_bundle(f) for f in found)
    ids = [b.task_id for b in out]
    if len(set(ids)) != len(ids):
        raise UsageError("duplicate task ids among the given bundles")
    return sorted(out, key=lambda b: b.task_id)


def _limits(args) -> SearchLimits:
    return SearchLimits(args.max_nodes, args.max_depth)


# --------------------------------------------------------------------------
# commands


def cmd_validate_task(args, out: Out) -> int:
    rows, bad = [], 0
    for path in [f for p in args.paths for f in (find_bundles(p) or [Path(p)])]:
        problems: list[str] = []
        row: dict[str, Any] = {"task": str(path)}
        try:
            b = parse_bundle(path)
            row["task"] = b.task_id
            ref = reference_pair(b, _limits(args))
            row.update(safe_len=len(ref.safe_plan), feasible_len=len(ref.feasible_plan),
                       unsafe_len=None if ref.unsafe_plan is None else len(ref.unsafe_plan),
                       safety_effort=ref.safety_effort)
            if not b.meta.effort_in_range or not -8 <= ref.safety_effort <= 8:
                problems.append(f"safety effort {ref.safety_effort} outside [-8, 8]")
            if b.meta.safety_effort is not None and b.meta.safety_effort != ref.safety_effort:
                problems.append(f"meta.safety_effort={b.meta.safety_effort}, oracle gives {ref.safety_effort}")
            expect = {"safe": (VerdictKind.SAFE,),
                      "feasible": (VerdictKind.SAFE, VerdictKind.FEASIBLE_UNSAFE),
                      "unsafe": (VerdictKind.FEASIBLE_UNSAFE,)}
            for name, text in sorted(b.refs.items()):
                v = run_plan(parse_plan(text, b), b).verdict
                if name in expect and v.kind not in expect[name]:
                    problems.append(f"refs/{name}.plan is {v}")
            if "safe" in b.refs and len(parse_plan(b.refs["safe"], b)) != len(ref.safe_plan):
                problems.append("refs/safe.plan is not a shortest safe plan")
            leaked = audit_prompt(render_prompt(b), b)
            if leaked:
                problems.append(f"prompt leaks {leaked}")
        except (Unsolvable, LimitExceeded) as exc:
            problems.append(f"{type(exc).__name__}: {exc.message}")
        except SafePlanError as exc:
            problems.append(f"{type(exc).__name__}: {exc}")
        row["problems"] = problems
        bad += bool(problems)
        rows.append(row)
    lines = []
    for r in rows:
        status = "ok" if not r["problems"] else "INVALID"
        extra = f" effort={r['safety_effort']} safe={r['safe_len']}" if "safety_effort" in r else ""
        lines.append(f"{r['task']}: {status}{extra}")
        lines.extend(f"  - {p}" for p in r["problems"])
    out.emit({"tasks": rows, "invalid": bad}, "\n".join(lines))
    return EXIT_NEGATIVE if bad else EXIT_OK


def cmd_check_plan(args, out: Out) -> int:
    b = parse_bundle(args.bundle)
    text = sys.stdin.read() if args.plan == "-" else Path(args.plan).read_text(encoding="utf-8")
    plan = parse_plan(text, b)
    res = run_plan(plan, b)
    rel = relaxed_run(plan, b)
    v = res.verdict
    data = {
        "task_id": b.task_id,
        "verdict": v.kind.value,
        "F": res.feasible, "S": res.safe, "SI": rel.si,
        "failure_reason": None if v.reason is None else {"code": v.reason.code, "detail": v.reason.detail,
                                                          "step": v.step},
        "danger_events": [e.to_json() for e in v.danger_events],
        "parse_stats": plan.stats(),
        "trace": res.trace.to_json(),
        "relaxed": rel.trace.to_json(),
    }
    lines = [str(v)]
    if not out.quiet:
        for i, st in enumerate(plan.steps, 1):
            d = res.trace.states[i].danger if i < len(res.trace.states) else None
            label = str(st.action) if st.resolved else f"[{st.status.value}] {st.text}"
            lines.append(f"  {i:>2}. {label}" + (f"  danger={d}" if d is not None else "  (not executed)"))
        lines.append(f"F={res.feasible} S={res.safe} SI={rel.si} final_danger={res.trace.final.danger} "
                     f"d_max={b.d_max}")
    out.emit(data, "\n".join(lines))
    return EXIT_OK if v.kind is VerdictKind.SAFE else EXIT_NEGATIVE


def cmd_solve(args, out: Out) -> int:
    b = parse_bundle(args.bundle)
    try:
        plan = solve(b, args.mode, _limits(args))
    except (Unsolvable, LimitExceeded) as exc:
        print(f"safeplan: {exc.message}", file=sys.stderr)
        out.emit({"task_id": b.task_id, "mode": args.mode, "plan": None, "error": exc.message}, "")
        return EXIT_NEGATIVE
    data = {"task_id": b.task_id, "mode": args.mode, "length": len(plan),
            "plan": [str(a) for a in plan.actions()]}
    out.emit(data, f"; {b.task_id}: {len(plan)}-step {args.mode} plan\n" + plan.to_text())
    return EXIT_OK


def _provider(args) -> ProviderConfig:
    if not args.provider:
        raise UsageError("--provider is required (directory:PATH, jsonl:FILE, command:CMD or http:URL)")
    kw = {"timeout_s": args.timeout_s, "max_retries": args.max_retries, "template": args.template,
          "rate_per_s": args.rate}
    if args.model:
        kw["model"] = args.model
    if args.token_env:
        kw["token_env"] = args.token_env
    try:
        return ProviderConfig.parse(args.provider, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _summary_text(summaries) -> str:
    lines = [f"{'model':<22} {'slice':<26} {'N':>4} {'F':>8} {'S':>8} {'SP':>8} {'SI':>8}"]
    for s in summaries:
        j = s.to_json()
        sp = "-" if j["SP"] is None else f"{j['SP']:.3f}"
        lines.append(f"{j['model_id']:<22} {j['slice_key'] + '=' + j['slice_value']:<26} {j['n_tasks']:>4} "
                     f"{j['F']:>8.3f} {j['S']:>8.3f} {sp:>8} {j['SI']:>8.3f}")
    return "\n".join(lines)


def cmd_evaluate(args, out: Out) -> int:
    bundles = _bundles(args.bundles)
    by_id = {b.task_id: b for b in bundles}
    raws = collect_plans(bundles, _provider(args), parallel=args.parallel)
    records = []
    for raw in raws:
        t0 = time.perf_counter()
        rec = score(raw, by_id[raw.task_id])
        if args.timings:
            rec = rec.__class__(**{**rec.__dict__, "timings": {"score_s": time.perf_counter() - t0}})
        records.append(rec)
    if not records:
        raise UsageError("provider returned no plans")
    out_dir = Path(args.out)
    write_results(records, out_dir / "results.jsonl")
    summaries = summarize_all(records)
    write_report(out_dir, summaries, meta={"command": "evaluate", "n_records": len(records)})
    errors = sum(r.failure_reason is not None and r.failure_reason.code == "provider_error" for r in records)
    overall = [s for s in summaries if s.slice_key == "all"]
    out.emit({"results": str(out_dir / "results.jsonl"), "report": str(out_dir / "report.json"),
              "records": len(records), "provider_errors": errors,
              "summaries": [s.to_json() for s in overall]},
             _summary_text(overall) + f"\n{len(records)} records, {errors} provider errors -> {out_dir}")
    return EXIT_OK


def _task_lengths(paths: Sequence[str], limits: SearchLimits) -> dict[str, float]:
    out = {}
    for b in _bundles(paths):
        if "safe" in b.refs:
            out[b.task_id] = float(len(parse_plan(b.refs["safe"], b)))
        else:
            out[b.task_id] = float(len(solve(b, "augmented", limits)))
    return out


def cmd_analyze(args, out: Out) -> int:
    records = read_results(args.results)
    models = read_models(args.models)
    lengths = _task_lengths(args.bundles, _limits(args)) if args.bundles else None
    result = analyze(records, models, seed=args.seed, resamples=args.resamples, task_lengths=lengths)
    summaries = summarize_all(records)
    write_report(args.out, summaries, result, meta={"command": "analyze", "n_records": len(records)})
    lines = []
    for m, fit in result["fits"].items():
        if fit:
            lines.append(f"beta_{m} = {fit['beta1']:.3f} pts/OoM  CI95 [{fit['ci95'][0]:.3f}, {fit['ci95'][1]:.3f}]"
                         f"  R2={fit['r2']:.3f}")
    for name, r in result["slope_ratios"].items():
        if r:
            lines.append(f"{name} slope ratio = {r['ratio']:.3f}  CI95 [{r['ci95'][0]}, {r['ci95'][1]}]")
    if result["decomposition"]:
        d = result["decomposition"]
        lines.append(f"S ~ F*SI: slope={d['beta1']:.3f} intercept={d['beta0']:.3f} R2={d['r2']:.3f}")
    for k, v in result["notes"].items():
        lines.append(f"note {k}: {v}")
    lines.append(f"report -> {Path(args.out) / 'report.json'}")
    out.emit(result, "\n".join(lines))
    return EXIT_OK


def cmd_report(args, out: Out) -> int:
    records = read_results(args.results)
    summaries = summarize(records, args.slice_by) if args.slice_by else summarize_all(records)
    if args.out:
        write_report(args.out, summaries, meta={"command": "report", "n_records": len(records)})
    out.emit({"summaries": [s.to_json() for s in summaries]}, _summary_text(summaries))
    return EXIT_OK


def _levels(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--levels must be comma-separated integers, got {text!r}") from None


def cmd_inject_noise(args, out: Out) -> int:
    bundles = _bundles(args.bundles)
    rows, bad = [], 0
    for level in _levels(args.levels):
        try:
            nl = NoiseLevel(level, args.seed, args.allow_any_count)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for b in bundles:
            nb = inject(b, nl)
            row: dict[str, Any] = {"task_id": b.task_id, "level": level, "schemas": len(nb.basic.domain.schemas)}
            if args.out:
                write_bundle(nb, Path(args.out) / f"noise_{level}" / b.task_id)
            if args.check:
                problems = []
                for name, text in sorted(b.refs.items()):
                    before = run_plan(parse_plan(text, b), b).verdict.kind
                    after = run_plan(parse_plan(text, nb), nb).verdict.kind
                    if before != after:
                        problems.append(f"refs/{name}.plan: {before.value} -> {after.value}")
                for mode in ("basic", "augmented"):
                    if len(solve(b, mode, _limits(args))) != len(solve(nb, mode, _limits(args))):
                        problems.append(f"{mode} oracle length changed")
                row["problems"] = problems
                bad += bool(problems)
            rows.append(row)
    text = "\n".join(f"{r['task_id']} +{r['level']}: {r['schemas']} schemas"
                     + ("" if not r.get("problems") else "  " + "; ".join(r["problems"])) for r in rows)
    out.emit({"bundles": rows, "mismatches": bad}, text)
    return EXIT_NEGATIVE if bad else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="seed for bootstrap and noise injection")
    p.add_argument("--format", choices=("text", "json"), default=d("text"))
    p.add_argument("--quiet", action="store_true", default=d(False))
    p.add_argument("--config", default=d(None), help="TOML file whose keys mirror long flags")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-nodes", type=int, default=SearchLimits.max_expanded_nodes)
    p.add_argument("--max-depth", type=int, default=SearchLimits.max_depth)


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="safeplan", parents=[_common(suppress=False)],
                                     description="Safety-aware plan validation and evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate-task", parents=[common], help="parse, solve and audit task bundles")
    p.add_argument("paths", nargs="+")
    _search_flags(p)
    p.set_defaults(func=cmd_validate_task)

    p = sub.add_parser("check-plan", parents=[common], help="verdict and trace for one plan")
    p.add_argument("bundle")
    p.add_argument("--plan", required=True, help="plan file, or - for stdin")
    p.set_defaults(func=cmd_check_plan)

    p = sub.add_parser("solve", parents=[common], help="shortest plan by breadth-first search")
    p.add_argument("bundle")
    p.add_argument("--mode", choices=MODES, default="augmented")
    _search_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", parents=[common], help="collect plans and score them")
    p.add_argument("bundles", nargs="+")
    p.add_argument("--provider", help="directory:PATH | jsonl:FILE | command:CMD | http:URL")
    p.add_argument("--model", help="model id (http) or label for command output")
    p.add_argument("--token-env", help="environment variable holding the API token")
    p.add_argument("--timeout-s", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--rate", type=float, default=None, help="max requests per second")
    p.add_argument("--template", help="prompt template file (string.Template syntax)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="record per-plan scoring time (non-deterministic)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inject-noise", parents=[common], help="add distractor actions to bundles")
    p.add_argument("bundles", nargs="+")
    p.add_argument("--levels", default=",".join(map(str, LEVELS)))
    p.add_argument("--allow-any-count", action="store_true")
    p.add_argument("--out", help="write injected bundles under OUT/noise_<level>/<task>")
    p.add_argument("--check", action="store_true", help="verify verdicts and oracle lengths are unchanged")
    _search_flags(p)
    p.set_defaults(func=cmd_inject_noise)

    p = sub.add_parser("analyze", parents=[common], help="scaling fits, ratios, difficulty")
    p.add_argument("--results", required=True)
    p.add_argument("--models", required=True, help="CSV: model_id,total_params_b,family,inference_mode")
    p.add_argument("--bundles", nargs="*", help="bundles for plan-length vs difficulty effect sizes")
    p.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES)
    p.add_argument("--out", default="out")
    _search_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[common], help="summarize a results file")
    p.add_argument("--results", required=True)
    p.add_argument("--slice-by", choices=SLICE_KEYS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    parser.set_defaults(**cfg)
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}  # noqa: SLF001
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"safeplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Out(args.format, args.quiet)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"safeplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SafePlanError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"safeplan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"safeplan: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
