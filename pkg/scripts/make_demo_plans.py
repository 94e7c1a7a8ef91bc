"""Generate a synthetic model panel for demos: plans/<model>/<task>.txt and models.csv.

Each synthetic model answers with a reference plan or a corrupted one, with
competence growing in log parameter count. Output is deterministic.

    python scripts/make_demo_plans.py [fixtures/] [plans/] [models.csv]
"""

import csv
import math
import random
import sys
from pathlib import Path

from safeplan.parser import find_bundles, parse_bundle

PANEL = [
    # model_id, total params (B), family, inference mode, output style
    ("demo-1b", 1, "demo", "standard", "bare"),
    ("demo-3b", 3, "demo", "standard", "numbered"),
    ("demo-8b", 8, "demo", "standard", "paren"),
    ("demo-14b", 14, "demo", "reasoning", "func"),
    ("demo-32b", 32, "demo", "standard", "markdown"),
    ("demo-70b", 70, "demo", "reasoning", "numbered"),
    ("demo-400b-moe", 400, "demo", "reasoning", "func"),
]


def render(actions: list[str], style: str) -> str:
    if style == "numbered":
        return "".join(f"{i}. {a}\n" for i, a in enumerate(actions, 1))
    if style == "paren":
        out = []
        for a in actions:
            name, _, rest = a.partition("(")
            args = rest.rstrip(")").replace(",", " ").split()
            out.append("(" + " ".join([name.lower(), *args]) + ")")
        return "\n".join(out) + "\n"
    if style == "markdown":
        return "Here is the plan:\n```\n" + "\n".join(actions) + "\n```\n"
    if style == "bare":
        return "\n".join(a.replace("(", " ").replace(",", "").rstrip(")") for a in actions) + "\n"
    return "\n".join(actions) + "\n"


def corrupt(actions: list[str], rnd: random.Random) -> list[str]:
    kind = rnd.choice(["drop", "hallucinate", "swap", "truncate"])
    acts = list(actions)
    if kind == "drop" and len(acts) > 1:
        del acts[rnd.randrange(len(acts))]
    elif kind == "hallucinate":
        acts.insert(rnd.randrange(len(acts) + 1), "GRASP_CAREFULLY(robot)")
    elif kind == "swap" and len(acts) > 1:
        i = rnd.randrange(len(acts) - 1)
        acts[i], acts[i + 1] = acts[i + 1], acts[i]
    else:
        acts = acts[:-1] or ["WAIT()"]
    return acts


def main(root: str = "fixtures", plans_dir: str = "plans", models_csv: str = "models.csv") -> None:
    bundles = [parse_bundle(p) for p in find_bundles(root)]
    top = math.log10(max(p for _, p, *_ in PANEL))
    for model, params, _, _, style in PANEL:
        c = math.log10(params) / top
        p_feasible, p_safe = 0.35 + 0.6 * c, 0.25 + 0.7 * c
        for b in bundles:
            rnd = random.Random(f"{model}/{b.task_id}")
            base = [line for line in (b.refs["safe"] if rnd.random() < p_safe else
                                      b.refs.get("unsafe") or b.refs["feasible"]).splitlines() if line]
            if rnd.random() >= p_feasible:
                base = corrupt(base, rnd)
            out = Path(plans_dir) / model / f"{b.task_id}.txt"
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(render(base, style), encoding="utf-8")
    with open(models_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_id", "total_params_b", "family", "inference_mode"])
        for model, params, family, mode, _ in PANEL:
            w.writerow([model, params, family, mode])
    print(f"{len(PANEL)} models x {len(bundles)} tasks -> {plans_dir}/, {models_csv}")


if __name__ == "__main__":
    main(*sys.argv[1:])
