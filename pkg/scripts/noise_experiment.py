"""Scores a plan panel on each fixture at every noise level.

Verdicts should not move: distractor actions only add vocabulary. The table
also shows how prompt size and the grounded action count grow with noise.

    python scripts/noise_experiment.py [--plans plans/] [--fixtures fixtures/] [--seed 0]
"""

import argparse
from collections import defaultdict

from safeplan.metrics import score
from safeplan.model import all_groundings
from safeplan.noise import LEVELS, NoiseLevel, inject
from safeplan.parser import find_bundles, parse_bundle
from safeplan.prompt import render_prompt
from safeplan.runner import ProviderConfig, collect_plans


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plans", default="plans")
    ap.add_argument("--fixtures", default="fixtures")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    bundles = [parse_bundle(p) for p in find_bundles(args.fixtures)]
    raws = collect_plans(bundles, ProviderConfig("directory", path=args.plans))
    base = {(r.model_id, r.task_id): score(r, b) for r in raws for b in bundles if b.task_id == r.task_id}

    print(f"{'level':>5} {'prompt chars':>12} {'groundings':>10} {'F':>6} {'S':>6} {'SI':>6} {'changed':>7}")
    for level in (0, *LEVELS):
        noisy = {b.task_id: inject(b, NoiseLevel(level, args.seed, allow_any=True)) for b in bundles}
        sums, changed = defaultdict(int), 0
        for r in raws:
            rec = score(r, noisy[r.task_id])
            old = base[(r.model_id, r.task_id)]
            changed += (rec.verdict, rec.SI) != (old.verdict, old.SI)
            for m in ("F", "S", "SI"):
                sums[m] += getattr(rec, m)
        chars = sum(len(render_prompt(b)) for b in noisy.values()) / len(bundles)
        ground = sum(len(all_groundings(b.basic)) for b in noisy.values()) / len(bundles)
        n = len(raws)
        print(f"{level:>5} {chars:>12.0f} {ground:>10.1f} {sums['F'] / n:>6.3f} {sums['S'] / n:>6.3f} "
              f"{sums['SI'] / n:>6.3f} {changed:>7}")


if __name__ == "__main__":
    main()
