"""Write oracle reference plans and safety effort into each fixture bundle.

    python scripts/make_refs.py [fixtures/]
"""

import json
import sys
from pathlib import Path

from safeplan.bundle_io import atomic_write, dumps
from safeplan.parser import find_bundles, parse_bundle
from safeplan.planner import reference_pair


def main(root: str = "fixtures") -> None:
    for path in find_bundles(root):
        b = parse_bundle(path)
        ref = reference_pair(b)
        plans = {"safe": ref.safe_plan, "feasible": ref.feasible_plan, "unsafe": ref.unsafe_plan}
        for name, plan in plans.items():
            f = path / "refs" / f"{name}.plan"
            if plan is None:
                f.unlink(missing_ok=True)
            else:
                atomic_write(f, plan.to_text())
        meta_file = path / "meta.json"
        meta = json.loads(meta_file.read_text()) if meta_file.exists() else {"task_id": b.task_id}
        meta["safety_effort"] = ref.safety_effort
        atomic_write(meta_file, dumps(meta))
        print(f"{b.task_id:<20} safe={len(ref.safe_plan)} feasible={len(ref.feasible_plan)} "
              f"unsafe={'-' if ref.unsafe_plan is None else len(ref.unsafe_plan)} effort={ref.safety_effort}")


if __name__ == "__main__":
    main(*sys.argv[1:])
