"""Coverage of the bootstrap slope interval on synthetic scaling data.

Draws rates = a + slope * log10(params) + N(0, sigma) for models spread
evenly over a parameter range, fits each dataset, and counts how often the
95% interval contains the true slope.

    python scripts/scaling_sim.py --runs 500 --points 18 --sigma 5
    python scripts/scaling_sim.py --sweep 6,12,18,36,72
"""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from safeplan.analysis import loglinear_fit, rng


@dataclass(frozen=True)
class SimConfig:
    runs: int = 500
    points: int = 18
    slope: float = 26.8
    intercept: float = 40.0
    sigma: float = 5.0
    decades: float = 3.0
    resamples: int = 10_000
    seed: int = 0


def coverage(cfg: SimConfig) -> tuple[float, float]:
    """Returns (coverage, mean interval width)."""
    g = rng(cfg.seed)
    x = np.logspace(0, cfg.decades, cfg.points)
    hits, widths = 0, []
    for i in range(cfg.runs):
        y = cfg.intercept + cfg.slope * np.log10(x) + g.normal(0, cfg.sigma, cfg.points)
        lo, hi = loglinear_fit(zip(x, y), seed=i, resamples=cfg.resamples).ci95
        hits += lo <= cfg.slope <= hi
        widths.append(hi - lo)
    return hits / cfg.runs, float(np.mean(widths))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(SimConfig()).items():
        ap.add_argument(f"--{name}", type=type(default), default=default)
    ap.add_argument("--sweep", help="comma-separated point counts to compare")
    args = vars(ap.parse_args())
    sweep = args.pop("sweep")
    base = SimConfig(**args)
    counts = [int(n) for n in sweep.split(",")] if sweep else [base.points]
    print(f"{'points':>6} {'coverage':>9} {'se':>6} {'width':>7} {'time':>6}")
    for n in counts:
        cfg = SimConfig(**{**vars(base), "points": n})
        t0 = time.perf_counter()
        cov, width = coverage(cfg)
        se = (cov * (1 - cov) / cfg.runs) ** 0.5
        print(f"{n:>6} {cov:>9.3f} {se:>6.3f} {width:>7.2f} {time.perf_counter() - t0:>5.1f}s")


if __name__ == "__main__":
    main()
