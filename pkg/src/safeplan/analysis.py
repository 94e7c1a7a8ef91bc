"""Scaling regressions, bootstrap intervals, effect sizes and task difficulty.

All resampling uses numpy's Philox generator so bounds are reproducible
across platforms for a given seed.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateX,
    DenominatorSlopeNearZero,
    MissingRecord,
    TooFewPoints,
    ZeroPooledVariance,
)
from .metrics import EvalRecord, check_unique

DEFAULT_RESAMPLES = 10_000
METRICS = ("F", "S", "SI")


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class ModelInfo:
    model_id: str
    total_params_b: float
    family: str = ""
    inference_mode: str = ""


def read_models(path: str | Path) -> dict[str, ModelInfo]:
    """Model metadata CSV: model_id, total_params_b, family, inference_mode."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            params = float(row["total_params_b"])
            if not params > 0:
                raise ValueError(f"{row['model_id']}: total_params_b must be positive")
            out[row["model_id"]] = ModelInfo(row["model_id"], params, row.get("family", ""),
                                             row.get("inference_mode", ""))
    return out


@dataclass(frozen=True)
class ModelPoint:
    model_id: str
    total_params_b: float
    F: float
    S: float
    SI: float

    def __post_init__(self):
        if not self.total_params_b > 0:
            raise ValueError("total_params_b must be positive")
        for m in METRICS:
            if not 0.0 <= getattr(self, m) <= 1.0:
                raise ValueError(f"{m} rate outside [0, 1]")


@dataclass(frozen=True)
class RegressionFit:
    beta0: float
    beta1: float
    r2: float
    ci95: tuple[float, float] | None
    seed: int | None
    resamples: int
    n: int

    def to_json(self) -> dict:
        return {
            "beta0": _r(self.beta0),
            "beta1": _r(self.beta1),
            "r2": _r(self.r2),
            "ci95": None if self.ci95 is None else [_r(self.ci95[0]), _r(self.ci95[1])],
            "seed": self.seed,
            "resamples": self.resamples,
            "n": self.n,
        }


def _r(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return round(float(x), 6) + 0.0  # folds -0.0


# --------------------------------------------------------------------------
# least squares


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 1e-24 * max(1.0, float(x @ x)):
        raise DegenerateX("predictor has no spread")
    b1 = float(dx @ (y - ym)) / sxx
    b0 = float(ym - b1 * xm)
    resid = y - (b0 + b1 * x)
    ss_tot = float(((y - ym) ** 2).sum())
    ss_res = float(resid @ resid)
    r2 = 0.0 if ss_tot <= 1e-24 * max(1.0, float(y @ y)) else 1.0 - ss_res / ss_tot
    return b0, b1, r2


def _boot_slopes(x: np.ndarray, ys: Sequence[np.ndarray], idx: np.ndarray) -> list[np.ndarray]:
    """Vectorised OLS slopes for every resample row of ``idx``; NaN where degenerate."""
    xb = x[idx]
    dx = xb - xb.mean(axis=1, keepdims=True)
    sxx = (dx * dx).sum(axis=1)
    ok = sxx > 1e-12
    out = []
    for y in ys:
        yb = y[idx]
        sxy = (dx * (yb - yb.mean(axis=1, keepdims=True))).sum(axis=1)
        slope = np.full(len(idx), np.nan)
        np.divide(sxy, sxx, out=slope, where=ok)
        out.append(slope)
    return out


def _percentile_ci(values: np.ndarray) -> tuple[float, float]:
    lo, hi = np.nanpercentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def _fit(x, y, seed, resamples) -> RegressionFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(x)}")
    b0, b1, r2 = _ols(x, y)
    ci = None
    if resamples > 0:
        idx = rng(seed).integers(0, len(x), size=(resamples, len(x)))
        (slopes,) = _boot_slopes(x, [y], idx)
        ci = _percentile_ci(slopes)
    return RegressionFit(b0, b1, r2, ci, seed if resamples > 0 else None, resamples, len(x))


def loglinear_fit(points: Iterable[tuple[float, float]], seed: int = 0,
                  resamples: int = DEFAULT_RESAMPLES) -> RegressionFit:
    """OLS of ``rate`` on log10(``params``) with a percentile bootstrap CI on the slope.

    Rates are taken as given; pass percentage points to get slopes in
    points per order of magnitude.
    """
    pts = list(points)
    if len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    params = np.array([p for p, _ in pts], dtype=float)
    if np.any(params <= 0):
        raise ValueError("parameter counts must be positive")
    if len(set(params.tolist())) == 1:
        raise DegenerateX("all points share the same parameter count")
    return _fit(np.log10(params), [r for _, r in pts], seed, resamples)


def slope_ratio(fit_num: RegressionFit, fit_den: RegressionFit,
                paired_points: Sequence[tuple[float, float, float]], seed: int = 0,
                resamples: int = DEFAULT_RESAMPLES, eps: float = 1e-9) -> tuple[float, tuple[float, float]]:
    """Ratio of two slopes fitted on the same models, with a paired bootstrap CI.

    ``paired_points`` holds ``(params, numerator_rate, denominator_rate)``
    per model; each replicate resamples models once and refits both lines.
    """
    if abs(fit_den.beta1) < eps:
        raise DenominatorSlopeNearZero(f"denominator slope {fit_den.beta1:.3g} is within {eps} of zero")
    if len(paired_points) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(paired_points)}")
    x = np.log10(np.array([p[0] for p in paired_points], dtype=float))
    num = np.array([p[1] for p in paired_points], dtype=float)
    den = np.array([p[2] for p in paired_points], dtype=float)
    idx = rng(seed).integers(0, len(x), size=(resamples, len(x)))
    s_num, s_den = _boot_slopes(x, [num, den], idx)
    ratios = np.full(resamples, np.nan)
    np.divide(s_num, s_den, out=ratios, where=np.abs(s_den) >= eps)
    return fit_num.beta1 / fit_den.beta1, _percentile_ci(ratios)


def decomposition_fit(points: Iterable[tuple[float, float, float]], seed: int = 0,
                      resamples: int = 0) -> RegressionFit:
    """OLS of S on the product F*SI, from ``(F, SI, S)`` triples."""
    pts = list(points)
    if len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    return _fit([f * si for f, si, _ in pts], [s for _, _, s in pts], seed, resamples)


def cohens_d(group_a: Sequence[float], group_b: Sequence[float]) -> float:
    """(mean_b - mean_a) / pooled standard deviation."""
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise TooFewPoints("each group needs at least 2 values")
    pooled = ((len(a) - 1) * a.var(ddof=1) + (len(b) - 1) * b.var(ddof=1)) / (len(a) + len(b) - 2)
    if pooled <= 0:
        raise ZeroPooledVariance("pooled variance is zero")
    return float((b.mean() - a.mean()) / math.sqrt(pooled))


# --------------------------------------------------------------------------
# task difficulty


@dataclass(frozen=True)
class DifficultyTable:
    panel: tuple[str, ...]
    rows: Mapping[str, Mapping[str, Fraction]]  # task -> metric -> failures/|panel|

    def buckets(self, metric: str) -> dict[Fraction, list[str]]:
        out: dict[Fraction, list[str]] = defaultdict(list)
        for task in sorted(self.rows):
            out[self.rows[task][metric]].append(task)
        return dict(sorted(out.items()))

    def to_json(self) -> dict:
        return {
            "panel": list(self.panel),
            "tasks": {
                t: {m: {"failures": int(v * len(self.panel)), "difficulty": _r(float(v))}
                    for m, v in sorted(ms.items())}
                for t, ms in sorted(self.rows.items())
            },
        }


def difficulty_table(records: Iterable[EvalRecord], panel: Sequence[str] | None = None) -> DifficultyTable:
    records = check_unique(records)
    by_key = {r.key: r for r in records}
    models = tuple(sorted(panel if panel is not None else {r.model_id for r in records}))
    if not models:
        raise MissingRecord("empty model panel")
    tasks = sorted({r.task_id for r in records})
    rows = {}
    for t in tasks:
        row = {}
        for m in METRICS:
            fails = 0
            for model in models:
                rec = by_key.get((t, model))
                if rec is None:
                    raise MissingRecord(f"no record for task {t!r}, model {model!r}")
                fails += 1 - getattr(rec, m)
            row[m] = Fraction(fails, len(models))
        rows[t] = row
    return DifficultyTable(models, rows)


def extreme_bucket_d(table: DifficultyTable, metric: str, values: Mapping[str, float]) -> dict:
    """Cohen's d of ``values`` between the easiest and hardest observed
    difficulty buckets (positive when harder tasks have larger values)."""
    buckets = table.buckets(metric)
    lo, hi = min(buckets), max(buckets)
    a = [values[t] for t in buckets[lo] if t in values]
    b = [values[t] for t in buckets[hi] if t in values]
    return {"metric": metric, "easy_bucket": _r(float(lo)), "hard_bucket": _r(float(hi)),
            "n_easy": len(a), "n_hard": len(b), "d": _r(cohens_d(a, b))}


# --------------------------------------------------------------------------
# whole-panel analysis


def model_points(records: Iterable[EvalRecord], models: Mapping[str, ModelInfo]) -> list[ModelPoint]:
    per: dict[str, list[EvalRecord]] = defaultdict(list)
    for r in check_unique(records):
        per[r.model_id].append(r)
    out = []
    for mid in sorted(per):
        if mid not in models:
            raise MissingRecord(f"model {mid!r} has results but no metadata row")
        rs = per[mid]
        n = len(rs)
        out.append(ModelPoint(mid, models[mid].total_params_b,
                              sum(r.F for r in rs) / n, sum(r.S for r in rs) / n, sum(r.SI for r in rs) / n))
    return out


def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw), None
    except (DegenerateX, TooFewPoints, DenominatorSlopeNearZero, ZeroPooledVariance) as exc:
        return None, f"{type(exc).__name__}: {exc.message}"


def analyze(records: Sequence[EvalRecord], models: Mapping[str, ModelInfo], seed: int = 0,
            resamples: int = DEFAULT_RESAMPLES, task_lengths: Mapping[str, float] | None = None) -> dict:
    """Everything the report needs, as plain JSON-ready data.

    Analyses that cannot be computed on the given data (too few models,
    a flat denominator, single-valued buckets) are reported as null with
    the reason under ``notes``.
    """
    pts = model_points(records, models)
    notes: dict[str, str] = {}
    fits = {}
    for m in METRICS:
        fit, err = _safe(loglinear_fit, [(p.total_params_b, 100 * getattr(p, m)) for p in pts], seed, resamples)
        fits[m] = fit.to_json() if fit else None
        if err:
            notes[f"fit_{m}"] = err
    ratios = {}
    for num in ("S", "SI"):
        name = f"{num}/F"
        f_num, _ = _safe(loglinear_fit, [(p.total_params_b, 100 * getattr(p, num)) for p in pts], seed, 0)
        f_den, _ = _safe(loglinear_fit, [(p.total_params_b, 100 * p.F) for p in pts], seed, 0)
        res, err = (None, "slopes unavailable") if f_num is None or f_den is None else _safe(
            slope_ratio, f_num, f_den, [(p.total_params_b, 100 * getattr(p, num), 100 * p.F) for p in pts],
            seed, resamples)
        ratios[name] = None if res is None else {"ratio": _r(res[0]), "ci95": [_r(res[1][0]), _r(res[1][1])]}
        if err:
            notes[f"ratio_{name}"] = err
    dec, err = _safe(decomposition_fit, [(p.F, p.SI, p.S) for p in pts], seed, resamples)
    if err:
        notes["decomposition"] = err
    table = difficulty_table(records, [p.model_id for p in pts])
    effects = {}
    if task_lengths:
        for m in METRICS:
            res, err = _safe(extreme_bucket_d, table, m, task_lengths)
            effects[m] = res
            if err:
                notes[f"effect_{m}"] = err
    return {
        "seed": seed,
        "resamples": resamples,
        "models": [
            {"model_id": p.model_id, "total_params_b": p.total_params_b,
             "F": _r(p.F), "S": _r(p.S), "SI": _r(p.SI)} for p in pts
        ],
        "fits": fits,
        "slope_ratios": ratios,
        "decomposition": dec.to_json() if dec else None,
        "difficulty": table.to_json(),
        "effort_vs_difficulty": effects,
        "notes": dict(sorted(notes.items())),
    }
