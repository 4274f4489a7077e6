"""Multi-run aggregation: cardinality/AUC summaries, repeatability, speedup, t-tests.

Everything here is a pure function over saved run reports.  The Student-t
p-value comes from a local regularized-incomplete-beta routine (continued
fraction, absolute tolerance 1e-12) so the statistics path has no external
dependency; the test suite checks it against an independent implementation.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

from .engine import MemberReport, RunReport, best_entry

ALPHA = 0.05


@dataclass(frozen=True)
class RepeatedSubset:
    mask_hex: str
    frequency: float  # fraction of runs returning exactly this mask
    cardinality: int
    mean_auc: float


@dataclass(frozen=True)
class BatterySummary:
    variant: str
    n_runs: int
    avg_cardinality: float
    mean_auc: float
    best_fitness_per_run: tuple[float, ...]
    most_repeated: RepeatedSubset | None


@dataclass(frozen=True)
class ComparisonRow:
    variant_a: str
    variant_b: str
    t: float  # reported magnitude of the t statistic
    p: float
    significant: bool


def _check_same_battery(runs: list[RunReport]) -> None:
    if not runs:
        raise ValueError("need at least one run")
    variants = {r.variant for r in runs}
    if len(variants) != 1:
        raise ValueError(f"mixed variants in one battery: {sorted(variants)}")
    datasets = {json.dumps(r.dataset_info, sort_keys=True) for r in runs}
    if len(datasets) != 1:
        raise ValueError("mixed datasets in one battery")


def summarize(runs: list[RunReport]) -> BatterySummary:
    """Average the per-run best members' cardinality and test AUC."""
    _check_same_battery(runs)
    bests = [best_entry(r) for r in runs]
    return BatterySummary(
        variant=runs[0].variant,
        n_runs=len(runs),
        avg_cardinality=sum(b.popcount for b in bests) / len(bests),
        mean_auc=sum(b.test_auc for b in bests) / len(bests),
        best_fitness_per_run=tuple(b.fitness for b in bests),
        most_repeated=repeatability(runs),
    )


def repeatability(runs: list[RunReport], threshold: float = 0.4) -> RepeatedSubset | None:
    """The modal best mask, if it recurs in at least ``threshold`` of the runs.

    Frequency ties break toward higher mean test AUC, then lower cardinality.
    """
    if not runs:
        raise ValueError("need at least one run")
    bests = [best_entry(r) for r in runs]
    groups: dict[str, list[MemberReport]] = {}
    for b in bests:
        groups.setdefault(b.mask_hex, []).append(b)

    def order(item):
        mask_hex, members = item
        mean_auc = sum(m.test_auc for m in members) / len(members)
        return (-len(members), -mean_auc, members[0].popcount)

    mask_hex, members = min(groups.items(), key=order)
    frequency = len(members) / len(runs)
    if frequency < threshold:
        return None
    return RepeatedSubset(
        mask_hex=mask_hex,
        frequency=frequency,
        cardinality=members[0].popcount,
        mean_auc=sum(m.test_auc for m in members) / len(members),
    )


def speedup(sequential_seconds: float, parallel_seconds: float) -> float:
    if sequential_seconds <= 0.0 or parallel_seconds <= 0.0:
        raise ValueError("speedup needs positive wall-clock times")
    return sequential_seconds / parallel_seconds


def format_speedup(value: float) -> str:
    """Two-decimal display, truncated toward zero (14707.06/4729.22 -> '3.10')."""
    return f"{math.floor(value * 100.0) / 100.0:.2f}"


def _betacf(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 400) -> float:
    # continued fraction for the incomplete beta (modified Lentz)
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_tailed_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for a Student-t variable with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if t == 0.0:
        return 1.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def t_test(a, b) -> tuple[float, float]:
    """Two-sample pooled-variance t statistic (signed) and two-tailed p-value.

    The emitted comparison tables report |t|; the sign is kept here so that
    swapping the samples negates the statistic.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least 2 observations")
    mean1 = sum(a) / n1
    mean2 = sum(b) / n2
    ss1 = sum((v - mean1) ** 2 for v in a)
    ss2 = sum((v - mean2) ** 2 for v in b)
    df = n1 + n2 - 2
    pooled_var = (ss1 + ss2) / df
    if pooled_var <= 0.0:
        raise ValueError("zero pooled variance: samples are degenerate")
    t = (mean1 - mean2) / math.sqrt(pooled_var * (1.0 / n1 + 1.0 / n2))
    return t, student_t_two_tailed_p(t, df)


def compare_batteries(x: BatterySummary, y: BatterySummary, alpha: float = ALPHA) -> ComparisonRow:
    """t-test over the two batteries' per-run best fitness, flagged at ``alpha``."""
    if x.n_runs != y.n_runs:
        raise ValueError(f"run counts differ: {x.n_runs} vs {y.n_runs}")
    t, p = t_test(x.best_fitness_per_run, y.best_fitness_per_run)
    return ComparisonRow(x.variant, y.variant, abs(t), p, p < alpha)


SUMMARY_COLUMNS = ("variant", "avg_cardinality", "mean_auc", "repeat_cardinality", "repeat_auc")
COMPARISON_COLUMNS = ("variant_a", "variant_b", "t", "p", "significant")


def summary_rows(summaries: list[BatterySummary]) -> list[dict]:
    rows = []
    for s in summaries:
        rows.append(
            {
                "variant": s.variant,
                "avg_cardinality": s.avg_cardinality,
                "mean_auc": s.mean_auc,
                "repeat_cardinality": s.most_repeated.cardinality if s.most_repeated else None,
                "repeat_auc": s.most_repeated.mean_auc if s.most_repeated else None,
            }
        )
    return rows


def comparison_rows(comparisons: list[ComparisonRow]) -> list[dict]:
    return [
        {
            "variant_a": c.variant_a,
            "variant_b": c.variant_b,
            "t": c.t,
            "p": c.p,
            "significant": c.significant,
        }
        for c in comparisons
    ]


def write_table(rows: list[dict], columns: tuple[str, ...], csv_path, json_path) -> None:
    """Emit one table as CSV (header = ``columns``) and as a JSON list."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in columns})
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1, sort_keys=True)
