"""Classification metrics and agreement statistics.

Everything here is deliberately hand-rolled: the reserved NO_LABEL class for
undecodable predictions, the zero-division rule, and the lower-middle median
are all harness-specific contracts that library defaults get subtly wrong.

Weighted F1 = Σ_c support_c · F1_c / Σ_c support_c, with gold-count supports.

Fleiss kappa over an items × categories count matrix with constant row sum n:
    P_i  = (Σ_c k_ic² − n) / (n(n−1))          per-item agreement
    P̄    = mean_i P_i
    p_c  = Σ_i k_ic / (N·n)                     category marginals
    P̄_e  = Σ_c p_c²
    κ    = (P̄ − P̄_e) / (1 − P̄_e)
Bands follow the Landis–Koch cut points 0 / 0.20 / 0.40 / 0.60 / 0.80.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .decode import NO_LABEL
from .errors import DegenerateAgreement, EmptyPairs, UnequalRaterCounts

Pairs = Sequence[tuple[str | None, str]]


@dataclass(frozen=True)
class ClassRow:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassificationReport:
    rows: tuple[ClassRow, ...]
    macro_avg: Averages
    weighted_avg: Averages
    total_support: int

    @property
    def weighted_f1(self) -> float:
        return self.weighted_avg.f1

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "label": r.label,
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                    "support": r.support,
                }
                for r in self.rows
            ],
            "macro_avg": vars(self.macro_avg).copy(),
            "weighted_avg": vars(self.weighted_avg).copy(),
            "total_support": self.total_support,
        }


@dataclass(frozen=True)
class AgreementResult:
    kappa: float
    band: str
    raters: int
    items: int

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "band": self.band, "raters": self.raters, "items": self.items}


@dataclass(frozen=True)
class BootstrapCI:
    point: float
    lower: float
    upper: float
    resamples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "resamples": self.resamples,
            "seed": self.seed,
        }


def _divide(num: float, den: float) -> float:
    return num / den if den else 0.0


def classification_report(pairs: Pairs, label_universe: Sequence[str]) -> ClassificationReport:
    """Per-class precision/recall/F1 plus macro and support-weighted averages.

    None predictions count as the reserved NO_LABEL class, which is never
    correct and carries zero gold support; its row appears only when a None
    prediction occurred. Macro and weighted averages run over the universe
    rows only.
    """
    if not pairs:
        raise EmptyPairs("no (predicted, gold) pairs")
    universe = list(dict.fromkeys(label_universe))
    if NO_LABEL in universe:
        raise ValueError(f"{NO_LABEL} is reserved and cannot be in the label universe")
    known = set(universe)

    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    saw_none = False
    for predicted, gold in pairs:
        if gold not in known:
            raise ValueError(f"gold label {gold!r} not in label universe")
        if predicted is None:
            pred_class = NO_LABEL
            saw_none = True
        else:
            pred_class = predicted
            if pred_class not in known:
                raise ValueError(f"predicted label {predicted!r} not in label universe")
        if pred_class == gold:
            tp[gold] += 1
        else:
            fp[pred_class] += 1
            fn[gold] += 1

    def row(label: str) -> ClassRow:
        precision = _divide(tp[label], tp[label] + fp[label])
        recall = _divide(tp[label], tp[label] + fn[label])
        f1 = _divide(2 * precision * recall, precision + recall)
        return ClassRow(label, precision, recall, f1, tp[label] + fn[label])

    rows = [row(label) for label in universe]
    total = len(pairs)
    macro = Averages(
        precision=sum(r.precision for r in rows) / len(rows),
        recall=sum(r.recall for r in rows) / len(rows),
        f1=sum(r.f1 for r in rows) / len(rows),
    )
    weighted = Averages(
        precision=sum(r.support * r.precision for r in rows) / total,
        recall=sum(r.support * r.recall for r in rows) / total,
        f1=sum(r.support * r.f1 for r in rows) / total,
    )
    if saw_none:
        rows.append(row(NO_LABEL))
    return ClassificationReport(
        rows=tuple(rows), macro_avg=macro, weighted_avg=weighted, total_support=total
    )


def kappa_band(kappa: float) -> str:
    if kappa < 0:
        return "poor"
    if kappa <= 0.20:
        return "slight"
    if kappa <= 0.40:
        return "fair"
    if kappa <= 0.60:
        return "moderate"
    if kappa <= 0.80:
        return "substantial"
    return "almost_perfect"


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> AgreementResult:
    table = np.asarray(counts, dtype=float)
    if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 1:
        raise UnequalRaterCounts("counts must be a non-empty items x categories matrix")
    row_sums = table.sum(axis=1)
    n = row_sums[0]
    if n < 2 or not np.all(row_sums == n):
        raise UnequalRaterCounts("every item needs the same rater count n >= 2")
    items = table.shape[0]

    p_bar = float(np.mean((np.sum(table**2, axis=1) - n) / (n * (n - 1))))
    marginals = table.sum(axis=0) / (items * n)
    p_e = float(np.sum(marginals**2))

    if abs(1.0 - p_e) < 1e-12:
        if abs(1.0 - p_bar) < 1e-12:
            kappa = 1.0
        else:
            raise DegenerateAgreement("chance agreement is 1 but observed agreement is not")
    else:
        kappa = (p_bar - p_e) / (1 - p_e)
    return AgreementResult(kappa=kappa, band=kappa_band(kappa), raters=int(n), items=items)


def bootstrap_ci(
    pairs: Pairs,
    metric: Callable[[Pairs], float],
    resamples: int = 500,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap (2.5/97.5, linear interpolation) of a pair metric."""
    if not pairs:
        raise EmptyPairs("no pairs to resample")
    pairs = list(pairs)
    point = metric(pairs)
    rng = np.random.default_rng(seed)
    n = len(pairs)
    values = np.empty(resamples)
    for i in range(resamples):
        indices = rng.integers(0, n, size=n)
        values[i] = metric([pairs[j] for j in indices])
    lower, upper = np.percentile(values, [2.5, 97.5])
    return BootstrapCI(
        point=point, lower=float(lower), upper=float(upper), resamples=resamples, seed=seed
    )


def majority_baseline(
    train_gold: Sequence[str],
    eval_gold: Sequence[str],
    label_universe: Sequence[str] | None = None,
) -> ClassificationReport:
    """Predict the most frequent training label (ties: lexicographically smallest)."""
    if not train_gold:
        raise EmptyPairs("train_gold must be non-empty")
    counts = Counter(train_gold)
    top = max(counts.values())
    majority = min(label for label, c in counts.items() if c == top)
    if label_universe is None:
        label_universe = sorted(set(train_gold) | set(eval_gold))
    pairs = [(majority, gold) for gold in eval_gold]
    return classification_report(pairs, label_universe)
