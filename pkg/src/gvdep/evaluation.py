"""Match-level cross-validation, F1 scoring and the n_nearest ablation sweep."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from gvdep.features import SLOTS_PER_TEAM

DECISION_THRESHOLD = 0.5
ABLATION_COLUMNS = ("target", "n_nearest", "fold", "precision", "recall", "f1", "positives_in_test")


class TooFewMatches(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    """Test match ids per fold; training matches are the complement."""

    test: tuple[tuple[int, ...], ...]
    seed: int

    @property
    def n_folds(self) -> int:
        return len(self.test)

    @property
    def matches(self) -> tuple[int, ...]:
        return tuple(sorted(m for fold in self.test for m in fold))

    def train(self, fold: int) -> tuple[int, ...]:
        held = set(self.test[fold])
        return tuple(m for m in self.matches if m not in held)

    def sizes(self) -> list[int]:
        return [len(f) for f in self.test]


def make_folds(matches: Sequence[int], n_folds: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then consecutive chunks of ``n // n_folds`` matches.

    The remainder goes to the last folds, one extra match each, so 51
    matches give nine folds of 5 and a final fold of 6.
    """
    ids = sorted(set(int(m) for m in matches))
    if len(ids) != len(matches):
        raise ValueError("duplicate match ids")
    n = len(ids)
    if n_folds < 2 or n < n_folds:
        raise TooFewMatches(f"{n} matches for {n_folds} folds")
    order = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, n_folds)
    sizes = [base] * (n_folds - extra) + [base + 1] * extra
    folds, pos = [], 0
    for size in sizes:
        folds.append(tuple(sorted(ids[i] for i in order[pos:pos + size])))
        pos += size
    return FoldPlan(tuple(folds), seed)


def f1(preds, labels) -> tuple[float, float, float]:
    """(precision, recall, F1); any 0/0 ratio is taken as 0."""
    preds = np.asarray(preds, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if preds.shape != labels.shape:
        raise LengthMismatch(f"{preds.shape} vs {labels.shape}")
    tp = int(np.sum(preds & labels))
    fp = int(np.sum(preds & ~labels))
    fn = int(np.sum(~preds & labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, score


@dataclass(frozen=True)
class FoldScore:
    target: str
    n_nearest: int
    fold: int
    precision: float
    recall: float
    f1: float
    positives_in_test: int


@dataclass(frozen=True)
class BoxStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_stats(values) -> BoxStats:
    """Quartiles plus 1.5*IQR whiskers; points beyond the whiskers are outliers."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return BoxStats(float(v[0]), float(q1), float(med), float(q3), float(v[-1]), float(v.mean()),
                    float(inside.min()), float(inside.max()),
                    tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)]))


@dataclass
class AblationResult:
    scores: list[FoldScore] = field(default_factory=list)

    def f1_matrix(self, target: str) -> tuple[list[int], np.ndarray]:
        """n_nearest values and an (n_values, n_folds) array of F1 scores."""
        rows = [s for s in self.scores if s.target == target]
        ns = sorted({s.n_nearest for s in rows})
        folds = sorted({s.fold for s in rows})
        out = np.full((len(ns), len(folds)), np.nan)
        for s in rows:
            out[ns.index(s.n_nearest), folds.index(s.fold)] = s.f1
        return ns, out

    def box(self, target: str) -> dict[int, BoxStats]:
        ns, mat = self.f1_matrix(target)
        return {n: box_stats(mat[i]) for i, n in enumerate(ns)}

    def mean_f1(self, target: str) -> dict[int, float]:
        ns, mat = self.f1_matrix(target)
        return {n: float(mat[i].mean()) for i, n in enumerate(ns)}


# predictor(target, n_nearest, train_ids, test_ids) -> (probabilities, labels) for the test rows
Predictor = Callable[[str, int, Sequence[int], Sequence[int]], tuple[np.ndarray, np.ndarray]]


def ablate(predict: Predictor, targets: Sequence[str], folds: FoldPlan,
           n_range: Sequence[int] = range(SLOTS_PER_TEAM + 1)) -> AblationResult:
    """Score every (target, n_nearest, fold) cell with ``predict``.

    The predictor owns feature truncation and training; see
    ``gvdep.pipeline.Dataset.fold_predictor`` for the standard one.
    """
    result = AblationResult()
    for target in targets:
        for n in n_range:
            for k in range(folds.n_folds):
                probs, labels = predict(target, n, folds.train(k), folds.test[k])
                p, r, score = f1(np.asarray(probs) >= DECISION_THRESHOLD, labels)
                result.scores.append(FoldScore(target, n, k, p, r, score,
                                               int(np.sum(np.asarray(labels, dtype=bool)))))
    return result


def write_ablation_csv(path, result: AblationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ABLATION_COLUMNS)
        for s in result.scores:
            w.writerow([s.target, s.n_nearest, s.fold, repr(s.precision), repr(s.recall),
                        repr(s.f1), s.positives_in_test])


def read_ablation_csv(path) -> AblationResult:
    out = AblationResult()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.scores.append(FoldScore(row["target"], int(row["n_nearest"]), int(row["fold"]),
                                        float(row["precision"]), float(row["recall"]),
                                        float(row["f1"]), int(row["positives_in_test"])))
    return out


@dataclass(frozen=True)
class PlateauCheck:
    gain_over_zero: float    # mean F1 at n in {3, 4} minus mean F1 at n = 0
    p_value: float           # paired one-sided t-test across folds
    gain_11_over_4: float    # mean F1 at 11 minus mean F1 at 4
    passed: bool


def plateau_check(result: AblationResult, target: str = "gains", alpha: float = 0.05,
                  max_late_gain: float = 0.02) -> PlateauCheck:
    """Does F1 rise from n=0 to n in {3,4} and then flatten out by n=11?"""
    ns, mat = result.f1_matrix(target)
    row = {n: mat[i] for i, n in enumerate(ns)}
    mid = (row[3] + row[4]) / 2
    diff = mid - row[0]
    if np.allclose(diff, diff[0]):
        p = 0.0 if diff[0] > 0 else 1.0
    else:
        p = float(stats.ttest_rel(mid, row[0], alternative="greater").pvalue)
    late = float(row[11].mean() - row[4].mean())
    return PlateauCheck(float(diff.mean()), p, late, p < alpha and late < max_late_gain)


def eleven_dominates(result: AblationResult, target: str) -> bool:
    """True when mean F1 at n=11 is strictly above the mean at every smaller n."""
    means = result.mean_f1(target)
    top = means[SLOTS_PER_TEAM]
    return all(top > m for n, m in means.items() if n < SLOTS_PER_TEAM)
