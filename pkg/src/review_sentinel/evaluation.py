"""Binary sentiment classification metrics.

Star ratings map to binary labels, scores map to predictions via a
threshold, and the usual suite follows: confusion matrix, per-class and
averaged precision/recall/F1, a weighted-F1 threshold sweep over a fixed
grid, and the ROC curve with trapezoidal AUC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EvaluationError(ValueError):
    pass


def rating_to_label(rating: float) -> int:
    """Map a 1-5 star rating to 0 (negative, rating <= 3) or 1 (positive)."""
    if not 1.0 <= rating <= 5.0:
        raise EvaluationError(f"rating {rating} outside [1, 5]")
    return 0 if rating <= 3.0 else 1


def apply_threshold(score: float, threshold: float) -> int:
    """Predict 0 when score <= threshold, else 1."""
    return 0 if score <= threshold else 1


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    """Count (prediction, truth) cells over aligned binary label sequences."""
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted_labels, dtype=int)
    if t.shape != p.shape or t.ndim != 1:
        raise EvaluationError("label sequences must be 1-D and the same length")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise EvaluationError("labels must be 0 or 1")
    return ConfusionMatrix(
        tn=int(np.sum((p == 0) & (t == 0))),
        fp=int(np.sum((p == 1) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
        tp=int(np.sum((p == 1) & (t == 1))),
    )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    negative: ClassMetrics
    positive: ClassMetrics
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total: int
    divide_by_zero: bool = field(default=False)


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def report(cm: ConfusionMatrix) -> ClassificationReport:
    """Full metric block from a confusion matrix.

    Per-class precision/recall treat each class in turn as "positive";
    zero denominators yield 0 and set the divide_by_zero flag. Weighted
    averages are support-weighted, so weighted recall equals accuracy.
    """
    total = cm.total
    if total <= 0:
        raise EvaluationError("confusion matrix is empty")
    flagged = False

    pos_p, f1_ = _safe_div(cm.tp, cm.tp + cm.fp)
    flagged |= f1_
    pos_r, f2_ = _safe_div(cm.tp, cm.tp + cm.fn)
    flagged |= f2_
    neg_p, f3_ = _safe_div(cm.tn, cm.tn + cm.fn)
    flagged |= f3_
    neg_r, f4_ = _safe_div(cm.tn, cm.tn + cm.fp)
    flagged |= f4_

    pos_f1, f5_ = _safe_div(2 * pos_p * pos_r, pos_p + pos_r)
    flagged |= f5_
    neg_f1, f6_ = _safe_div(2 * neg_p * neg_r, neg_p + neg_r)
    flagged |= f6_

    support_neg = cm.tn + cm.fp
    support_pos = cm.tp + cm.fn
    accuracy = (cm.tp + cm.tn) / total

    def weighted(neg_val: float, pos_val: float) -> float:
        return (neg_val * support_neg + pos_val * support_pos) / total

    rep = ClassificationReport(
        negative=ClassMetrics(neg_p, neg_r, neg_f1, support_neg),
        positive=ClassMetrics(pos_p, pos_r, pos_f1, support_pos),
        accuracy=accuracy,
        macro_precision=(neg_p + pos_p) / 2,
        macro_recall=(neg_r + pos_r) / 2,
        macro_f1=(neg_f1 + pos_f1) / 2,
        weighted_precision=weighted(neg_p, pos_p),
        weighted_recall=weighted(neg_r, pos_r),
        weighted_f1=weighted(neg_f1, pos_f1),
        total=total,
        divide_by_zero=flagged,
    )
    assert abs(rep.weighted_recall - rep.accuracy) < 1e-12
    return rep


def weighted_f1(true_labels, predicted_labels) -> float:
    return report(confusion(true_labels, predicted_labels)).weighted_f1


def format_report(rep: ClassificationReport, digits: int = 4) -> str:
    """Render the report as an aligned text table (per-class rows, then averages)."""
    header = f"{'':>14}{'precision':>12}{'recall':>12}{'f1-score':>12}{'support':>12}"
    lines = [header, ""]

    def row(name: str, p: float, r: float, f1: float, support: int) -> str:
        return (
            f"{name:>14}{p:>12.{digits}f}{r:>12.{digits}f}"
            f"{f1:>12.{digits}f}{support:>12d}"
        )

    lines.append(row("Negative", rep.negative.precision, rep.negative.recall,
                     rep.negative.f1, rep.negative.support))
    lines.append(row("Positive", rep.positive.precision, rep.positive.recall,
                     rep.positive.f1, rep.positive.support))
    lines.append("")
    lines.append(f"{'accuracy':>14}{'':>24}{rep.accuracy:>12.{digits}f}{rep.total:>12d}")
    lines.append(row("macro avg", rep.macro_precision, rep.macro_recall,
                     rep.macro_f1, rep.total))
    lines.append(row("weighted avg", rep.weighted_precision, rep.weighted_recall,
                     rep.weighted_f1, rep.total))
    return "\n".join(lines)


@dataclass(frozen=True)
class ThresholdSweepResult:
    grid: list[float]
    f1_by_threshold: list[float]
    best_threshold: float
    best_f1: float


def threshold_grid(start: float = -1.0, stop: float = 1.0, step: float = 0.1) -> list[float]:
    """Index-generated grid {start + i*step} of points strictly below stop."""
    if step <= 0:
        raise EvaluationError("grid step must be positive")
    grid = []
    i = 0
    while True:
        t = start + i * step
        if t >= stop:
            break
        grid.append(t)
        i += 1
    return grid


def sweep_thresholds(scores, labels, grid_start: float = -1.0, grid_stop: float = 1.0,
                     grid_step: float = 0.1) -> ThresholdSweepResult:
    """Weighted-F1 sweep over the threshold grid, first strictly-best wins."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if s.size == 0:
        raise EvaluationError("cannot sweep thresholds on empty input")
    if s.shape != y.shape:
        raise EvaluationError("scores and labels must align")
    grid = threshold_grid(grid_start, grid_stop, grid_step)
    if not grid:
        raise EvaluationError("threshold grid is empty")

    f1s = []
    best_threshold = grid[0]
    best_f1 = -1.0
    for t in grid:
        preds = np.where(s <= t, 0, 1)
        f1 = weighted_f1(y, preds)
        f1s.append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best_threshold = t
    return ThresholdSweepResult(grid=grid, f1_by_threshold=f1s,
                                best_threshold=best_threshold, best_f1=best_f1)


@dataclass(frozen=True)
class RocCurve:
    points: list[tuple[float, float]]
    auc: float

    @property
    def fpr(self) -> list[float]:
        return [p[0] for p in self.points]

    @property
    def tpr(self) -> list[float]:
        return [p[1] for p in self.points]


def roc(scores, labels) -> RocCurve:
    """ROC curve over the unique scores as thresholds, descending.

    At each threshold a sample is predicted positive when its score is >=
    the threshold. The curve is anchored at (0,0) and (1,1) and the AUC is
    the trapezoidal sum over consecutive points.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if s.shape != y.shape or s.ndim != 1:
        raise EvaluationError("scores and labels must be aligned 1-D sequences")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC undefined: both classes must be present")

    points = [(0.0, 0.0)]
    for t in sorted(set(s.tolist()), reverse=True):
        pred = s >= t
        tp = int(np.sum(pred & (y == 1)))
        fp = int(np.sum(pred & (y == 0)))
        points.append((fp / n_neg, tp / n_pos))
    points.append((1.0, 1.0))

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (y1 + y0) / 2.0 * (x1 - x0)
    return RocCurve(points=points, auc=auc)
