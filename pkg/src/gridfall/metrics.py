"""Confusion matrix, per-class report and ROC/AUC for the damaged (1) class."""

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingleClassLabels


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self):
        """Same matrix with class 0 treated as positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def confusion(labels, predictions) -> ConfusionMatrix:
    y = np.asarray(labels).astype(int).ravel()
    p = np.asarray(predictions).astype(int).ravel()
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.size} labels vs {p.size} predictions")
    if y.size == 0:
        raise LengthMismatch("no samples to evaluate")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def _ratio(num, den):
    # zero denominators report 0 and flag the metric as undefined
    if den == 0:
        return 0.0, True
    return num / den, False


def f1_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _class_row(tp, fp, fn, tn):
    precision, p_undef = _ratio(tp, tp + fp)
    recall, r_undef = _ratio(tp, tp + fn)
    specificity, s_undef = _ratio(tn, tn + fp)
    undefined = [name for name, flag in
                 (("precision", p_undef), ("recall", r_undef), ("specificity", s_undef)) if flag]
    if p_undef or r_undef or precision + recall == 0:
        undefined.append("f1")
    return {
        "precision": precision,
        "recall": recall,
        "sensitivity": recall,
        "specificity": specificity,
        "f1": f1_score(precision, recall),
        "support": tp + fn,
        "undefined": undefined,
    }


def class_report(cm: ConfusionMatrix):
    """Accuracy plus precision/recall/f1/specificity/support per class.

    Keys ``"0"`` and ``"1"`` hold the class rows; each row lists in
    ``undefined`` the metrics whose denominator was zero.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "1": _class_row(cm.tp, cm.fp, cm.fn, cm.tn),
        "0": _class_row(cm.tn, cm.fn, cm.fp, cm.tp),
    }


@dataclass(frozen=True)
class RocCurve:
    thresholds: tuple   # first entry is +inf
    fpr: tuple
    tpr: tuple
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr, self.tpr))


def roc_auc(labels, probabilities) -> RocCurve:
    """ROC from a sweep over the distinct scores, AUC by the trapezoid rule.

    A sample is called positive when its score is >= the threshold; equal
    scores form a single point.
    """
    y = np.asarray(labels).astype(int).ravel()
    s = np.asarray(probabilities, dtype=float).ravel()
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.size} labels vs {s.size} scores")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClassLabels("ROC needs at least one positive and one negative label")

    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last_of_group = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp = np.cumsum(y_sorted == 1)[last_of_group]
    fp = np.cumsum(y_sorted == 0)[last_of_group]
    tpr = np.r_[0, tp] / n_pos
    fpr = np.r_[0, fp] / n_neg
    thresholds = np.r_[np.inf, s_sorted[last_of_group]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(tuple(thresholds.tolist()), tuple(fpr.tolist()), tuple(tpr.tolist()), auc)


def accuracy(labels, predictions):
    cm = confusion(labels, predictions)
    return (cm.tp + cm.tn) / cm.total
