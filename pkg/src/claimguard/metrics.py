"""Binary classification metrics with fraud (1) as the positive class.

Zero-denominator conventions: precision, recall, specificity, and F1
fall back to 0.0 and the report notes which metrics were degenerate.
Cohen's kappa falls back to 0.0 when chance agreement is exactly 1. The
ROC sweep walks distinct scores in descending order with tied scores
grouped into a single step; the area is accumulated from integer pair
counts, so it equals the tie-aware pairwise concordance
P(score+ > score-) + 0.5 * P(score+ = score-) up to one float division.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMatrix, SingleClass
from .validation import as_binary_vector, check_same_length


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_json_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def classify(scores, threshold: float) -> np.ndarray:
    """Label 1 where score >= threshold (probability-like scores)."""
    return (np.asarray(scores, dtype=np.float64) >= threshold).astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    check_same_length(y_true, y_pred, "labels/predictions")
    t = as_binary_vector(y_true, name="y_true")
    if t.shape[0] == 0:
        raise EmptyMatrix("cannot build a confusion matrix from zero rows")
    p = as_binary_vector(y_pred, n_rows=t.shape[0], name="y_pred")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int, flags: list[str], name: str) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def scalar_metrics(cm: ConfusionMatrix) -> tuple[dict[str, float], list[str]]:
    """Accuracy, precision, recall, specificity, F1, plus the names of
    any metrics that hit a zero denominator."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix holds zero rows")
    flags: list[str] = []
    precision = _ratio(cm.tp, cm.tp + cm.fp, flags, "precision")
    recall = _ratio(cm.tp, cm.tp + cm.fn, flags, "recall")
    specificity = _ratio(cm.tn, cm.tn + cm.fp, flags, "specificity")
    if precision + recall == 0.0:
        flags.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    metrics = {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "specificity": specificity,
        "f1": f1,
    }
    return metrics, flags


def cohen_kappa(cm: ConfusionMatrix) -> float:
    """(p_o - p_e) / (1 - p_e) computed from integer counts; 0.0 when
    chance agreement p_e is exactly 1."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix holds zero rows")
    n = cm.total
    observed = n * (cm.tp + cm.tn)
    expected = (cm.tp + cm.fn) * (cm.tp + cm.fp) + (cm.fp + cm.tn) * (cm.fn + cm.tn)
    denominator = n * n - expected
    if denominator == 0:
        return 0.0
    return (observed - expected) / denominator


def roc_points(scores, labels) -> tuple[list[tuple[float, float]], float]:
    """ROC curve and AUC via a descending sweep over distinct scores.

    Returns ((fpr, tpr) points from (0,0) to (1,1), area). Requires both
    classes present.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = as_binary_vector(labels, name="labels")
    check_same_length(s, y)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes present")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]

    points = [(0.0, 0.0)]
    tp = fp = 0
    area2 = 0  # twice the area, accumulated in integer pair counts
    i = 0
    n = len(s_sorted)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        tp_new = tp + int(np.sum(y_sorted[i:j] == 1))
        fp_new = fp + (j - i) - int(np.sum(y_sorted[i:j] == 1))
        area2 += (fp_new - fp) * (tp_new + tp)
        tp, fp = tp_new, fp_new
        points.append((fp / n_neg, tp / n_pos))
        i = j
    auc = area2 / (2 * n_pos * n_neg)
    return points, auc


def roc_auc(scores, labels) -> float:
    return roc_points(scores, labels)[1]


@dataclass
class EvaluationReport:
    confusion_matrix: ConfusionMatrix
    metrics: dict[str, float]
    kappa: float
    auc: float
    roc: list[tuple[float, float]]
    threshold: float
    decision_rule: str  # "ge" (score >= t) or "gt" (error > t)
    zero_division_flags: list[str] = field(default_factory=list)
    threshold_table: list[dict] | None = None

    def to_json_dict(self) -> dict:
        payload = {
            "confusion": self.confusion_matrix.to_json_dict(),
            "metrics": dict(self.metrics),
            "kappa": self.kappa,
            "auc": self.auc,
            "roc": [[fpr, tpr] for fpr, tpr in self.roc],
            "threshold": self.threshold,
            "decision_rule": self.decision_rule,
            "zero_division_flags": list(self.zero_division_flags),
        }
        if self.threshold_table is not None:
            payload["threshold_table"] = self.threshold_table
        return payload


def evaluate(scores, labels, threshold: float, decision_rule: str = "ge") -> EvaluationReport:
    """Full evaluation of continuous scores against binary labels."""
    s = np.asarray(scores, dtype=np.float64)
    y = as_binary_vector(labels, name="labels")
    check_same_length(s, y)
    if decision_rule == "ge":
        predictions = (s >= threshold).astype(np.int64)
    elif decision_rule == "gt":
        predictions = (s > threshold).astype(np.int64)
    else:
        raise ValueError(f"decision_rule must be 'ge' or 'gt', got {decision_rule!r}")
    cm = confusion(y, predictions)
    metrics, flags = scalar_metrics(cm)
    points, auc = roc_points(s, y)
    return EvaluationReport(
        confusion_matrix=cm,
        metrics=metrics,
        kappa=cohen_kappa(cm),
        auc=auc,
        roc=points,
        threshold=float(threshold),
        decision_rule=decision_rule,
        zero_division_flags=flags,
    )


def write_report_json(report: EvaluationReport, path: str | os.PathLike, extra: dict | None = None) -> None:
    payload = report.to_json_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_roc_csv(report: EvaluationReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in report.roc:
            writer.writerow([repr(fpr), repr(tpr)])


def threshold_sweep(scores, labels, thresholds, decision_rule: str = "ge") -> list[dict]:
    """Metric trade-off table over candidate thresholds."""
    rows = []
    for t in thresholds:
        report = evaluate(scores, labels, float(t), decision_rule)
        rows.append(
            {
                "threshold": float(t),
                "precision": report.metrics["precision"],
                "recall": report.metrics["recall"],
                "f1": report.metrics["f1"],
                "accuracy": report.metrics["accuracy"],
            }
        )
    return rows


def write_sweep_csv(rows: list[dict], path: str | os.PathLike) -> None:
    """Write a sweep table; uses the union key order of the first row."""
    if rows:
        columns = list(rows[0].keys())
    else:
        columns = ["threshold", "precision", "recall", "f1", "accuracy"]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(row[c])) for c in columns])
