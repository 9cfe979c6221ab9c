"""Confusion matrix and per-class / macro classification metrics."""
import os
import sys
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, LabelError

N_CLASSES = 9


def predict_class(probs):
    """Argmax over the last axis; ties go to the lowest index."""
    return np.argmax(np.asarray(probs), axis=-1)


def confusion(predictions, labels, n_classes=N_CLASSES):
    """Counts indexed ``[true, predicted]``."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise InvalidInputError(f"{predictions.size} predictions but {labels.size} labels")
    for name, arr in (("label", labels), ("prediction", predictions)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelError(f"{name} outside 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def f1_score(precision, recall):
    """Harmonic mean, 0 when both inputs are 0."""
    return _safe_ratio(2.0 * np.asarray(precision) * np.asarray(recall), np.asarray(precision) + np.asarray(recall))


@dataclass(frozen=True)
class MetricsReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float

    @property
    def macro_precision(self):
        return float(np.mean(self.precision))

    @property
    def macro_recall(self):
        return float(np.mean(self.recall))

    @property
    def macro_f1(self):
        """Mean of the per-class F1 scores (not the F1 of the macro precision and recall)."""
        return float(np.mean(self.f1))


def compute_metrics(cm):
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise InvalidInputError("confusion matrix is empty")
    tp = np.diag(cm)
    precision = _safe_ratio(tp, cm.sum(axis=0))
    recall = _safe_ratio(tp, cm.sum(axis=1))
    return MetricsReport(precision, recall, f1_score(precision, recall), cm.sum(axis=1), float(tp.sum() / total))


def merge_confusions(*cms):
    return np.sum([np.asarray(c, dtype=np.int64) for c in cms], axis=0)


# -- report formatting -------------------------------------------------------

def use_color(stream=None):
    stream = stream or sys.stdout
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _bold(text, color):
    return f"\033[1m{text}\033[0m" if color else text


def format_table(report, color=False):
    """Plain-text table: one row per class, then accuracy and macro averages."""
    head = f"{'Class #':<14}{'Precision':>10}{'Recall':>10}{'F1-Score':>10}{'# Data':>10}"
    lines = [_bold(head, color), "-" * len(head)]
    for c in range(report.precision.size):
        lines.append(
            f"{c:<14}{report.precision[c]:>10.2f}{report.recall[c]:>10.2f}"
            f"{report.f1[c]:>10.2f}{int(report.support[c]):>10d}"
        )
    lines.append("-" * len(head))
    lines.append(f"{'Accuracy':<14}{report.accuracy:>10.2f}")
    lines.append(
        f"{'Macro Average':<14}{report.macro_precision:>10.2f}{report.macro_recall:>10.2f}{report.macro_f1:>10.2f}"
    )
    return "\n".join(lines) + "\n"


def format_key_values(report):
    """``key = value`` lines, values with 6 decimals, in a fixed order."""
    lines = [f"accuracy = {report.accuracy:.6f}"]
    lines += [
        f"macro_precision = {report.macro_precision:.6f}",
        f"macro_recall = {report.macro_recall:.6f}",
        f"macro_f1 = {report.macro_f1:.6f}",
    ]
    for c in range(report.precision.size):
        lines += [
            f"class.{c}.precision = {report.precision[c]:.6f}",
            f"class.{c}.recall = {report.recall[c]:.6f}",
            f"class.{c}.f1 = {report.f1[c]:.6f}",
            f"class.{c}.support = {int(report.support[c])}",
        ]
    return "\n".join(lines) + "\n"


def parse_key_values(text):
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
