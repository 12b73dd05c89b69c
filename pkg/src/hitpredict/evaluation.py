"""Confusion matrices, accuracy/precision/recall, test-set construction, reports.

The positive class is always "hit" (label 1). A precision or recall whose
denominator is zero is reported as ``None`` ("undefined"), never as 0 or 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import to_feature_matrix
from .errors import EmptyDatasetError, InsufficientDataError, SchemaError
from .rng import substream

REPORT_COLUMNS = ("model", "split", "tp", "fp", "tn", "fn", "accuracy", "precision", "recall")
UNDEFINED = "undefined"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float | None
    recall: float | None


@dataclass(frozen=True)
class EvalReport:
    model: str
    split: str
    confusion: ConfusionMatrix
    accuracy: float
    precision: float | None
    recall: float | None

    def row(self):
        c = self.confusion
        return [self.model, self.split, c.tp, c.fp, c.tn, c.fn,
                *(_fmt(v) for v in (self.accuracy, self.precision, self.recall))]


def confusion(predictions, truth):
    pred = np.asarray(predictions).astype(np.int64).reshape(-1)
    true = np.asarray(truth).astype(np.int64).reshape(-1)
    if pred.shape != true.shape:
        raise SchemaError(f"length mismatch: {len(pred)} predictions vs {len(true)} labels")
    if len(pred) == 0:
        raise EmptyDatasetError("cannot build a confusion matrix from zero samples")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


def metrics(cm):
    if cm.total == 0:
        raise EmptyDatasetError("metrics of an empty confusion matrix are undefined")
    return Metrics(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else None,
        recall=cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else None,
    )


def evaluate(name, split_name, model, matrix):
    cm = confusion(model.predict(matrix.values), matrix.y)
    m = metrics(cm)
    return EvalReport(name, split_name, cm, m.accuracy, m.precision, m.recall)


def build_test_set(all_tracks, seed=0):
    """Every unique hit plus an equal-size uniform sample of unique non-hits.

    Uniqueness is by track id (first occurrence wins); rows keep input order
    within each class, hits first.
    """
    unique = {}
    for t in all_tracks:
        unique.setdefault(t.id, t)
    hits = [t for t in unique.values() if t.hit]
    nonhits = [t for t in unique.values() if not t.hit]
    if not hits:
        raise InsufficientDataError("test set needs at least one hit")
    if len(nonhits) < len(hits):
        raise InsufficientDataError(
            f"test set needs {len(hits)} non-hits to match the hits, only {len(nonhits)} available")
    rng = substream(seed, "test-set")
    chosen = np.sort(rng.choice(len(nonhits), size=len(hits), replace=False))
    return to_feature_matrix(hits + [nonhits[i] for i in chosen])


def compare(models, validation, test=None):
    """Reports for each (name, model) on validation, then on test if given."""
    reports = [evaluate(name, "validation", model, validation) for name, model in models]
    if test is not None:
        reports += [evaluate(name, "test", model, test) for name, model in models]
    return reports


def overlap(ids_a, ids_b):
    """Number of distinct ids present in both collections."""
    return len(set(ids_a) & set(ids_b))


def _fmt(value):
    return UNDEFINED if value is None else repr(float(value))


def _parse(text):
    return None if text == UNDEFINED else float(text)


def write_report_csv(reports, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow(r.row())


def read_report_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise SchemaError(f"{path}: expected report header {','.join(REPORT_COLUMNS)}")
        return [
            EvalReport(row["model"], row["split"],
                       ConfusionMatrix(*(int(row[k]) for k in ("tp", "fp", "tn", "fn"))),
                       float(row["accuracy"]), _parse(row["precision"]), _parse(row["recall"]))
            for row in reader
        ]
