"""Detection metrics and the matched / mismatched evaluation protocols.

The positive class is malicious (label 1). Accuracy and precision are
percentages; FPR and FNR are fractions. A metric whose denominator is zero
is reported as None.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import LabeledDataset, kfold_indices, prepare_split
from .ensembles import train
from .errors import EmptyMatrix


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        t = np.asarray(y_true).astype(bool)
        p = np.asarray(y_pred).astype(bool)
        return cls(int((t & p).sum()), int((~t & ~p).sum()), int((~t & p).sum()), int((t & ~p).sum()))


def _div(a: int, b: int) -> Optional[float]:
    return a / b if b else None


def metrics(cm: ConfusionMatrix) -> dict:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    precision = _div(cm.tp, cm.tp + cm.fp)
    return {
        "accuracy": 100.0 * (cm.tp + cm.tn) / cm.total,
        "precision": None if precision is None else 100.0 * precision,
        "fpr": _div(cm.fp, cm.fp + cm.tn),
        "fnr": _div(cm.fn, cm.tp + cm.fn),
    }


@dataclass(frozen=True)
class EvalReport:
    model_kind: str
    trained_on: str
    tested_on: str
    folds: Optional[int]
    seed: int
    accuracy: float
    precision: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def build(cls, kind, trained_on, tested_on, folds, seed, cm: ConfusionMatrix) -> "EvalReport":
        return cls(kind, trained_on, tested_on, folds, seed, **metrics(cm),
                   tp=cm.tp, tn=cm.tn, fp=cm.fp, fn=cm.fn)

    @property
    def confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix(self.tp, self.tn, self.fp, self.fn)


def eval_matched(d: LabeledDataset, kind: str, folds: int = 10, seed: int = 0, return_predictions: bool = False,
                 **params):
    """k-fold cross-validation on one dataset with a pooled confusion matrix.

    Encoding and scaling are refit on each training fold. With
    ``return_predictions`` the per-row out-of-fold predictions come back too.
    """
    if folds not in (5, 10):
        raise ValueError("folds must be 5 or 10")
    pred = np.full(len(d), -1, dtype=np.int64)
    cm = ConfusionMatrix()
    for test_idx in kfold_indices(d.labels, folds, seed):
        train_idx = np.setdiff1d(np.arange(len(d)), test_idx)
        Xtr, ytr, Xte, yte, _, _ = prepare_split(d.subset(train_idx), d.subset(test_idx))
        model = train(kind, Xtr, seed=seed, y=ytr, **params)
        p = model.predict(Xte)
        pred[test_idx] = p
        cm = cm + ConfusionMatrix.from_predictions(yte, p)
    report = EvalReport.build(kind, d.name, d.name, folds, seed, cm)
    return (report, pred) if return_predictions else report


def eval_pair(train_d: LabeledDataset, test_d: LabeledDataset, kind: str, seed: int = 0, **params) -> EvalReport:
    Xtr, ytr, Xte, yte, _, _ = prepare_split(train_d, test_d)
    model = train(kind, Xtr, seed=seed, y=ytr, **params)
    cm = ConfusionMatrix.from_predictions(yte, model.predict(Xte))
    return EvalReport.build(kind, train_d.name, test_d.name, None, seed, cm)


def eval_mismatched(datasets: Sequence[LabeledDataset], kind: str, seed: int = 0, **params) -> list[EvalReport]:
    """Train on all of dataset i, test on all of dataset j, for every ordered pair i != j."""
    if len(datasets) < 2:
        raise ValueError("mismatched evaluation needs at least two datasets")
    reports = []
    for i, tr in enumerate(datasets):
        Xtr, ytr, _, _, scaler, encoder = prepare_split(tr, tr.subset([]))
        model = train(kind, Xtr, seed=seed, y=ytr, **params)
        for j, te in enumerate(datasets):
            if i == j:
                continue
            Xte = scaler.apply(te.with_encoding(encoder).matrix())
            cm = ConfusionMatrix.from_predictions(te.labels, model.predict(Xte))
            reports.append(EvalReport.build(kind, tr.name, te.name, None, seed, cm))
    return reports


# -- output -----------------------------------------------------------------

REPORT_COLUMNS = ("Model", "Trained", "Dataset", "Folds", "Accuracy", "Precision", "FPR", "FNR",
                  "TP", "TN", "FP", "FN", "Seed")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports_csv(reports: Sequence[EvalReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow([_cell(x) for x in (r.model_kind, r.trained_on, r.tested_on, r.folds, r.accuracy,
                                           r.precision, r.fpr, r.fnr, r.tp, r.tn, r.fp, r.fn, r.seed)])


def write_reports_json(reports: Sequence[EvalReport], path) -> None:
    Path(path).write_text(json.dumps([asdict(r) for r in reports], indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
