import csv
import json

import pytest
from hypothesis import given, strategies as st

from _support import featurized
from advurl.errors import EmptyMatrix
from advurl.evalx import (REPORT_COLUMNS, ConfusionMatrix, EvalReport, eval_matched, eval_mismatched, eval_pair,
                          metrics, write_reports_csv, write_reports_json)


def test_metrics_example():
    m = metrics(ConfusionMatrix(tp=99, tn=98, fp=1, fn=2))
    assert m["accuracy"] == 98.5 and m["precision"] == 99.0
    assert m["fpr"] == pytest.approx(1 / 99) and m["fnr"] == pytest.approx(2 / 101)


def test_metrics_absent_and_perfect():
    assert metrics(ConfusionMatrix(tp=3, fn=1))["fpr"] is None
    assert metrics(ConfusionMatrix(tn=3))["precision"] is None
    p = metrics(ConfusionMatrix(tp=5, tn=5))
    assert p["accuracy"] == 100 and p["fpr"] == 0 and p["fnr"] == 0
    with pytest.raises(EmptyMatrix):
        metrics(ConfusionMatrix())


counts = st.integers(0, 500)


@given(counts, counts, counts, counts)
def test_metric_identities(tp, tn, fp, fn):
    cm = ConfusionMatrix(tp, tn, fp, fn)
    if cm.total == 0:
        return
    m = metrics(cm)
    assert 0 <= m["accuracy"] <= 100
    if m["precision"] is not None:
        assert 0 <= m["precision"] <= 100
    if fp + tn:
        assert m["fpr"] + tn / (fp + tn) == pytest.approx(1.0)
    if tp + fn:
        assert m["fnr"] + tp / (tp + fn) == pytest.approx(1.0)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=50))
def test_confusion_matches_recount(pairs):
    t, p = zip(*pairs)
    cm = ConfusionMatrix.from_predictions(t, p)
    assert cm.total == len(pairs)
    assert cm.tp == sum(1 for a, b in pairs if a == 1 and b == 1)
    assert cm.fp == sum(1 for a, b in pairs if a == 0 and b == 1)
    assert cm.fn == sum(1 for a, b in pairs if a == 1 and b == 0)


def test_eval_matched_shape_and_determinism(corpus_small):
    r1 = eval_matched(corpus_small, "gradient_boost", folds=5, seed=3, n_estimators=20)
    r2 = eval_matched(corpus_small, "gradient_boost", folds=5, seed=3, n_estimators=20)
    assert r1 == r2 and r1.folds == 5
    assert r1.confusion.total == len(corpus_small)
    with pytest.raises(ValueError):
        eval_matched(corpus_small, "gradient_boost", folds=4)


def test_eval_mismatched_two_sets():
    a, b = featurized(30, 201, "a"), featurized(30, 202, "b")
    reps = eval_mismatched([a, b], "random_forest", seed=0, n_estimators=10)
    assert [(r.trained_on, r.tested_on) for r in reps] == [("a", "b"), ("b", "a")]
    assert reps[0] == eval_pair(a, b, "random_forest", seed=0, n_estimators=10)
    with pytest.raises(ValueError):
        eval_mismatched([a], "random_forest")


def test_report_files(tmp_path):
    reps = [EvalReport.build("adaboost", "x", "y", None, 0, ConfusionMatrix(3, 4, 0, 1)),
            EvalReport.build("adaboost", "x", "x", 10, 0, ConfusionMatrix(0, 4, 0, 0))]
    write_reports_csv(reps, tmp_path / "r.csv")
    write_reports_json(reps, tmp_path / "r.json")
    rows = list(csv.reader(open(tmp_path / "r.csv", encoding="utf-8")))
    assert tuple(rows[0]) == REPORT_COLUMNS
    assert rows[1][3] == "" and rows[2][5] == ""
    assert json.loads((tmp_path / "r.json").read_text())[1]["precision"] is None
