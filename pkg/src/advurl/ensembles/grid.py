"""Cross-validated search over the number of trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import LabeledDataset, kfold_indices, prepare_split
from .models import EnsembleModel, train

GRID = (1, 100, 200, 500, 1000, 1500)


@dataclass(frozen=True)
class GridRow:
    n_estimators: int
    mean_accuracy: float
    fold_accuracies: tuple[float, ...]


def grid_search(d: LabeledDataset, kind: str, grid=GRID, folds: int = 5, seed: int = 0,
                **overrides) -> tuple[EnsembleModel, list[GridRow]]:
    """Mean k-fold accuracy (percent) per grid point; best by accuracy, ties to fewer trees.

    Each fold trains once with ``max(grid)`` trees and scores every prefix.
    Prefixes equal fresh fits because tree t never depends on trees after it.
    """
    if folds not in (5, 10):
        raise ValueError("folds must be 5 or 10")
    grid = sorted(int(g) for g in grid)
    per_fold: list[list[float]] = []
    for test_idx in kfold_indices(d.labels, folds, seed):
        train_idx = np.setdiff1d(np.arange(len(d)), test_idx)
        Xtr, ytr, Xte, yte, _, _ = prepare_split(d.subset(train_idx), d.subset(test_idx))
        full = train(kind, Xtr, seed=seed, y=ytr, n_estimators=grid[-1], **overrides)
        per_fold.append([100.0 * float(np.mean(full.truncated(n).predict(Xte) == yte)) for n in grid])
    acc = np.array(per_fold)
    table = [GridRow(n, float(acc[:, i].mean()), tuple(acc[:, i].tolist())) for i, n in enumerate(grid)]
    best = max(table, key=lambda r: (r.mean_accuracy, -r.n_estimators))
    Xall, yall, _, _, _, _ = prepare_split(d, d.subset([]))
    model = train(kind, Xall, seed=seed, y=yall, n_estimators=best.n_estimators, **overrides)
    return model, table
