"""Random forest, AdaBoost (SAMME), gradient boosting and regularized boosting.

Every model exposes ``predict_proba`` returning ``[p0, p1]`` rows with p1
clamped to ``[1e-6, 1 - 1e-6]``. Boosted models produce a raw score F:

* adaboost            F = sum_t alpha_t * s_t(x),   s_t = +1/-1 leaf vote,  p1 = sigmoid(F)
* gradient_boost      F = F0 + lr * sum_t tree_t(x), p1 = sigmoid(F) (logistic) or F (squared error)
* regularized_boost   same form as gradient_boost

Training rows are put into a canonical order first, so a model depends on
the set of rows and the seed but not on row order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SchemaMismatch, SingleClass, TooFewRows, UnknownKind
from ..features.schema import SCHEMA
from .tree import DecisionTree, TreeStack, train_cart, train_regression_tree

KINDS = ("random_forest", "adaboost", "gradient_boost", "regularized_boost")
PROB_CLAMP = 1e-6
FORMAT_VERSION = 1

DEFAULTS = {
    "random_forest": {"n_estimators": 100, "max_depth": 10, "max_features": "sqrt", "min_leaf": 1},
    "adaboost": {"n_estimators": 100, "base_depth": 2},
    "gradient_boost": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "loss": "logistic"},
    "regularized_boost": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "lambda": 1.0,
                          "gamma": 0.0, "min_child_weight": 1.0, "objective": "logistic"},
}


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def _xy(data, y=None):
    if y is not None:
        return np.asarray(data, dtype=np.float64), np.asarray(y)
    if isinstance(data, tuple):
        return np.asarray(data[0], dtype=np.float64), np.asarray(data[1])
    return data.matrix(), data.labels


def _canonical(X, y):
    """Sort rows lexicographically by (features..., label)."""
    # lexsort treats the last key as primary
    order = np.lexsort((y, *(X[:, j] for j in reversed(range(X.shape[1])))))
    return X[order], y[order]


def _prepare(data, y=None):
    X, y = _xy(data, y)
    if X.ndim != 2 or len(X) < 2:
        raise TooFewRows("training needs at least two rows")
    y = y.astype(np.int64)
    if set(np.unique(y).tolist()) != {0, 1}:
        raise SingleClass("training data must contain both classes")
    return _canonical(X, y)


@dataclass(eq=False)
class EnsembleModel:
    kind: str
    params: dict
    seed: int
    trees: list[DecisionTree]
    weights: np.ndarray
    init: float = 0.0
    n_features: int = len(SCHEMA)
    schema_hash: str = SCHEMA.digest
    train_info: dict = field(default_factory=dict)
    _stack: TreeStack | None = field(default=None, repr=False)

    @property
    def n_estimators(self) -> int:
        return len(self.trees)

    @property
    def learning_rate(self) -> float:
        return float(self.params.get("learning_rate", 1.0))

    def stack(self) -> TreeStack:
        if self._stack is None:
            self._stack = TreeStack.of(self.trees)
        return self._stack

    def _matrix(self, X) -> np.ndarray:
        schema = getattr(X, "schema", None)
        if schema is not None and schema.digest != self.schema_hash:
            raise SchemaMismatch("feature schema differs from the model's")
        X = np.asarray(getattr(X, "values", X), dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"model expects {self.n_features} slots, got {X.shape[1]}")
        return X

    def decision_function(self, X) -> np.ndarray:
        X = self._matrix(X)
        if not self.trees:
            return np.full(len(X), self.init)
        leaves = self.stack().leaf_values(X)
        if self.kind == "random_forest":
            return leaves[:, :, 1].mean(axis=0)
        if self.kind == "adaboost":
            votes = np.sign(leaves[:, :, 1] - 0.5)
            return self.init + self.weights @ votes
        return self.init + self.learning_rate * leaves[:, :, 0].sum(axis=0)

    def predict_proba(self, X) -> np.ndarray:
        F = self.decision_function(X)
        if self.kind == "random_forest" or self._squared():
            p1 = F
        else:
            p1 = sigmoid(F)
        p1 = np.clip(p1, PROB_CLAMP, 1.0 - PROB_CLAMP)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def _squared(self) -> bool:
        return self.params.get("loss", self.params.get("objective")) == "squared_error"

    def truncated(self, n: int) -> "EnsembleModel":
        """The first ``n`` trees, equal to a fresh fit with ``n_estimators=n``."""
        params = dict(self.params, n_estimators=n)
        return EnsembleModel(self.kind, params, self.seed, self.trees[:n], self.weights[:n], self.init,
                             self.n_features, self.schema_hash, dict(self.train_info))

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"format": FORMAT_VERSION, "kind": self.kind, "params": self.params, "seed": self.seed,
                "schema_hash": self.schema_hash, "n_features": self.n_features, "init": self.init,
                "weights": self.weights.tolist(), "trees": [t.to_json() for t in self.trees]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_json(cls, doc: dict) -> "EnsembleModel":
        if doc.get("kind") not in KINDS:
            raise UnknownKind(f"unknown model kind {doc.get('kind')!r}")
        return cls(doc["kind"], doc["params"], doc["seed"], [DecisionTree.from_json(t) for t in doc["trees"]],
                   np.array(doc["weights"], dtype=np.float64), float(doc["init"]), int(doc["n_features"]),
                   doc["schema_hash"])

    @classmethod
    def loads(cls, text: str) -> "EnsembleModel":
        return cls.from_json(json.loads(text))

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _resolve_max_features(rule, p: int) -> int | None:
    if rule is None:
        return None
    if rule == "sqrt":
        return max(1, int(math.isqrt(p)))
    if rule == "log2":
        return max(1, int(math.log2(p)))
    if isinstance(rule, float):
        return max(1, int(rule * p))
    return int(rule)


def _model(kind, X, params, seed, trees, weights, init, info=None):
    return EnsembleModel(kind, params, int(seed), trees, np.asarray(weights, dtype=np.float64), float(init),
                         X.shape[1], SCHEMA.digest if X.shape[1] == len(SCHEMA) else f"dim{X.shape[1]}",
                         info or {})


def train_random_forest(data, n_estimators: int = 100, max_depth: int = 10, max_features="sqrt",
                        seed: int = 0, min_leaf: int = 1, y=None) -> EnsembleModel:
    """Bootstrap-aggregated Gini trees; tree t draws from ``default_rng([seed, t])``."""
    X, y = _prepare(data, y)
    n, p = X.shape
    mf = _resolve_max_features(max_features, p)
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, n, size=n)
        trees.append(train_cart(X[boot], y[boot], max_depth, min_leaf, mf, rng=rng))
    params = {"n_estimators": n_estimators, "max_depth": max_depth, "max_features": max_features,
              "min_leaf": min_leaf}
    return _model("random_forest", X, params, seed, trees, np.ones(n_estimators), 0.0)


def train_adaboost(data, n_estimators: int = 100, base_depth: int = 2, seed: int = 0, y=None) -> EnsembleModel:
    """Binary SAMME. Misclassified rows are multiplied by ``(1-err)/err`` each round.

    Stops when the weighted error reaches 0.5 or 0; a round-1 learner is kept
    either way so the ensemble is never empty. ``round_weights`` in
    ``train_info`` records the normalized row weights entering each round.
    """
    X, y = _prepare(data, y)
    n = len(y)
    w = np.full(n, 1.0 / n)
    trees, alphas, history, errors = [], [], [], []
    for _ in range(n_estimators):
        history.append(w.copy())
        tree = train_cart(X, y, base_depth, 1, None, w)
        pred = (tree.predict_value(X)[:, 1] > 0.5).astype(np.int64)
        miss = pred != y
        err = float(w[miss].sum())
        errors.append(err)
        if err >= 0.5:
            if not trees:
                e = min(err, 1 - 1e-10)
                trees.append(tree)
                alphas.append(math.log((1 - e) / e))
            break
        if err <= 0.0:
            trees.append(tree)
            alphas.append(math.log((1 - 1e-10) / 1e-10))
            break
        trees.append(tree)
        alphas.append(math.log((1 - err) / err))
        w = np.where(miss, w * ((1 - err) / err), w)
        w = w / w.sum()
    params = {"n_estimators": n_estimators, "base_depth": base_depth}
    info = {"round_weights": history, "errors": errors}
    return _model("adaboost", X, params, seed, trees, alphas, 0.0, info)


def logistic_loss(y, F) -> float:
    """Mean negative log-likelihood of labels under p = sigmoid(F)."""
    F = np.asarray(F, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def _boost(kind, X, y, n_estimators, learning_rate, max_depth, lam, gamma, min_child_weight,
           objective, newton, seed, params):
    yf = y.astype(np.float64)
    if objective == "logistic":
        prior = yf.mean()
        init = math.log(prior / (1 - prior))
    elif objective == "squared_error":
        init = float(yf.mean())
    else:
        raise UnknownKind(f"unknown objective {objective!r}")
    F = np.full(len(y), init)
    trees, trace = [], []
    for _ in range(n_estimators):
        if objective == "logistic":
            p = sigmoid(F)
            g, h = p - yf, (p * (1 - p) if newton else np.ones_like(p))
            trace.append(logistic_loss(yf, F))
        else:
            g, h = F - yf, np.ones_like(F)
            trace.append(float(np.mean((yf - F) ** 2)))
        tree = train_regression_tree(X, g, h, max_depth, 1, lam, gamma, min_child_weight)
        trees.append(tree)
        F = F + learning_rate * tree.predict_value(X)[:, 0]
    trace.append(logistic_loss(yf, F) if objective == "logistic" else float(np.mean((yf - F) ** 2)))
    return _model(kind, X, params, seed, trees, np.ones(len(trees)), init, {"loss_trace": trace})


def train_gradient_boost(data, n_estimators: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
                         seed: int = 0, loss: str = "logistic", y=None) -> EnsembleModel:
    """Stagewise regression trees on the negative gradient; each leaf is the mean residual.

    Mean-residual leaves keep the logistic training loss non-increasing for
    any learning rate up to 8 (the loss curvature is at most 1/4).
    """
    if not 1 <= max_depth <= 5:
        raise ValueError("gradient boosting uses trees of depth 1 to 5")
    X, y = _prepare(data, y)
    params = {"n_estimators": n_estimators, "learning_rate": learning_rate, "max_depth": max_depth,
              "loss": loss}
    return _boost("gradient_boost", X, y, n_estimators, learning_rate, max_depth, 0.0, 0.0, 0.0,
                  loss, False, seed, params)


def train_regularized_boost(data, n_estimators: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
                            lam: float = 1.0, gamma: float = 0.0, seed: int = 0, min_child_weight: float = 1.0,
                            objective: str = "logistic", y=None) -> EnsembleModel:
    """Second-order boosting: leaf ``-G/(H+lam)``, split gain penalized by ``gamma``."""
    X, y = _prepare(data, y)
    params = {"n_estimators": n_estimators, "learning_rate": learning_rate, "max_depth": max_depth,
              "lambda": lam, "gamma": gamma, "min_child_weight": min_child_weight, "objective": objective}
    return _boost("regularized_boost", X, y, n_estimators, learning_rate, max_depth, lam, gamma,
                  min_child_weight, objective, True, seed, params)


def train(kind: str, data, seed: int = 0, y=None, **overrides) -> EnsembleModel:
    """Train ``kind`` with its defaults updated by ``overrides``."""
    if kind not in KINDS:
        raise UnknownKind(f"unknown model kind {kind!r}")
    p = dict(DEFAULTS[kind], **overrides)
    if kind == "random_forest":
        return train_random_forest(data, p["n_estimators"], p["max_depth"], p["max_features"], seed,
                                   p["min_leaf"], y=y)
    if kind == "adaboost":
        return train_adaboost(data, p["n_estimators"], p["base_depth"], seed, y=y)
    if kind == "gradient_boost":
        return train_gradient_boost(data, p["n_estimators"], p["learning_rate"], p["max_depth"], seed,
                                    p["loss"], y=y)
    return train_regularized_boost(data, p["n_estimators"], p["learning_rate"], p["max_depth"], p["lambda"],
                                   p["gamma"], seed, p["min_child_weight"], p["objective"], y=y)


def predict_proba(m: EnsembleModel, v) -> np.ndarray:
    return m.predict_proba(v)


def predict(m: EnsembleModel, v) -> np.ndarray:
    return m.predict(v)
