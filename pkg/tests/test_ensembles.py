import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advurl.dataset import prepare_split, split
from advurl.ensembles import (DEFAULTS, GRID, KINDS, DecisionTree, EnsembleModel, grid_search, predict,
                              predict_proba, train, train_adaboost, train_cart, train_gradient_boost,
                              train_random_forest, train_regression_tree, train_regularized_boost)
from advurl.ensembles.models import logistic_loss
from advurl.ensembles.tree import TreeStack
from advurl.errors import SchemaMismatch, SingleClass


def blobs(n=200, d=5, seed=0, gap=3.0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + gap * y[:, None]
    return X, y


@pytest.fixture(scope="module")
def holdout(corpus_1000):
    tr, te = split(corpus_1000, 0.7, 1)
    Xtr, ytr, Xte, yte, _, _ = prepare_split(tr, te)
    return Xtr, ytr, Xte, yte


def test_cart_separable_1d():
    X = np.linspace(-1, 1, 20)[:, None]
    y = (X[:, 0] >= 0).astype(int)
    t = train_cart(X, y)
    assert t.depth == 1
    assert np.array_equal((t.predict_value(X)[:, 1] > 0.5).astype(int), y)


def test_cart_single_class_is_leaf():
    t = train_cart(np.random.default_rng(0).normal(size=(10, 3)), np.ones(10, dtype=int))
    assert t.n_nodes == 1


def test_cart_respects_heavy_weight():
    X = np.arange(10.0)[:, None]
    y = np.array([0, 0, 0, 0, 1, 0, 0, 0, 0, 0])
    w = np.full(10, 0.01 / 9)
    w[4] = 0.99
    t = train_cart(X, y, max_depth=1, sample_weight=w)
    assert t.predict_value(X[4:5])[0, 1] > 0.5


def test_gini_split_oracle():
    # brute-force weighted Gini over every threshold of a single feature
    rng = np.random.default_rng(3)
    X = rng.integers(0, 6, size=(30, 1)).astype(float)
    y = rng.integers(0, 2, size=30)

    def gini(lab):
        if len(lab) == 0:
            return 0.0
        p = lab.mean()
        return len(lab) * 2 * p * (1 - p)

    vals = np.unique(X[:, 0])
    best = min(((gini(y[X[:, 0] <= (a + b) / 2]) + gini(y[X[:, 0] > (a + b) / 2]), (a + b) / 2)
                for a, b in zip(vals, vals[1:])), key=lambda t: (round(t[0], 12), t[1]))
    t = train_cart(X, y, max_depth=1)
    assert t.threshold[0] == pytest.approx(best[1])


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_tree_structure_invariants(depth, seed):
    X, y = blobs(60, 3, seed, gap=0.5)
    t = train_cart(X, y, max_depth=depth)
    assert t.depth <= depth
    internal = t.feature >= 0
    assert np.all(t.left[internal] > 0) and np.all(t.right[internal] > 0)
    assert np.all(t.left[~internal] == -1)
    assert np.isfinite(t.value).all()
    assert np.allclose(t.value.sum(axis=1), 1.0)


def test_tree_json_round_trip():
    X, y = blobs()
    t = train_cart(X, y, max_depth=4)
    back = DecisionTree.from_json(t.to_json())
    assert np.array_equal(back.predict_value(X), t.predict_value(X))


def test_tree_stack_matches_individual_trees():
    X, y = blobs()
    trees = [train_cart(X, y, max_depth=d) for d in (1, 3, 5)]
    stacked = TreeStack.of(trees).leaf_values(X)
    for i, t in enumerate(trees):
        assert np.array_equal(stacked[i], t.predict_value(X))


def test_regression_tree_lambda_limit():
    X, _ = blobs(40, 2)
    g = np.random.default_rng(0).normal(size=40)
    t = train_regression_tree(X, g, np.ones(40), max_depth=2, lam=1e15)
    assert np.abs(t.value).max() < 1e-12


def test_regularized_matches_gb_on_four_points():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    gb = train_gradient_boost(X, y=y, n_estimators=1, learning_rate=1.0, max_depth=1, loss="squared_error")
    rb = train_regularized_boost(X, y=y, n_estimators=1, learning_rate=1.0, max_depth=1, lam=0.0, gamma=0.0,
                                 min_child_weight=0.0, objective="squared_error")
    # mean 0.5; left residuals -0.5, right +0.5
    assert gb.init == rb.init == 0.5
    for m in (gb, rb):
        assert sorted(m.trees[0].value[m.trees[0].feature < 0, 0].tolist()) == [-0.5, 0.5]
    assert np.array_equal(gb.decision_function(X), rb.decision_function(X))


def test_random_forest_basics(holdout):
    Xtr, ytr, Xte, yte = holdout
    m = train_random_forest(Xtr, y=ytr, n_estimators=100, seed=0)
    assert m.n_estimators == len(m.trees) == 100
    assert (m.predict(Xte) == yte).mean() >= 0.95
    assert train_random_forest(Xtr, y=ytr, n_estimators=100, seed=0).dumps() == m.dumps()
    one = train_random_forest(Xtr, y=ytr, n_estimators=1, seed=0)
    assert one.trees[0].to_json() == m.trees[0].to_json()


def test_forest_prefix_equals_fresh_fit():
    X, y = blobs(120, 4, 1, gap=1.0)
    big = train_random_forest(X, y=y, n_estimators=20, seed=5, max_depth=4)
    small = train_random_forest(X, y=y, n_estimators=7, seed=5, max_depth=4)
    assert big.truncated(7).dumps() == small.dumps()


def test_row_order_invariance():
    X, y = blobs(80, 3, 2, gap=1.0)
    perm = np.random.default_rng(9).permutation(80)
    grid = np.random.default_rng(1).normal(size=(200, 3))
    for kind in KINDS:
        a = train(kind, X, seed=4, y=y, n_estimators=10)
        b = train(kind, X[perm], seed=4, y=y[perm], n_estimators=10)
        assert np.array_equal(a.predict_proba(grid), b.predict_proba(grid)), kind


def test_adaboost_reweighting_oracle():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    m = train_adaboost(X, y=y, n_estimators=2, base_depth=1)
    w0, w1 = m.train_info["round_weights"][:2]
    assert np.allclose(w0, 0.25)
    assert m.train_info["errors"][0] == pytest.approx(0.25)
    miss = (m.trees[0].predict_value(X)[:, 1] > 0.5).astype(int) != y
    expect = w0 * np.where(miss, 3.0, 1.0)
    assert np.allclose(w1, expect / expect.sum())
    assert m.weights[0] == pytest.approx(np.log(3.0))


def test_adaboost_perfect_learner_stops():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    m = train_adaboost(X, y=np.array([0, 0, 1, 1]), n_estimators=50)
    assert len(m.trees) == 1
    assert np.array_equal(m.predict(X), [0, 0, 1, 1])


def test_adaboost_weights_stay_distributions(holdout):
    Xtr, ytr, Xte, yte = holdout
    m = train_adaboost(Xtr, y=ytr, n_estimators=30)
    for w in m.train_info["round_weights"]:
        assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)


def test_gradient_boost_init_and_monotone_loss():
    X, y = blobs(100, 3, 4, gap=0.8)
    m = train_gradient_boost(X, y=y, n_estimators=40, learning_rate=0.5)
    assert m.init == 0.0
    trace = m.train_info["loss_trace"]
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    assert trace[0] == pytest.approx(logistic_loss(y, np.zeros(100)))
    with pytest.raises(ValueError):
        train_gradient_boost(X, y=y, max_depth=6)


@given(st.floats(0.01, 2.0), st.integers(1, 5), st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_gradient_boost_loss_never_rises(lr, depth, seed):
    X, y = blobs(60, 3, seed, gap=0.5)
    trace = train_gradient_boost(X, y=y, n_estimators=10, learning_rate=lr, max_depth=depth).train_info["loss_trace"]
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


@pytest.mark.parametrize("kind", KINDS)
def test_each_kind_separates_synthetic_urls(kind, holdout):
    Xtr, ytr, Xte, yte = holdout
    m = train(kind, Xtr, seed=0, y=ytr)
    assert (m.predict(Xte) == yte).mean() >= 0.95
    assert m.n_estimators == len(m.trees) or kind == "adaboost"


@pytest.mark.parametrize("kind", KINDS)
def test_probabilities(kind):
    X, y = blobs()
    m = train(kind, X, seed=0, y=y, n_estimators=20)
    R = np.random.default_rng(7).normal(0, 3, size=(1000, X.shape[1]))
    P = m.predict_proba(R)
    assert np.all(P >= 0) and np.allclose(P.sum(axis=1), 1.0, atol=1e-9)
    assert np.array_equal(m.predict(R), P.argmax(axis=1))
    assert np.array_equal(predict(m, R[0]), m.predict(R[:1]))
    assert np.array_equal(predict_proba(m, R[0]), P[:1])


def test_unanimous_forest_is_clamped():
    X = np.arange(20.0)[:, None]
    m = train_random_forest(X, y=(X[:, 0] >= 10).astype(int), n_estimators=5)
    assert m.predict_proba(np.array([[100.0]]))[0, 1] == 1 - 1e-6
    assert m.predict_proba(np.array([[-100.0]]))[0, 1] == 1e-6


def test_single_class_rejected():
    with pytest.raises(SingleClass):
        train("random_forest", np.zeros((4, 2)), y=np.ones(4, dtype=int))


def test_schema_mismatch():
    X, y = blobs()
    m = train("random_forest", X, y=y, n_estimators=3)
    with pytest.raises(SchemaMismatch):
        m.predict(np.zeros((2, 7)))


def test_defaults():
    assert DEFAULTS["random_forest"]["max_depth"] == 10 and DEFAULTS["random_forest"]["max_features"] == "sqrt"
    assert DEFAULTS["adaboost"]["base_depth"] == 2
    assert DEFAULTS["gradient_boost"]["learning_rate"] == 0.1 and DEFAULTS["gradient_boost"]["max_depth"] == 3
    assert DEFAULTS["regularized_boost"]["lambda"] == 1.0 and DEFAULTS["regularized_boost"]["gamma"] == 0.0


def test_save_and_load(tmp_path):
    X, y = blobs()
    m = train("regularized_boost", X, y=y, n_estimators=5)
    m.save(tmp_path / "m.json")
    assert EnsembleModel.load(tmp_path / "m.json").dumps() == m.dumps()


def test_grid_search_table(corpus_small):
    model, table = grid_search(corpus_small, "gradient_boost", (1, 5, 20), folds=5, seed=0, max_depth=1)
    assert [r.n_estimators for r in table] == [1, 5, 20]
    best = max(r.mean_accuracy for r in table)
    assert model.n_estimators == min(r.n_estimators for r in table if r.mean_accuracy == best)
    assert table[-1].mean_accuracy >= table[0].mean_accuracy
    assert len(GRID) == 6
    with pytest.raises(ValueError):
        grid_search(corpus_small, "gradient_boost", (1,), folds=3)
