import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advurl.dataset import prepare_split, split
from advurl.ensembles import train
from advurl.errors import ConfigInvalid, InvalidClass, OracleFailure
from advurl.zoo import (AdamState, AttackConfig, BatchOracle, ModelOracle, adam_update, attack_accuracy_rate,
                        attack_adam_scd, attack_batch, attack_scd, estimate_gradient, estimate_hessian,
                        evaluate_attack, loss_targeted, loss_untargeted, sample_seed, write_outcomes_jsonl)
from advurl.zoo import _run

INF_BOX = math.inf
LN9 = math.log(9)


@pytest.fixture(scope="module")
def victim(corpus_1000):
    tr, te = split(corpus_1000, 0.7, 2)
    Xtr, ytr, Xte, yte, _, _ = prepare_split(tr, te)
    return train("regularized_boost", Xtr, seed=0, y=ytr), Xte, yte


def test_targeted_loss():
    assert loss_targeted([0.9, 0.1], 0) == 0.0
    assert loss_targeted([0.5, 0.5], 0) == 0.0
    assert loss_targeted([0.1, 0.9], 0) == pytest.approx(LN9)


def test_untargeted_loss():
    assert loss_untargeted([0.9, 0.1], 0) == pytest.approx(LN9)
    assert loss_untargeted([0.1, 0.9], 0, rho=0.0) == 0.0
    assert loss_untargeted([0.1, 0.9], 0, rho=1.0) == -1.0
    assert loss_untargeted([0.5, 0.5], 0) == 0.0
    with pytest.raises(InvalidClass):
        loss_untargeted([0.5, 0.5], 2)


def test_estimators_on_simple_oracles():
    a = np.array([3.0])
    assert estimate_gradient(lambda x: x[0] ** 2, a, 0, 0.01) == pytest.approx(6.0, abs=1e-10)
    assert estimate_gradient(lambda x: 7.0, a, 0, 0.01) == 0.0
    assert estimate_gradient(lambda x: abs(x[0]), np.array([0.0]), 0, 0.01) == 0.0
    assert estimate_hessian(lambda x: 5 * x[0] + 1, a, 0, 0.5) == 0.0
    assert estimate_hessian(lambda x: x[0] ** 4, np.array([1.0]), 0, 0.01) == pytest.approx(12.0, abs=1e-2)
    for x in (-2.0, 0.0, 1.5):
        assert estimate_hessian(lambda v: v[0] ** 2, np.array([x]), 0, 0.25) == 2.0


def test_hessian_center_reuse_saves_a_query():
    calls = []

    def f(x):
        calls.append(1)
        return float(x[0] ** 2)

    estimate_hessian(f, np.array([1.0]), 0, 0.5, center=1.0)
    assert len(calls) == 2


def test_logistic_gradient_decays_quadratically():
    f = lambda x: 1 / (1 + math.exp(-x[0]))
    x0 = 0.7
    s = f([x0])
    exact = s * (1 - s)
    errs = [abs(estimate_gradient(f, np.array([x0]), 0, k) - exact) for k in (1e-1, 1e-2, 1e-3)]
    assert all(70 < a / b < 130 for a, b in zip(errs, errs[1:]))


def test_oracle_failures():
    with pytest.raises(OracleFailure):
        estimate_gradient(lambda x: float("nan"), np.zeros(1), 0, 0.1)
    with pytest.raises(OracleFailure):
        estimate_gradient(lambda x: 1 / 0, np.zeros(1), 0, 0.1)


@pytest.mark.parametrize("field,value", [("probe_k", 0.0), ("step_h", -1.0), ("alpha1", 1.0), ("alpha2", 0.0),
                                         ("rho", -0.5), ("budget_K", -1), ("mode", "both")])
def test_config_validation(field, value):
    with pytest.raises(ConfigInvalid):
        AttackConfig(**{field: value})


def test_config_from_dict():
    c = AttackConfig.from_dict({"rho": 50, "box_delta": None, "unknown": 1})
    assert c.rho == 50 and c.box_delta == math.inf


def test_first_adam_step():
    st_ = AdamState.zeros(3)
    eta = adam_update(st_, 1, 2.0, AttackConfig(step_h=0.01))
    assert eta == pytest.approx(-0.01 * 2 / (2 + 1e-8), abs=1e-12)
    assert st_.U.tolist() == [0, 1, 0]
    assert st_.N[1] / (1 - 0.9) == pytest.approx(2.0) and st_.tau[1] / (1 - 0.99) == pytest.approx(4.0)


@given(st.lists(st.tuples(st.integers(0, 3), st.floats(-100, 100)), max_size=40))
def test_adam_state_invariants(steps):
    state = AdamState.zeros(4)
    for j, g in steps:
        adam_update(state, j, g, AttackConfig())
    assert np.all(state.tau >= 0)
    assert state.U.tolist() == [sum(1 for j, _ in steps if j == i) for i in range(4)]


def sq(a):
    return float(np.dot(a, a))


def test_scd_quadratic_convergence():
    out = attack_scd(sq, np.array([3.0, 4.0]), AttackConfig(budget_K=500, box_delta=INF_BOX))
    assert np.linalg.norm(out.adversarial) <= 1e-2
    assert all(b <= a for a, b in zip(out.loss_trace, out.loss_trace[1:]))
    assert out.queries == 1 + 3 * out.updates


def test_already_successful_input_is_untouched():
    out = attack_scd(lambda a: 0.0, np.array([1.0, 2.0]), AttackConfig())
    assert out.updates == 0 and out.queries == 1 and out.success


def test_same_seed_same_run():
    cfg = AttackConfig(budget_K=50, seed=11, box_delta=INF_BOX)
    a0 = np.arange(5.0)
    a, b = attack_adam_scd(sq, a0, cfg), attack_adam_scd(sq, a0, cfg)
    assert a.coordinates == b.coordinates and np.array_equal(a.adversarial, b.adversarial)
    assert a.coordinates == tuple(np.random.default_rng(11).integers(0, 5, size=50).tolist())


def test_adam_quadratic_within_tolerance():
    rng = np.random.default_rng(0)
    finals = []
    for seed in range(5):
        a0 = rng.standard_normal(10)
        a0 *= 5 / np.linalg.norm(a0)
        out = attack_adam_scd(sq, a0, AttackConfig(budget_K=2000, step_h=0.05, box_delta=INF_BOX, seed=seed))
        finals.append(out.final_loss)
    assert np.median(finals) <= 1e-3


def test_adam_vs_scd_queries_soft():
    need = {"adam": [], "scd": []}
    for seed in range(20):
        a0 = np.random.default_rng(seed).standard_normal(10)
        a0 *= 5 / np.linalg.norm(a0)
        cfg = AttackConfig(budget_K=2000, box_delta=INF_BOX, seed=seed)
        for name, fn in (("adam", attack_adam_scd), ("scd", attack_scd)):
            trace = fn(sq, a0, cfg).loss_trace
            hit = next((i for i, v in enumerate(trace) if v <= 1e-3), len(trace))
            need[name].append(1 + 3 * hit)
    if np.median(need["adam"]) > np.median(need["scd"]):
        warnings.warn(f"ADAM needed more queries than Newton SCD on the quadratic: "
                      f"{np.median(need['adam'])} vs {np.median(need['scd'])}")
    assert np.median(need["adam"]) <= 1 + 3 * 2000


@given(st.floats(0.05, 2.0), st.integers(0, 1000), st.sampled_from(["scd", "adam"]))
@settings(max_examples=20, deadline=None)
def test_box_constraint_and_input_untouched(delta, seed, method):
    a0 = np.random.default_rng(seed).normal(0, 3, size=4)
    keep = a0.copy()
    fn = attack_scd if method == "scd" else attack_adam_scd
    out = fn(sq, a0, AttackConfig(budget_K=100, box_delta=delta, seed=seed))
    assert np.all(np.abs(out.adversarial - out.original) <= delta + 1e-12)
    assert np.array_equal(a0, keep) and np.array_equal(out.original, keep)


def test_batch_oracle_counts_queries():
    o = BatchOracle.from_function(sq)
    out = attack_scd(o, np.ones(3), AttackConfig(budget_K=10, box_delta=INF_BOX))
    assert o.queries == out.queries == 1 + 3 * 10


def test_batch_rows_match_single_attacks(victim):
    model, X, y = victim
    cfg = AttackConfig(budget_K=60, seed=4)
    batch = attack_batch(model, X[:5], y[:5], cfg)
    for i in range(5):
        one = _run(ModelOracle(model, y[i:i + 1], cfg), X[i:i + 1], cfg, "adam", [sample_seed(4, i)])[0]
        assert np.array_equal(batch[i].adversarial, one.adversarial)
        assert batch[i].queries == one.queries and batch[i].coordinates == one.coordinates


def test_attack_does_not_mutate_model(victim):
    model, X, y = victim
    before = model.dumps()
    attack_batch(model, X[:3], y[:3], AttackConfig(budget_K=30))
    assert model.dumps() == before


def test_zero_budget_equals_clean_accuracy(victim):
    model, X, y = victim
    rep = evaluate_attack(model, X[:80], y[:80], AttackConfig(budget_K=0))
    assert rep.robust_accuracy == rep.clean_accuracy
    assert 0 <= rep.robust_accuracy <= 100


def test_confidence_fifty_lowers_accuracy(victim, tmp_path):
    model, X, y = victim
    cfg = AttackConfig(rho=50.0, budget_K=1000)
    rep = evaluate_attack(model, X[:100], y[:100], cfg)
    assert rep.clean_accuracy - rep.robust_accuracy >= 2.0
    assert attack_accuracy_rate(model, X[:100], y[:100], cfg) == rep.robust_accuracy
    for o in rep.outcomes:
        assert np.all(np.abs(o.adversarial - o.original) <= cfg.box_delta + 1e-12)
    write_outcomes_jsonl(tmp_path / "o.jsonl", rep)
    assert len((tmp_path / "o.jsonl").read_text().splitlines()) == rep.n_attacked
