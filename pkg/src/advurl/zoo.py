"""Zeroth-order black-box attack on a class-probability oracle.

Losses (``p`` = clamped class probabilities, ``rho`` >= 0):

* targeted to class b:   ``max(max_{j!=b} log p_j - log p_b, -rho)``
* untargeted from b0:    ``max(log p_b0 - max_{j!=b0} log p_j, -rho)``

Derivative estimates along coordinate j with probe k:

* ``g = (L(a + k e_j) - L(a - k e_j)) / 2k``
* ``h = (L(a + k e_j) - 2 L(a) + L(a - k e_j)) / k^2``

Two coordinate-descent solvers share one loop. Each step draws j uniformly,
spends two probe queries, applies the step, clamps to the box
``|a - a0| <= box_delta`` and spends one query evaluating the new point,
so a run of U updates costs ``1 + 3U`` queries. ``budget_K`` caps U.

* ``scd``: Newton step ``-g/h`` when ``h > 0``, else ``-step_h * g``
* ``adam``: per-coordinate ADAM moments with bias correction, ``-step_h * N^/(sqrt(tau^) + eps)``

The coordinate sequence is drawn up front from ``default_rng(seed)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigInvalid, InvalidClass, OracleFailure

MODES = ("untargeted", "targeted")


@dataclass(frozen=True)
class AttackConfig:
    mode: str = "untargeted"
    rho: float = 0.0
    probe_k: float = 0.1
    step_h: float = 0.2
    alpha1: float = 0.9
    alpha2: float = 0.99
    epsilon: float = 1e-8
    budget_K: int = 1000
    box_delta: float = 3.0
    seed: int = 0
    target: Optional[int] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}")
        if self.rho < 0:
            raise ConfigInvalid("rho must be >= 0")
        for name in ("probe_k", "step_h", "epsilon", "box_delta"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"{name} must be > 0")
        for name in ("alpha1", "alpha2"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must lie in (0, 1)")
        if self.budget_K < 0:
            raise ConfigInvalid("budget_K must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "AttackConfig":
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        if "box_delta" in known and known["box_delta"] is None:
            known["box_delta"] = math.inf
        return cls(**known)


@dataclass
class AdamState:
    N: np.ndarray
    tau: np.ndarray
    U: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), np.zeros(dim, dtype=np.int64))


def adam_update(state: AdamState, j: int, g: float, config: AttackConfig) -> float:
    """Advance the moments of coordinate ``j`` with gradient ``g``; return the step."""
    a1, a2 = config.alpha1, config.alpha2
    state.U[j] += 1
    state.N[j] = a1 * state.N[j] + (1 - a1) * g
    state.tau[j] = a2 * state.tau[j] + (1 - a2) * g * g
    n_hat = state.N[j] / (1 - a1 ** state.U[j])
    tau_hat = state.tau[j] / (1 - a2 ** state.U[j])
    return float(-config.step_h * n_hat / (math.sqrt(tau_hat) + config.epsilon))


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    original: np.ndarray
    adversarial: np.ndarray
    queries: int
    final_loss: float
    success: bool
    l2_distortion: float
    loss_trace: tuple[float, ...]
    updates: int = 0
    coordinates: tuple[int, ...] = field(default=(), repr=False)

    def summary(self) -> dict:
        return {"queries": self.queries, "updates": self.updates, "final_loss": self.final_loss,
                "success": self.success, "l2_distortion": self.l2_distortion}


# -- losses ------------------------------------------------------------------


def _check_class(probs, b):
    if not (isinstance(b, (int, np.integer)) and 0 <= b < probs.shape[-1]):
        raise InvalidClass(f"class {b!r} is not one of 0..{probs.shape[-1] - 1}")


def _other_max(logp: np.ndarray, b) -> np.ndarray:
    masked = logp.copy()
    masked[..., b] = -np.inf
    return masked.max(axis=-1)


def loss_targeted(probs, b: int, rho: float = 0.0):
    p = np.asarray(probs, dtype=np.float64)
    _check_class(p, b)
    logp = np.log(p)
    out = np.maximum(_other_max(logp, b) - logp[..., b], -rho)
    return float(out) if out.ndim == 0 else out


def loss_untargeted(probs, b0: int, rho: float = 0.0):
    p = np.asarray(probs, dtype=np.float64)
    _check_class(p, b0)
    logp = np.log(p)
    out = np.maximum(logp[..., b0] - _other_max(logp, b0), -rho)
    return float(out) if out.ndim == 0 else out


# -- estimators ----------------------------------------------------------------


def _query(oracle, a) -> float:
    try:
        v = float(oracle(a))
    except OracleFailure:
        raise
    except Exception as exc:  # noqa: BLE001 -- any oracle fault is reported uniformly
        raise OracleFailure(f"oracle raised {type(exc).__name__}: {exc}") from exc
    if not math.isfinite(v):
        raise OracleFailure(f"oracle returned {v}")
    return v


def _probe_points(a, j, k):
    a = np.asarray(a, dtype=np.float64)
    if not 0 <= j < a.size:
        raise IndexError(f"coordinate {j} out of range")
    up, down = a.copy(), a.copy()
    up.flat[j] += k
    down.flat[j] -= k
    return up, down


def estimate_gradient(oracle: Callable, a, j: int, probe_k: float) -> float:
    """Symmetric difference quotient along coordinate ``j``; two oracle calls."""
    if not probe_k > 0:
        raise ConfigInvalid("probe_k must be > 0")
    up, down = _probe_points(a, j, probe_k)
    return (_query(oracle, up) - _query(oracle, down)) / (2 * probe_k)


def estimate_hessian(oracle: Callable, a, j: int, probe_k: float, center: float | None = None) -> float:
    """Second difference along ``j``; three oracle calls, two when ``center`` is supplied."""
    if not probe_k > 0:
        raise ConfigInvalid("probe_k must be > 0")
    up, down = _probe_points(a, j, probe_k)
    mid = _query(oracle, np.asarray(a, dtype=np.float64)) if center is None else center
    return (_query(oracle, up) - 2 * mid + _query(oracle, down)) / (probe_k * probe_k)


# -- oracles -----------------------------------------------------------------


class BatchOracle:
    """Row-wise losses plus a success test; counts every evaluated row as one query."""

    def __init__(self, loss_rows: Callable[[np.ndarray], np.ndarray],
                 success_rows: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        self._loss = loss_rows
        self._success = success_rows
        self.queries = 0

    def loss(self, A: np.ndarray) -> np.ndarray:
        self.queries += len(A)
        try:
            out = np.asarray(self._loss(A), dtype=np.float64).reshape(len(A))
        except Exception as exc:  # noqa: BLE001
            raise OracleFailure(f"oracle raised {type(exc).__name__}: {exc}") from exc
        if not np.isfinite(out).all():
            raise OracleFailure("oracle returned a non-finite loss")
        return out

    def success(self, A: np.ndarray, losses: np.ndarray) -> np.ndarray:
        return np.asarray(self._success(A, losses), dtype=bool)

    @classmethod
    def from_function(cls, f: Callable, rho: float = 0.0) -> "BatchOracle":
        """Wrap a scalar loss; success means the loss reached ``-rho``."""
        return cls(lambda A: np.array([_query(f, a) for a in A]), lambda A, L: L <= -rho)


class ModelOracle(BatchOracle):
    """Attack losses over a model's ``predict_proba``.

    ``labels`` are the original classes (untargeted) or the targets
    (targeted), one per attacked row. Success needs the predicted class to
    leave b0 (untargeted) or reach the target, and the loss to be <= -rho.
    """

    def __init__(self, model, labels: Sequence[int], config: AttackConfig):
        self.model = model
        self.labels = np.asarray(labels, dtype=np.int64)
        self.config = config
        self.rows = np.arange(len(self.labels))
        super().__init__(self._losses, self._successes)

    def bind(self, rows: np.ndarray) -> None:
        self.rows = np.asarray(rows, dtype=np.int64)

    def _losses(self, A):
        p = self.model.predict_proba(A)
        logp = np.log(p)
        b = np.repeat(self.labels[self.rows], len(A) // len(self.rows))
        own = logp[np.arange(len(A)), b]
        masked = logp.copy()
        masked[np.arange(len(A)), b] = -np.inf
        other = masked.max(axis=1)
        diff = own - other if self.config.mode == "untargeted" else other - own
        return np.maximum(diff, -self.config.rho)

    def _successes(self, A, losses):
        pred = self.model.predict(A)
        b = self.labels[self.rows]
        moved = pred != b if self.config.mode == "untargeted" else pred == b
        return moved & (losses <= -self.config.rho)


# -- solver ------------------------------------------------------------------


def _run(oracle: BatchOracle, A0: np.ndarray, config: AttackConfig, method: str,
         seeds: Sequence[int]) -> list[AttackOutcome]:
    A0 = np.atleast_2d(np.asarray(A0, dtype=np.float64))
    m, d = A0.shape
    A = A0.copy()
    K, k = config.budget_K, config.probe_k
    coords = np.array([np.random.default_rng(s).integers(0, d, size=K) for s in seeds],
                      dtype=np.int64).reshape(m, K)
    queries = np.zeros(m, dtype=np.int64)
    updates = np.zeros(m, dtype=np.int64)
    states = [AdamState.zeros(d) for _ in range(m)]
    rows = np.arange(m)

    def evaluate(idx, P):
        if isinstance(oracle, ModelOracle):
            oracle.bind(idx)
        L = oracle.loss(P)
        queries[idx] += 1
        return L, oracle.success(P, L)

    loss, done = evaluate(rows, A)
    traces = [[float(x)] for x in loss]
    lo, hi = A0 - config.box_delta, A0 + config.box_delta
    for step in range(K):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        j = coords[active, step]
        P = np.repeat(A[active], 2, axis=0)
        P[0::2, :][np.arange(active.size), j] += k
        P[1::2, :][np.arange(active.size), j] -= k
        if isinstance(oracle, ModelOracle):
            oracle.bind(np.repeat(active, 2))
        probe = oracle.loss(P)
        queries[active] += 2
        up, down = probe[0::2], probe[1::2]
        g = (up - down) / (2 * k)
        if method == "scd":
            h = (up - 2 * loss[active] + down) / (k * k)
            eta = np.where(h > 0, -g / np.where(h > 0, h, 1.0), -config.step_h * g)
        else:
            eta = np.array([adam_update(states[i], int(jj), float(gg), config)
                            for i, jj, gg in zip(active, j, g)])
        A[active, j] = np.clip(A[active, j] + eta, lo[active, j], hi[active, j])
        updates[active] += 1
        new_loss, new_done = evaluate(active, A[active])
        loss[active] = new_loss
        done[active] = new_done
        for i, v in zip(active, new_loss):
            traces[i].append(float(v))
    out = []
    for i in range(m):
        u = int(updates[i])
        out.append(AttackOutcome(A0[i].copy(), A[i].copy(), int(queries[i]), float(loss[i]), bool(done[i]),
                                 float(np.linalg.norm(A[i] - A0[i])), tuple(traces[i]), u,
                                 tuple(int(c) for c in coords[i, :u])))
    return out


def _as_oracle(oracle, config: AttackConfig) -> BatchOracle:
    return oracle if isinstance(oracle, BatchOracle) else BatchOracle.from_function(oracle, config.rho)


def attack_scd(oracle, a0, config: AttackConfig) -> AttackOutcome:
    """Stochastic coordinate descent with a guarded Newton step."""
    return _run(_as_oracle(oracle, config), a0, config, "scd", [config.seed])[0]


def attack_adam_scd(oracle, a0, config: AttackConfig) -> AttackOutcome:
    """Coordinate-wise ADAM descent."""
    return _run(_as_oracle(oracle, config), a0, config, "adam", [config.seed])[0]


def sample_seed(root: int, i: int) -> int:
    return int(np.random.SeedSequence([root, i]).generate_state(1)[0])


def attack_batch(model, X, labels, config: AttackConfig, method: str = "adam") -> list[AttackOutcome]:
    """Attack every row of ``X``; row i behaves exactly like a single attack with
    ``seed = sample_seed(config.seed, i)``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    seeds = [sample_seed(config.seed, i) for i in range(len(X))]
    return _run(ModelOracle(model, labels, config), X, config, method, seeds)


@dataclass(frozen=True)
class AttackReport:
    n_test: int
    n_attacked: int
    clean_accuracy: float
    robust_accuracy: float
    attack_success_rate: Optional[float]
    outcomes: tuple[AttackOutcome, ...] = field(repr=False, default=())
    attacked_rows: tuple[int, ...] = field(repr=False, default=())

    def row(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in ("outcomes", "attacked_rows")}


def evaluate_attack(model, X, y, config: AttackConfig) -> AttackReport:
    """Untargeted ADAM attack on every correctly classified row.

    ``robust_accuracy`` is the percentage of all test rows that are still
    classified correctly afterwards; ``attack_success_rate`` is the
    percentage of attacked rows whose attack succeeded.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    config = replace(config, mode="untargeted")
    correct = np.flatnonzero(model.predict(X) == y)
    outcomes = attack_batch(model, X[correct], y[correct], config) if correct.size else []
    still = sum(int(model.predict(o.adversarial)[0] == y[i]) for o, i in zip(outcomes, correct))
    n = len(y)
    succ = sum(o.success for o in outcomes)
    return AttackReport(n, int(correct.size), 100.0 * correct.size / n if n else 0.0,
                        100.0 * still / n if n else 0.0,
                        100.0 * succ / len(outcomes) if outcomes else None,
                        tuple(outcomes), tuple(int(i) for i in correct))


def attack_accuracy_rate(model, X, y, config: AttackConfig) -> float:
    """Robust accuracy in percent."""
    return evaluate_attack(model, X, y, config).robust_accuracy


def write_outcomes_jsonl(path, report: AttackReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, o in zip(report.attacked_rows, report.outcomes):
            fh.write(json.dumps({"row": i, **o.summary()}, sort_keys=True) + "\n")
