"""K-means with k-means++ seeding, an elbow scan, and a 2-D principal projection."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TooFewPoints


@dataclass(frozen=True, eq=False)
class KMeansResult:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    distortion: float
    iterations: int
    seed: int
    trace: tuple[float, ...] = field(default=())  # distortion after each assignment step


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _assign(X, C):
    d = _sq_dists(X, C)
    a = np.argmin(d, axis=1)
    return a, d[np.arange(len(X)), a]


def _plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [int(rng.integers(n))]
    closest = ((X - X[centers[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            rest = np.setdiff1d(np.arange(n), centers)
            nxt = int(rest[rng.integers(len(rest))])
        else:
            nxt = int(rng.choice(n, p=closest / total))
        centers.append(nxt)
        closest = np.minimum(closest, ((X - X[nxt]) ** 2).sum(1))
    return X[centers].copy()


def lloyd(X: np.ndarray, C: np.ndarray, max_iter: int = 300):
    """Lloyd iterations from centroids ``C``. Returns (C, assignments, distortion, iterations, trace)."""
    C = C.copy()
    k = len(C)
    a, d = _assign(X, C)
    trace = [float(d.sum())]
    it = 0
    for it in range(1, max_iter + 1):
        for j in range(k):
            members = a == j
            if members.any():
                C[j] = X[members].mean(axis=0)
            else:
                # empty cluster: move it onto the point worst served by its centroid
                far = int(np.argmax(d))
                C[j] = X[far]
                a[far] = j
                d[far] = 0.0
        new_a, d = _assign(X, C)
        trace.append(float(d.sum()))
        if np.array_equal(new_a, a):
            a = new_a
            break
        a = new_a
    return C, a, float(d.sum()), it, trace


def _validate(vectors, k_min: int) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        X = X.reshape(len(X), -1)
    if len(X) < max(k_min, 1):
        raise TooFewPoints(f"{len(X)} points cannot form {k_min} clusters")
    return X


def kmeans(vectors, k: int, seed: int = 0, max_iter: int = 300, restarts: int = 10) -> KMeansResult:
    """Best-distortion run over ``restarts`` k-means++ initializations (earliest wins ties)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    X = _validate(vectors, k)
    best = None
    for r in range(max(restarts, 1)):
        rng = np.random.default_rng([seed, k, r])
        C, a, dist, it, trace = lloyd(X, _plusplus(X, k, rng), max_iter)
        if best is None or dist < best.distortion:
            best = KMeansResult(k, C, a, dist, it, seed, tuple(trace))
    return best


def _warm_start(X, prev: KMeansResult, max_iter: int, seed: int) -> KMeansResult:
    _, d = _assign(X, prev.centroids)
    C = np.vstack([prev.centroids, X[int(np.argmax(d))]])
    C, a, dist, it, trace = lloyd(X, C, max_iter)
    return KMeansResult(len(C), C, a, dist, it, seed, tuple(trace))


def elbow_scan(vectors, k_range: Sequence[int] = range(1, 10), seed: int = 0, restarts: int = 10,
               max_iter: int = 300) -> tuple[list[tuple[int, float]], int, list[KMeansResult]]:
    """Distortion per k and the elbow ``argmax_k D(k-1) - 2 D(k) + D(k+1)``.

    Besides the fresh restarts, each k also tries the best (k-1) solution
    plus the farthest point as a new centroid, so the curve never increases
    over consecutive k.
    """
    ks = sorted(int(k) for k in k_range)
    X = _validate(vectors, max(ks))
    results: list[KMeansResult] = []
    for k in ks:
        best = kmeans(X, k, seed, max_iter, restarts)
        if results and results[-1].k == k - 1:
            warm = _warm_start(X, results[-1], max_iter, seed)
            if warm.distortion < best.distortion:
                best = warm
        results.append(best)
    curve = [(r.k, r.distortion) for r in results]
    D = np.array([c[1] for c in curve])
    if len(D) < 3:
        return curve, ks[0], results
    second = D[:-2] - 2 * D[1:-1] + D[2:]
    chosen = ks[1 + int(np.argmax(second))]
    return curve, chosen, results


def _sign_fix(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def principal_axes(vectors, n_components: int = 2, max_iter: int = 5000, tol: float = 1e-13) -> np.ndarray:
    """Top principal directions by orthogonal power iteration with Rayleigh-Ritz ordering."""
    X = np.asarray(vectors, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    d = Xc.shape[1]
    m = min(n_components, d)
    C = Xc.T @ Xc
    scale = float(np.abs(C).max())
    if scale == 0.0:
        return np.zeros((m, d))
    C = C / scale
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((d, m)))
    for _ in range(max_iter):
        Z, _ = np.linalg.qr(C @ Q)
        # subspace distance via projector difference
        delta = np.linalg.norm(Z @ Z.T @ Q - Q)
        Q = Z
        if delta < tol:
            break
    evals, evecs = np.linalg.eigh(Q.T @ C @ Q)
    V = Q @ evecs[:, ::-1]
    return np.array([_sign_fix(V[:, i]) for i in range(m)])


def project_2d(vectors) -> np.ndarray:
    """Per-row (x, y) coordinates on the two leading principal directions."""
    X = np.asarray(vectors, dtype=np.float64)
    if len(X) < 2:
        raise TooFewPoints("projection needs at least two vectors")
    if X.shape[1] == 1:
        X = np.hstack([X, np.zeros_like(X)])
    axes = principal_axes(X, 2)
    return (X - X.mean(axis=0)) @ axes.T


def write_projection_csv(path, xy, clusters, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "cluster", "label"])
        for (x, y), c, lab in zip(xy, clusters, labels):
            w.writerow([repr(float(x)), repr(float(y)), int(c), int(lab)])


def write_curve_csv(path, curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "distortion"])
        for k, dist in curve:
            w.writerow([k, repr(float(dist))])
