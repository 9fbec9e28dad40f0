"""K-means and the scores used by the benchmarks: ACC, Rand index, trustworthiness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ._errors import ParameterError, ShapeError

__all__ = [
    "ClusteringResult",
    "kmeans",
    "clustering_accuracy",
    "rand_index",
    "trustworthiness",
]

MAX_ITER = 300


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    restarts_used: int
    history: list = field(default_factory=list)


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform(0, total)))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(X, centers, max_iter):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = cdist(X, centers, "sqeuclidean")
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(X.shape[0]), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = X[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centre
                far = int(np.argmax(d2[np.arange(X.shape[0]), labels]))
                centers[c] = X[far]
    inertia = float(np.sum((X - centers[labels]) ** 2))
    history.append(inertia)
    return labels, centers, inertia, history


def kmeans(points, k: int, restarts: int = 20, seed=0, max_iter: int = MAX_ITER) -> ClusteringResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by inertia."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise ParameterError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = _kmeans_pp(X, k, rng)
        labels, centers, inertia, hist = _lloyd(X, centers, max_iter)
        if best is None or inertia < best.inertia:
            best = ClusteringResult(labels, centers, inertia, restarts, hist)
    return best


def _check_pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ShapeError(f"label vectors differ in shape: {pred.shape} vs {truth.shape}")
    return pred, truth


def _contingency(pred, truth):
    _, p_idx = np.unique(pred, return_inverse=True)
    _, t_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((p_idx.max() + 1, t_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (p_idx, t_idx), 1)
    return table


def clustering_accuracy(pred, truth) -> float:
    """Fraction matched under the best one-to-one relabeling (Hungarian matching)."""
    pred, truth = _check_pair(pred, truth)
    if pred.size == 0:
        raise ShapeError("empty labelings")
    table = _contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / pred.size)


def rand_index(pred, truth) -> float:
    """Fraction of sample pairs on which the two partitions agree."""
    pred, truth = _check_pair(pred, truth)
    n = pred.size
    if n < 2:
        raise ShapeError("Rand index needs at least two samples")
    table = _contingency(pred, truth).astype(float)
    total = n * (n - 1) / 2.0
    same_both = (table * (table - 1)).sum() / 2.0
    same_pred = (table.sum(axis=1) * (table.sum(axis=1) - 1)).sum() / 2.0
    same_truth = (table.sum(axis=0) * (table.sum(axis=0) - 1)).sum() / 2.0
    apart_both = total - same_pred - same_truth + same_both
    return float((same_both + apart_both) / total)


def _neighbor_order(X):
    d = cdist(X, X, "sqeuclidean")
    n = d.shape[0]
    d[np.arange(n), np.arange(n)] = np.inf
    # stable sort breaks distance ties by index
    return np.argsort(d, axis=1, kind="stable")[:, :n - 1]


def trustworthiness(embedding, reference, k: int = 5) -> float:
    """Neighbourhood trustworthiness of ``embedding`` with respect to ``reference``.

    ``1 - 2 / (n k (2n - 3k - 1)) * sum_i sum_{j in U_k(i) \\ V_k(i)} (r(i, j) - k)``
    where ``U_k`` / ``V_k`` are the k nearest neighbours in the embedding /
    reference and ``r(i, j)`` is the reference-space rank of ``j`` around
    ``i`` (nearest = 1). Ties are broken by sample index.
    """
    E = np.asarray(embedding, dtype=float)
    R = np.asarray(reference, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if R.ndim == 1:
        R = R[:, None]
    n = E.shape[0]
    if R.shape[0] != n:
        raise ShapeError("embedding and reference have different sample counts")
    if k < 1 or 2 * n - 3 * k - 1 <= 0 or k >= n:
        raise ParameterError(f"k={k} gives a non-positive normalizer for n={n}")
    ref_order = _neighbor_order(R)
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.repeat(np.arange(n), n - 1)
    ranks[rows, ref_order.ravel()] = np.tile(np.arange(1, n), n)
    emb_nn = _neighbor_order(E)[:, :k]
    r = ranks[np.arange(n)[:, None], emb_nn]
    penalty = np.where(r > k, r - k, 0).sum()
    return float(1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty)
