"""Seeded k-means (k-means++ init, Lloyd iterations) for the inner-context
grouping of colors and of description embeddings."""

from __future__ import annotations

import numpy as np


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total == 0.0:
            centroids[c] = X[rng.integers(n)]
            continue
        probs = d2 / total
        centroids[c] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((X - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray, k: int, seed: int, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray, float]:
    """Returns (assignments, centroids, inertia); bit-deterministic for a fixed seed.

    An emptied cluster is reseeded to the point farthest from its current
    centroid rather than being dropped.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(X, k, rng)
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                dist_to_own = d2[np.arange(n), new_labels]
                far = int(dist_to_own.argmax())
                centroids[c] = X[far]
                new_labels[far] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = X[labels == c]
            if members.shape[0]:
                centroids[c] = members.mean(axis=0)
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centroids, inertia
