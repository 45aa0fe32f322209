"""Divergence-based Lloyd k-means shared by the density and SPD solvers."""

import numpy as np

from .errors import ParameterError


def seed_centers(points, k, divergence, rng):
    """k-means++-style seeding: sample proportional to divergence to the nearest center."""
    n = len(points)
    chosen = [int(rng.integers(n))]
    dmin = np.maximum(divergence(points, points[chosen])[:, 0], 0.0)
    for _ in range(1, k):
        total = dmin.sum()
        if total > 0 and np.isfinite(total):
            nxt = int(rng.choice(n, p=dmin / total))
        else:
            # everything already covered (duplicates); take the farthest point
            nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, np.maximum(divergence(points, points[[nxt]])[:, 0], 0.0))
    return np.array(chosen)


def lloyd(points, k, divergence, center, *, seed=0, max_iters=100):
    """Lloyd iterations with a generic divergence and center rule.

    Parameters
    ----------
    points : ndarray, shape (N, ...)
    k : int
        Number of clusters, ``1 <= k <= N``.
    divergence : callable
        ``divergence(points, centers) -> (N, k)`` matrix of divergences from
        each point to each center.
    center : callable
        ``center(indices) -> center`` for the points with those indices.

    Returns
    -------
    centers, labels, history
        ``history`` is the within-cluster divergence sum after each update.
    """
    n = len(points)
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    seeds = seed_centers(points, k, divergence, rng)
    centers = np.array(points[seeds], dtype=float)
    labels = np.argmin(divergence(points, centers), axis=1)
    labels[seeds] = np.arange(k)
    history = []
    for _ in range(max_iters):
        for j in range(k):
            members = np.flatnonzero(labels == j)
            if members.size == 0:
                # re-seed at the point worst served by its current center
                d = divergence(points, centers)
                worst = int(np.argmax(d[np.arange(n), labels]))
                labels[worst] = j
                members = np.array([worst])
            centers[j] = center(members)
        d = divergence(points, centers)
        history.append(float(d[np.arange(n), labels].sum()))
        new = np.argmin(d, axis=1)
        # keep the current label on ties so assignments cannot cycle
        keep = d[np.arange(n), labels] <= d[np.arange(n), new]
        new[keep] = labels[keep]
        if np.array_equal(new, labels):
            break
        labels = new
    return centers, labels, history
