"""Plain Lloyd k-means with k-means++ seeding, used to initialise each mode."""
import numpy as np


def _sq_dists(X, centers, x_sq=None):
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    c_sq = np.einsum("ij,ij->i", centers, centers)
    d = x_sq[:, None] - 2.0 * X @ centers.T + c_sq[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def kmeans_pp_seeds(X, k, rng, n_trials=None):
    """Indices of ``k`` greedy k-means++ seeds among the rows of ``X``.

    Each step samples ``n_trials`` candidates with probability proportional
    to the squared distance to the nearest chosen seed and keeps the one that
    most reduces the total potential (default ``2 + floor(log k)`` trials).
    """
    n = X.shape[0]
    if n_trials is None:
        n_trials = 2 + int(np.log(k))
    x_sq = np.einsum("ij,ij->i", X, X)
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(X, X[chosen], x_sq)[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            cand = rng.choice(n, size=n_trials, p=closest / total)
        else:
            # all remaining points coincide with a chosen seed
            cand = rng.integers(n, size=1)
        d = np.minimum(closest[:, None], _sq_dists(X, X[cand], x_sq))
        best = int(np.argmin(d.sum(axis=0)))
        chosen.append(int(cand[best]))
        closest = d[:, best].copy()
    return np.array(chosen)


def _fill_empty(labels, dist_to_own, k):
    """Move the worst-fitting point of a multi-member cluster into each empty cluster."""
    sizes = np.bincount(labels, minlength=k)
    moved = False
    for r in np.flatnonzero(sizes == 0):
        movable = sizes[labels] > 1
        cand = np.where(movable, dist_to_own, -np.inf)
        a = int(np.argmax(cand))
        sizes[labels[a]] -= 1
        labels[a] = r
        sizes[r] = 1
        dist_to_own[a] = -np.inf
        moved = True
    return moved


def kmeans(X, k, rng, max_iter=50):
    """Cluster the rows of ``X`` into ``k`` non-empty groups.

    Returns integer labels. Ties in the assignment step go to the smallest
    cluster index.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if k == n:
        return np.arange(n, dtype=np.int64)
    x_sq = np.einsum("ij,ij->i", X, X)
    centers = X[kmeans_pp_seeds(X, k, rng)].copy()
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(X, centers, x_sq)
        new = np.argmin(d, axis=1)
        _fill_empty(new, d[np.arange(n), new].copy(), k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        onehot = np.zeros((k, n))
        onehot[labels, np.arange(n)] = 1.0
        centers = (onehot @ X) / counts[:, None]
    return labels
