"""Slow, obviously-correct reference computations used only by the tests."""
import itertools
import math

import numpy as np


def naive_multilinear(t, mats):
    t = np.asarray(t, dtype=float)
    out_shape = tuple(m.shape[0] for m in mats)
    out = np.zeros(out_shape)
    for j in itertools.product(*(range(s) for s in out_shape)):
        acc = 0.0
        for i in itertools.product(*(range(d) for d in t.shape)):
            w = t[i]
            for k, m in enumerate(mats):
                w *= m[j[k], i[k]]
            acc += w
        out[j] = acc
    return out


def block_means_loop(y, labels, ranks):
    """Block averages by visiting every entry."""
    y = np.asarray(y)
    sums = np.zeros(ranks)
    counts = np.zeros(ranks)
    for idx in itertools.product(*(range(d) for d in y.shape)):
        b = tuple(labels[k][i] for k, i in enumerate(idx))
        sums[b] += y[idx]
        counts[b] += 1
    return sums / counts


def surjective_labelings(d, r):
    """All label vectors of length d using every label in range(r), in first-occurrence form."""
    out = []
    for lab in itertools.product(range(r), repeat=d):
        if len(set(lab)) != r:
            continue
        seen = []
        for x in lab:
            if x not in seen:
                seen.append(x)
        if seen == list(range(r)):
            out.append(np.array(lab))
    return out


def exhaustive_optimum(y, ranks):
    """Global minimum of ||y - Theta||^2 over all block models with the given ranks."""
    y = np.asarray(y)
    per_mode = [surjective_labelings(d, r) for d, r in zip(y.shape, ranks)]
    best = math.inf
    for labels in itertools.product(*per_mode):
        theta = np.zeros(y.shape)
        for b in itertools.product(*(range(r) for r in ranks)):
            idx = np.ix_(*[np.flatnonzero(labels[k] == b[k]) for k in range(len(ranks))])
            theta[idx] = y[idx].mean()
        best = min(best, float(((y - theta) ** 2).sum()))
    return best


def rand_disagreement_pairs(a, b):
    """1 - Rand index by looping over every pair of items."""
    n = len(a)
    dis = 0
    for i in range(n):
        for j in range(i + 1, n):
            dis += (a[i] == a[j]) != (b[i] == b[j])
    return dis / (n * (n - 1) / 2)


def entry_block_labels(model):
    """Block label tuple of every tensor entry, canonical order."""
    labels = model.labels
    return [tuple(labels[k][i] for k, i in enumerate(idx))
            for idx in itertools.product(*(range(len(l)) for l in labels))]


def penalised_scalar_grid_min(c_ols, n, lam, rho, step=1e-4):
    """Minimiser of n (c - c_ols)^2 + lam * |c|_rho over a grid containing 0."""
    lo = min(c_ols, 0.0) - 1.0
    hi = max(c_ols, 0.0) + 1.0
    grid = np.arange(math.floor(lo / step), math.ceil(hi / step) + 1) * step
    pen = (grid != 0).astype(float) if rho == 0 else np.abs(grid)
    vals = n * (grid - c_ols) ** 2 + lam * pen
    i = int(np.argmin(vals))
    return grid[i], vals[i]
