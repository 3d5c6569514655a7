"""Recovery and clustering accuracy measures."""
import csv
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import BlockModel, Membership, cluster_proportions
from .tensor import DenseTensor, as_array


def mse(theta_true, theta_hat):
    a, b = as_array(theta_true), as_array(theta_hat)
    if a.shape != b.shape:
        raise ValueError(f"dims mismatch: {a.shape} vs {b.shape}")
    diff = (a - b).reshape(-1)
    return float(np.dot(diff, diff)) / diff.size


def rmse(theta_true, theta_hat):
    return math.sqrt(mse(theta_true, theta_hat))


def _labels(m):
    return m.labels if isinstance(m, Membership) else np.asarray(m, dtype=np.int64)


def _num_clusters(m):
    return m.num_clusters if isinstance(m, Membership) else int(np.max(m)) + 1


def contingency(true, est):
    """Integer counts ``N[r, r'] = #{i : true_i = r, est_i = r'}``."""
    t, e = _labels(true), _labels(est)
    if t.size != e.size:
        raise ValueError(f"length mismatch: {t.size} vs {e.size}")
    rt, re_ = _num_clusters(true), _num_clusters(est)
    return np.bincount(t * re_ + e, minlength=rt * re_).reshape(rt, re_)


def confusion(true, est):
    """Mode confusion matrix: ``D[r, r']`` is the fraction of indices with labels ``(r, r')``."""
    n = contingency(true, est)
    return n / _labels(true).size


def mcr(true, est):
    """Misclassification rate: largest non-maximal entry over the columns of the confusion matrix."""
    if _num_clusters(true) != _num_clusters(est):
        raise ValueError(
            f"cluster-count mismatch: {_num_clusters(true)} vs {_num_clusters(est)}")
    return mcr_from_confusion(confusion(true, est))


def mcr_from_confusion(d):
    """Largest second-largest entry over the columns of a confusion matrix."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape[0] < 2:
        return 0.0
    return float(np.sort(d, axis=0)[-2].max())


def _pairs(x):
    x = int(x)
    return x * (x - 1) // 2


def cer(true_model, est_model, dims=None):
    """One minus the Rand index between the entry partitions of two block models.

    Block membership factorises over modes, so the block contingency table is
    the outer product of the per-mode tables and all pair counts reduce to
    products of per-mode sums of squares.
    """
    t_mem, e_mem = true_model.memberships, est_model.memberships
    if true_model.dims != est_model.dims or (dims is not None and tuple(dims) != true_model.dims):
        raise ValueError(f"dims mismatch: {true_model.dims} vs {est_model.dims}")
    n = math.prod(true_model.dims)
    if n < 2:
        return 0.0
    joint_sq = true_sq = est_sq = 1
    for t, e in zip(t_mem, e_mem):
        joint_sq *= int((contingency(t, e).astype(object) ** 2).sum())
        true_sq *= int((t.sizes.astype(object) ** 2).sum())
        est_sq *= int((e.sizes.astype(object) ** 2).sum())
    # sum of C(x, 2) = (sum x^2 - n) / 2 for each family of counts
    disagree = (true_sq - n) // 2 + (est_sq - n) // 2 - 2 * ((joint_sq - n) // 2)
    return disagree / _pairs(n)


def align_labels(true, est):
    """Permutation ``perm`` (est label -> true label) maximising agreement."""
    n = contingency(true, est)
    rows, cols = linear_sum_assignment(-n)
    perm = np.empty(n.shape[1], dtype=np.int64)
    perm[cols] = rows
    return perm


def align_model(true_model, est_model):
    """Relabel ``est_model`` so each mode's clusters best match ``true_model``.

    Requires equal cluster counts on every mode.
    """
    core = est_model.core.array
    mems = []
    for k, (t, e) in enumerate(zip(true_model.memberships, est_model.memberships)):
        if t.num_clusters != e.num_clusters:
            raise ValueError(f"mode {k}: cluster-count mismatch")
        perm = align_labels(t, e)
        core = np.take(core, np.argsort(perm), axis=k)
        mems.append(Membership(perm[e.labels], e.num_clusters))
    return BlockModel(DenseTensor.from_array(core), mems)


def sparsity_metrics(core_true, core_est):
    """``(estimated_sparsity_rate, correct_zero_rate, sparsity_error_rate)`` for aligned cores."""
    a, b = as_array(core_true), as_array(core_est)
    if a.shape != b.shape:
        raise ValueError(f"dims mismatch: {a.shape} vs {b.shape}")
    true_zero, est_zero = a == 0, b == 0
    n_true_zero = int(true_zero.sum())
    correct = float((true_zero & est_zero).sum()) / n_true_zero if n_true_zero else 1.0
    return float(est_zero.mean()), correct, float((true_zero != est_zero).mean())


def model_sparsity_metrics(true_model, est_model):
    """:func:`sparsity_metrics` after aligning the estimated labels to the truth."""
    aligned = align_model(true_model, est_model)
    return sparsity_metrics(true_model.core, aligned.core)


def variance_explained(y, theta_hat):
    """``1 - ||y - theta_hat||^2 / ||y - mean(y)||^2``; NaN for constant ``y``."""
    a, b = as_array(y), as_array(theta_hat)
    if a.shape != b.shape:
        raise ValueError(f"dims mismatch: {a.shape} vs {b.shape}")
    centred = (a - a.mean()).reshape(-1)
    tss = float(np.dot(centred, centred))
    if tss == 0:
        return math.nan
    diff = (a - b).reshape(-1)
    return 1.0 - float(np.dot(diff, diff)) / tss


def evaluate(truth=None, est=None, theta_true=None, theta_hat=None, y=None):
    """One row of metrics as an ordered dict.

    Columns, in order: ``mse, rmse`` (needs both means), then per mode
    ``mcr_k, min_prop_true_k, min_prop_est_k`` (k from 1), then ``cer``,
    ``est_sparsity, correct_zero_rate, sparsity_error_rate`` and
    ``variance_explained``. Unavailable quantities are NaN. ``theta_true`` and
    ``theta_hat`` default to the means assembled from ``truth`` and ``est``.
    """
    if theta_true is None and truth is not None:
        theta_true = truth.mean()
    if theta_hat is None and est is not None:
        theta_hat = est.mean()
    row = {}
    if theta_true is not None and theta_hat is not None:
        row["mse"] = mse(theta_true, theta_hat)
        row["rmse"] = math.sqrt(row["mse"])
    else:
        row["mse"] = row["rmse"] = math.nan
    same_ranks = truth is not None and est is not None and truth.ranks == est.ranks
    if truth is not None and est is not None:
        for k, (t, e) in enumerate(zip(truth.memberships, est.memberships), start=1):
            row[f"mcr_{k}"] = mcr(t, e) if t.num_clusters == e.num_clusters else math.nan
            row[f"min_prop_true_{k}"] = float(cluster_proportions(t).min())
            row[f"min_prop_est_{k}"] = float(cluster_proportions(e).min())
        row["cer"] = cer(truth, est)
    else:
        row["cer"] = math.nan
    has_zeros = truth is not None and (
        np.any(truth.core.array == 0) or (est is not None and np.any(est.core.array == 0)))
    if same_ranks and has_zeros:
        s = model_sparsity_metrics(truth, est)
    else:
        s = (math.nan,) * 3
    row["est_sparsity"], row["correct_zero_rate"], row["sparsity_error_rate"] = s
    row["variance_explained"] = (
        variance_explained(y, theta_hat) if y is not None and theta_hat is not None else math.nan)
    return row


def write_metric_rows(path_or_file, rows):
    rows = list(rows)
    cols = list(rows[0].keys())
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    finally:
        if own:
            fh.close()
