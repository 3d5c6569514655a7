"""BIC-based choice of cluster numbers and of the sparsity penalty."""
import csv
import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from ._parallel import pmap
from .errors import ConfigError
from .estimation import FitConfig, Penalty, fit
from .tensor import as_array


def effective_params(dims, ranks):
    """``prod(R) + sum_k d_k log R_k``."""
    return math.prod(ranks) + sum(d * math.log(r) for d, r in zip(dims, ranks))


def effective_params_sparse(dims, core):
    ranks = np.shape(core)
    return float(np.count_nonzero(np.asarray(core))) + sum(
        d * math.log(r) for d, r in zip(dims, ranks))


def bic_value(dims, residual, p_e):
    penalty = sum(math.log(d) for d in dims) / math.prod(dims) * p_e
    if residual <= 0:
        return -math.inf
    return math.log(residual) + penalty


def rounding_floor(y):
    """Residual sum of squares that floating-point rounding alone can produce on ``y``."""
    y = as_array(y)
    return y.size * (16 * np.finfo(np.float64).eps * float(np.max(np.abs(y)))) ** 2


def _residual(y, fit_result):
    r = fit_result.residual
    return 0.0 if r <= rounding_floor(y) else r


def bic(y, fit_result):
    """BIC of an unpenalised fit; ``-inf`` for a fit exact up to rounding."""
    dims = as_array(y).shape
    return bic_value(dims, _residual(y, fit_result),
                     effective_params(dims, fit_result.model.ranks))


def bic_sparse(y, fit_result):
    """BIC with the parameter count replaced by the number of non-zero block means."""
    dims = as_array(y).shape
    return bic_value(dims, _residual(y, fit_result),
                     effective_params_sparse(dims, fit_result.model.core.array))


@dataclass
class SelectionGrid:
    rank_candidates: list = None
    lambda_candidates: list = None
    fit_config_template: FitConfig = None

    def __post_init__(self):
        if self.rank_candidates is not None:
            self.rank_candidates = [tuple(int(r) for r in c) for c in self.rank_candidates]
            if not self.rank_candidates:
                raise ConfigError("empty rank grid")
        if self.lambda_candidates is not None:
            self.lambda_candidates = [float(x) for x in self.lambda_candidates]
            if not self.lambda_candidates:
                raise ConfigError("empty lambda grid")
            if any(x < 0 for x in self.lambda_candidates):
                raise ConfigError("lambda candidates must be >= 0")

    def template(self, ranks):
        if self.fit_config_template is None:
            return FitConfig(ranks)
        return replace(self.fit_config_template, ranks=tuple(ranks))


def cartesian_ranks(ranges):
    """All rank tuples from per-mode candidate lists."""
    return [tuple(c) for c in itertools.product(*ranges)]


@dataclass
class SelectionRow:
    ranks: tuple
    lam: float
    residual: float
    p_e: float
    bic: float
    converged: bool
    fit: object = None
    error: str = ""


def _rank_row(y, ranks, config):
    dims = y.shape
    try:
        config.check_dims(dims)
        res = fit(y, config)
    except (ConfigError, ValueError) as exc:
        return SelectionRow(tuple(ranks), 0.0, math.nan, math.nan, math.nan, False, None, str(exc))
    return SelectionRow(tuple(ranks), 0.0, res.residual, effective_params(dims, ranks),
                        bic(y, res), res.converged, res)


def _best(rows, key):
    ok = [r for r in rows if r.fit is not None]
    if not ok:
        raise ConfigError("no candidate could be fitted: " + "; ".join(r.error for r in rows))
    return min(ok, key=key)


def select_ranks(y, grid):
    """Fit every rank candidate and return ``(best_ranks, rows)``.

    Ties in BIC go to the lexicographically smallest rank tuple. Candidates
    that fail to fit are kept in the table with their error message.
    """
    y = as_array(y)
    rows = pmap(lambda r: _rank_row(y, r, grid.template(r)), grid.rank_candidates)
    best = _best(rows, key=lambda row: (row.bic, row.ranks))
    return best.ranks, rows


def select_ranks_coordinate(y, ranges, template=None, passes=2, start=None):
    """Coordinate-wise search: optimise one mode's rank at a time.

    Starts from ``start`` (default: the smallest candidate of every mode) and
    sweeps the modes ``passes`` times. Fits are cached, so each rank tuple is
    fitted at most once. Returns ``(best_ranks, rows)`` like :func:`select_ranks`.
    """
    y = as_array(y)
    grid = SelectionGrid(rank_candidates=[tuple(min(r) for r in ranges)],
                         fit_config_template=template)
    cache = {}

    def row(ranks):
        if ranks not in cache:
            cache[ranks] = _rank_row(y, ranks, grid.template(ranks))
        return cache[ranks]

    current = tuple(start) if start is not None else tuple(min(r) for r in ranges)
    for _ in range(passes):
        for k, cand in enumerate(ranges):
            options = [current[:k] + (c,) + current[k + 1:] for c in sorted(cand)]
            rows = pmap(row, options)
            current = _best(rows, key=lambda r: (r.bic, r.ranks)).ranks
    rows = list(cache.values())
    best = _best(rows, key=lambda r: (r.bic, r.ranks))
    return best.ranks, rows


def default_lambda_grid(y, ranks, template=None, num=20, low=1e-2, high=1e3):
    """Log-spaced grid scaled by the noise variance estimated from a dense fit."""
    y = as_array(y)
    if template is None:
        config = FitConfig(ranks)
    else:
        config = replace(template, ranks=tuple(ranks), penalty=Penalty())
    dense = fit(y, config)
    sigma2 = dense.residual / y.size
    if sigma2 <= 0:
        sigma2 = 1.0
    return list(np.geomspace(low, high, num) * sigma2)


def _lambda_row(y, ranks, lam, config):
    try:
        res = fit(y, config)
    except (ConfigError, ValueError) as exc:
        return SelectionRow(tuple(ranks), lam, math.nan, math.nan, math.nan, False, None, str(exc))
    return SelectionRow(tuple(ranks), lam, res.residual,
                        effective_params_sparse(y.shape, res.model.core.array),
                        bic_sparse(y, res), res.converged, res)


def select_lambda(y, ranks, grid, kind="l0"):
    """Choose the penalty strength at fixed ranks by sparse BIC (ties -> smallest lambda)."""
    y = as_array(y)
    if kind not in ("l0", "l1"):
        raise ConfigError(f"lambda selection needs an l0 or l1 penalty, got {kind!r}")
    base = grid.template(ranks)
    rows = pmap(
        lambda lam: _lambda_row(y, ranks, lam, replace(base, penalty=Penalty(kind, lam))),
        grid.lambda_candidates,
    )
    best = _best(rows, key=lambda row: (row.bic, row.lam))
    return best.lam, rows


TABLE_COLUMNS = ("ranks", "lambda", "residual", "p_e", "bic", "converged", "error")


def write_selection_csv(path_or_file, rows):
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow(["x".join(str(x) for x in r.ranks), repr(r.lam), repr(r.residual),
                        repr(r.p_e), repr(r.bic), str(r.converged).lower(), r.error])
    finally:
        if own:
            fh.close()
