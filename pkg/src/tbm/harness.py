"""Simulation studies: RMSE scaling, BIC rank selection and sparse recovery.

Each suite returns a list of row dicts (one per simulated dataset) followed
by summary rows. Summary means and standard deviations are recomputed from
the per-seed rows with :func:`summarize`, so a CSV written with
:func:`write_rows` can be re-checked independently.
"""
import csv
import math
import statistics

import numpy as np

from ._parallel import pmap
from .errors import ConfigError
from .estimation import FitConfig, fit
from .metrics import model_sparsity_metrics, rmse
from .selection import (SelectionGrid, cartesian_ranks, default_lambda_grid,
                        select_lambda, select_ranks, select_ranks_coordinate)
from .simulate import SimConfig, gen_data

SUITES = ("scaling3", "scaling4", "bic-table", "sparse-table")

SCALING3_D1 = (20, 30, 40, 50, 60, 70)
SCALING4_D1 = (10, 12, 14, 16, 18, 20)
SCALING_RANKS3 = ((2, 2, 2), (3, 3, 3), (4, 4, 4))
SCALING_RANKS4 = ((2, 2, 2, 2), (3, 3, 3, 3), (4, 4, 4, 4))

BIC_TABLE = (
    ((40, 40, 40), (4, 4, 4), 4.0),
    ((40, 40, 40), (4, 4, 4), 8.0),
    ((40, 40, 40), (4, 4, 4), 12.0),
    ((40, 40, 80), (4, 4, 4), 4.0),
    ((40, 40, 80), (4, 4, 4), 8.0),
    ((40, 40, 80), (4, 4, 4), 12.0),
    ((40, 40, 40), (2, 3, 4), 4.0),
    ((40, 40, 40), (2, 3, 4), 8.0),
    ((40, 40, 40), (2, 3, 4), 12.0),
)
BIC_RANGE = (2, 3, 4, 5, 6)

SPARSE_TABLE = ((0.5, 4.0), (0.5, 8.0), (0.8, 8.0))
SPARSE_DIMS = (40, 40, 40)
SPARSE_RANKS = (4, 4, 4)


def balanced_dims(d1, ranks):
    """Mode sizes with ``d_k log R_k`` matched to ``d_1 log R_1``."""
    if any(r < 2 for r in ranks):
        raise ConfigError("scaling suites need at least two clusters per mode")
    lr1 = math.log(ranks[0])
    return (int(d1),) + tuple(int(round(d1 * lr1 / math.log(r))) for r in ranks[1:])


def rescaled_sample_size(dims, ranks):
    """``sqrt(prod_{k>1} d_k / log R_1)``."""
    return math.sqrt(math.prod(dims[1:]) / math.log(ranks[0]))


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def summarize(values):
    values = list(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return statistics.fmean(values), sd


# -- suites -------------------------------------------------------------------

def _scaling_job(job):
    ranks, dims, sigma, seed, restarts = job
    sim = gen_data(SimConfig(dims, ranks, sigma=sigma, seed=seed))
    res = fit(sim.y, FitConfig(ranks, restarts=restarts, seed=seed))
    return rmse(sim.theta_true, res.mean())


def scaling_suite(order=3, d1_values=None, rank_sets=None, sigma=3.0, sims=10, seed=0,
                  restarts=10):
    """RMSE against rescaled sample size for fixed ranks and growing dimensions."""
    if d1_values is None:
        d1_values = SCALING3_D1 if order == 3 else SCALING4_D1
    if rank_sets is None:
        rank_sets = SCALING_RANKS3 if order == 3 else SCALING_RANKS4
    points = []
    for ranks in rank_sets:
        if len(ranks) != order:
            raise ConfigError(f"ranks {ranks} do not have order {order}")
        for d1 in d1_values:
            points.append((tuple(ranks), balanced_dims(d1, ranks)))
    jobs = [(r, d, sigma, seed + i, restarts) for r, d in points for i in range(sims)]
    values = pmap(_scaling_job, jobs)
    rows = []
    for (ranks, dims, _, s, _), v in zip(jobs, values):
        rows.append({"kind": "sim", "ranks": ranks, "dims": dims, "seed": s,
                     "N": rescaled_sample_size(dims, ranks), "rmse": v})
    summaries = []
    for ranks, dims in points:
        vals = [r["rmse"] for r in rows if r["ranks"] == ranks and r["dims"] == dims]
        mean, sd = summarize(vals)
        summaries.append({"kind": "summary", "ranks": ranks, "dims": dims, "seed": "",
                          "N": rescaled_sample_size(dims, ranks), "rmse": mean, "rmse_sd": sd})
    for ranks in {p[0]: None for p in points}:
        pts = [s for s in summaries if s["ranks"] == ranks]
        summaries.append({"kind": "slope", "ranks": ranks, "dims": "", "seed": "", "N": "",
                          "rmse": loglog_slope([p["N"] for p in pts], [p["rmse"] for p in pts])})
    return rows + summaries


def _bic_job(job):
    dims, ranks, sigma, seed, restarts, search = job
    sim = gen_data(SimConfig(dims, ranks, sigma=sigma, seed=seed))
    template = FitConfig(ranks, restarts=restarts, seed=seed)
    if search == "coordinate":
        best, _ = select_ranks_coordinate(sim.y, [BIC_RANGE] * len(dims), template)
    else:
        grid = SelectionGrid(rank_candidates=cartesian_ranks([BIC_RANGE] * len(dims)),
                             fit_config_template=template)
        best, _ = select_ranks(sim.y, grid)
    return best


def bic_table(settings=BIC_TABLE, sims=50, seed=0, restarts=10, search="cartesian"):
    """Selected cluster numbers under BIC for each ``(dims, ranks, sigma)`` setting."""
    jobs = [(tuple(d), tuple(r), float(s), seed + i, restarts, search)
            for d, r, s in settings for i in range(sims)]
    chosen = pmap(_bic_job, jobs)
    rows = []
    for (dims, ranks, sigma, s, _, _), best in zip(jobs, chosen):
        row = {"kind": "sim", "dims": dims, "ranks": ranks, "sigma": sigma, "seed": s}
        row.update({f"R{k + 1}": float(b) for k, b in enumerate(best)})
        rows.append(row)
    for dims, ranks, sigma in settings:
        sel = [r for r in rows if r["dims"] == tuple(dims) and r["ranks"] == tuple(ranks)
               and r["sigma"] == float(sigma)]
        row = {"kind": "summary", "dims": tuple(dims), "ranks": tuple(ranks),
               "sigma": float(sigma), "seed": ""}
        for k in range(len(dims)):
            mean, sd = summarize(r[f"R{k + 1}"] for r in sel)
            row[f"R{k + 1}"] = mean
            row[f"R{k + 1}_sd"] = sd
        rows.append(row)
    return rows


def _sparse_job(job):
    p, sigma, seed, restarts, dims, ranks = job
    sim = gen_data(SimConfig(dims, ranks, sigma=sigma, sparsity_p=p, seed=seed))
    template = FitConfig(ranks, restarts=restarts, seed=seed)
    grid = SelectionGrid(lambda_candidates=default_lambda_grid(sim.y, ranks, template),
                         fit_config_template=template)
    lam, table = select_lambda(sim.y, ranks, grid, kind="l0")
    best = next(r for r in table if r.lam == lam)
    return (lam,) + model_sparsity_metrics(sim.truth, best.fit.model)


SPARSE_COLUMNS = ("lambda", "est_sparsity", "correct_zero_rate", "sparsity_error_rate")


def sparse_table(settings=SPARSE_TABLE, sims=50, seed=0, restarts=10,
                 dims=SPARSE_DIMS, ranks=SPARSE_RANKS):
    """l0-penalised fits with BIC-chosen lambda at the true ranks."""
    jobs = [(float(p), float(s), seed + i, restarts, tuple(dims), tuple(ranks))
            for p, s in settings for i in range(sims)]
    out = pmap(_sparse_job, jobs)
    rows = []
    for (p, sigma, s, *_), vals in zip(jobs, out):
        row = {"kind": "sim", "p": p, "sigma": sigma, "seed": s}
        row.update(dict(zip(SPARSE_COLUMNS, vals)))
        rows.append(row)
    for p, sigma in settings:
        sel = [r for r in rows if r["p"] == float(p) and r["sigma"] == float(sigma)]
        row = {"kind": "summary", "p": float(p), "sigma": float(sigma), "seed": ""}
        for c in SPARSE_COLUMNS:
            row[c], row[c + "_sd"] = summarize(r[c] for r in sel)
        rows.append(row)
    return rows


def run_suite(name, sims=None, seed=0, **kwargs):
    if name == "scaling3":
        return scaling_suite(3, sims=sims or 10, seed=seed, **kwargs)
    if name == "scaling4":
        return scaling_suite(4, sims=sims or 10, seed=seed, **kwargs)
    if name == "bic-table":
        return bic_table(sims=sims or 50, seed=seed, **kwargs)
    if name == "sparse-table":
        return sparse_table(sims=sims or 50, seed=seed, **kwargs)
    raise ConfigError(f"unknown suite {name!r}; choose from {SUITES}")


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "x".join(str(x) for x in v)
    return v


def write_rows(path_or_file, rows):
    """CSV with the union of row keys as columns (first-seen order)."""
    cols = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in cols])
    finally:
        if own:
            fh.close()
