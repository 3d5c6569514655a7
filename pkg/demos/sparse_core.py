"""Find which blocks are empty with an l0 penalty on the block means.

Half of the true block means are exactly zero. The penalty strength is picked
by the sparse BIC over a log grid scaled to the estimated noise variance.

Run: python3 demos/sparse_core.py
"""
import numpy as np

from tbm import (FitConfig, SelectionGrid, SimConfig, default_lambda_grid, gen_data,
                 select_lambda)
from tbm.metrics import align_model, model_sparsity_metrics

ranks = (4, 4, 4)
sim = gen_data(SimConfig(dims=(40, 40, 40), ranks=ranks, sigma=4.0, sparsity_p=0.5, seed=2))
template = FitConfig(ranks, restarts=10)
grid = SelectionGrid(lambda_candidates=default_lambda_grid(sim.y, ranks, template),
                     fit_config_template=template)
lam, rows = select_lambda(sim.y, ranks, grid, kind="l0")
best = next(r for r in rows if r.lam == lam)

sparsity, correct_zero, error = model_sparsity_metrics(sim.truth, best.fit.model)
print(f"selected lambda {lam:.1f}")
print(f"estimated zero fraction {sparsity:.3f} (truth {np.mean(sim.truth.core.array == 0):.3f})")
print(f"true zeros found {correct_zero:.3f}, support disagreement {error:.3f}")

aligned = align_model(sim.truth, best.fit.model)
print("\nfirst slice, truth vs estimate:")
print(np.round(sim.truth.core.array[0], 2))
print(np.round(aligned.core.array[0], 2))
