"""Multiway clustering of dense tensors with block models."""
from .errors import ConfigError, InvariantError, SimulationError, TensorFormatError
from .estimation import (NO_PENALTY, BlockModelFit, FitConfig, Penalty, fit, hard_threshold,
                         kmeans_init, objective, soft_threshold, sparse_block_mean, sweep,
                         update_core, update_core_sparse, update_membership)
from .metrics import (align_model, cer, confusion, contingency, evaluate, mcr,
                      mcr_from_confusion, mse, rmse, sparsity_metrics, variance_explained)
from .model import (BlockModel, Membership, assemble_mean, block_gap, canonicalize,
                    cluster_proportions, is_irreducible, read_tbm, write_tbm)
from .selection import (SelectionGrid, bic, bic_sparse, cartesian_ranks, default_lambda_grid,
                        effective_params, effective_params_sparse, select_lambda, select_ranks,
                        select_ranks_coordinate)
from .simulate import SimConfig, SimOutput, gen_core, gen_data, gen_memberships
from .tensor import (DenseTensor, fold, frobenius_norm, inner_product, max_norm,
                     multilinear_multiply, read_tsr, unfold, write_tsr)

__version__ = "0.1.0"
