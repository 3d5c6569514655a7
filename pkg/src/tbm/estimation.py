"""Least-squares fitting of tensor block models by alternating updates.

Each sweep reassigns the slices of every mode to the nearest row of the
current core (mode by mode) and then refreshes the core with block averages,
optionally hard- or soft-thresholded. Several k-means-initialised restarts
are run and the best one is kept.
"""
from dataclasses import dataclass, field, asdict
import numpy as np

from ._kmeans import kmeans
from ._rng import derive_seed
from .errors import ConfigError, InvariantError
from .model import BlockModel, Membership, assemble_mean, canonicalize
from .tensor import DenseTensor, as_array, mode_product, unfold

PENALTY_KINDS = ("none", "l0", "l1")
MONOTONE_ATOL = 1e-9


@dataclass(frozen=True)
class Penalty:
    """Penalty on the core: ``lam * ||C||_0`` (``"l0"``) or ``lam * ||C||_1`` (``"l1"``)."""

    kind: str = "none"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ConfigError(f"unknown penalty {self.kind!r}; choose from {PENALTY_KINDS}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError(f"penalty strength must be a finite value >= 0, got {self.lam}")
        if self.kind == "none" and self.lam != 0:
            raise ConfigError("penalty 'none' takes no lambda")

    @property
    def active(self):
        return self.kind != "none"

    def value(self, core):
        c = as_array(core)
        if self.kind == "l0":
            return self.lam * float(np.count_nonzero(c))
        if self.kind == "l1":
            return self.lam * float(np.abs(c).sum())
        return 0.0


NO_PENALTY = Penalty()


@dataclass(frozen=True)
class FitConfig:
    ranks: tuple
    restarts: int = 10
    max_iters: int = 100
    rel_tol: float = 1e-10
    penalty: Penalty = NO_PENALTY
    seed: int = 0
    check_steps: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ConfigError("rel_tol must be > 0")
        if any(r < 1 for r in self.ranks):
            raise ConfigError(f"ranks must be positive, got {self.ranks}")

    def check_dims(self, dims):
        if len(dims) != len(self.ranks):
            raise ConfigError(f"{len(self.ranks)} ranks given for an order-{len(dims)} tensor")
        for k, (r, d) in enumerate(zip(self.ranks, dims)):
            if r > d:
                raise ConfigError(f"rank {r} exceeds dimension {d} on mode {k}")

    def echo(self):
        out = asdict(self)
        out["ranks"] = list(self.ranks)
        return out


@dataclass
class BlockModelFit:
    """Result of :func:`fit`.

    ``objective`` is the (penalised) least-squares value of the chosen restart
    and equals ``objective_trace[-1]``; ``residual`` is the plain
    ``||y - Theta_hat||_F^2``.
    """

    model: BlockModel
    objective: float
    residual: float
    objective_trace: list
    restart_index: int
    iterations_used: int
    converged: bool
    penalty: Penalty = NO_PENALTY
    restart_objectives: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)

    def mean(self):
        return assemble_mean(self.model)

    def report(self):
        return {
            "ranks": list(self.model.ranks),
            "objective": self.objective,
            "residual": self.residual,
            "objective_trace": list(self.objective_trace),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "restart_objectives": list(self.restart_objectives),
            "penalty": {"kind": self.penalty.kind, "lambda": self.penalty.lam},
        }


# -- elementary pieces --------------------------------------------------------

def _labels_of(memberships):
    return [m.labels if isinstance(m, Membership) else np.asarray(m) for m in memberships]


def _indicator(labels, r):
    h = np.zeros((r, labels.size))
    h[labels, np.arange(labels.size)] = 1.0
    return h


def _block_stats(y, labels, ranks):
    """Block sums and block sizes.

    Sums are mode products with the cluster indicator matrices; only the first
    product touches all of ``y``, later ones act on already reduced tensors.
    """
    sums = y
    for k, (lab, r) in enumerate(zip(labels, ranks)):
        sums = mode_product(sums, _indicator(lab, r), k)
    counts = np.ones(())
    for lab, r in zip(labels, ranks):
        counts = np.multiply.outer(counts, np.bincount(lab, minlength=r))
    return sums, counts.astype(np.float64)


def _ols_core(y, labels, ranks):
    sums, counts = _block_stats(y, labels, ranks)
    if np.any(counts == 0):
        raise InvariantError("empty block: every cluster of every mode must be non-empty")
    return sums / counts, counts


def hard_threshold(c, n, lam):
    """Keep ``c`` where ``|c| >= sqrt(lam / n)``, zero elsewhere."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(np.abs(c) >= np.sqrt(lam / np.asarray(n, dtype=np.float64)), c, 0.0)


def soft_threshold(c, n, lam):
    """``sign(c) * max(|c| - lam / (2 n), 0)``."""
    c = np.asarray(c, dtype=np.float64)
    shrink = lam / (2.0 * np.asarray(n, dtype=np.float64))
    return np.sign(c) * np.maximum(np.abs(c) - shrink, 0.0)


def sparse_block_mean(c_ols, n, penalty):
    """Minimiser of ``n (c - c_ols)^2 + lam * ||c||_rho`` for each entry."""
    if penalty.kind == "l0":
        return hard_threshold(c_ols, n, penalty.lam)
    if penalty.kind == "l1":
        return soft_threshold(c_ols, n, penalty.lam)
    return np.asarray(c_ols, dtype=np.float64)


def _core(y, labels, ranks, penalty):
    c, counts = _ols_core(y, labels, ranks)
    if penalty.active:
        c = sparse_block_mean(c, counts, penalty)
    return c


def _rss(y, core, labels):
    theta = core
    for k, lab in enumerate(labels):
        theta = np.take(theta, lab, axis=k)
    diff = (y - theta).reshape(-1)
    return float(np.dot(diff, diff))


def _assign_costs(y, core, labels, mode):
    """Per-slice cost (up to the slice's own sum of squares) of each cluster on ``mode``."""
    ranks = core.shape
    s = y
    for l in range(y.ndim):
        if l != mode:
            s = mode_product(s, _indicator(labels[l], ranks[l]), l)
    s_k = unfold(s, mode)
    counts = np.ones(1)
    for l in range(y.ndim):
        if l != mode:
            counts = np.multiply.outer(counts, np.bincount(labels[l], minlength=ranks[l]))
    counts = counts.reshape(-1)
    c_k = unfold(core, mode)
    return (c_k * c_k) @ counts - 2.0 * s_k @ c_k.T


def _assign(y, core, labels, mode):
    """Nearest-centroid relabelling of one mode; returns ``(labels, repaired)``."""
    r = core.shape[mode]
    if r == 1:
        return np.zeros(y.shape[mode], dtype=np.int64), False
    cost = _assign_costs(y, core, labels, mode)
    new = np.argmin(cost, axis=1)
    sizes = np.bincount(new, minlength=r)
    if np.all(sizes > 0):
        return new, False
    # empty cluster: move the worst-fitting slice of a multi-member cluster into it
    slice_ss = np.einsum("ij,ij->i", unfold(y, mode), unfold(y, mode))
    resid = slice_ss + cost[np.arange(new.size), new]
    for e in np.flatnonzero(sizes == 0):
        cand = np.where(sizes[new] > 1, resid, -np.inf)
        a = int(np.argmax(cand))
        sizes[new[a]] -= 1
        new[a] = e
        sizes[e] = 1
        resid[a] = -np.inf
    return new, True


# -- public operations --------------------------------------------------------

def objective(y, model, penalty=NO_PENALTY):
    """``||y - Theta||_F^2 + lam * ||C||_rho`` for a block model."""
    y = as_array(y)
    if y.shape != model.dims:
        raise ValueError(f"dims mismatch: data {y.shape} vs model {model.dims}")
    return _rss(y, model.core.array, model.labels) + penalty.value(model.core)


def kmeans_init(y, ranks, seed):
    """Independent k-means on the slices of every mode.

    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    y = as_array(y)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = []
    for k, r in enumerate(ranks):
        if not 1 <= r <= y.shape[k]:
            raise ConfigError(f"rank {r} infeasible for mode {k} of size {y.shape[k]}")
        out.append(Membership(kmeans(unfold(y, k), r, rng), r))
    return out


def update_core(y, memberships):
    """Block sample means for fixed memberships."""
    labels = _labels_of(memberships)
    ranks = tuple(m.num_clusters for m in memberships)
    c, _ = _ols_core(as_array(y), labels, ranks)
    return DenseTensor.from_array(c)


def update_core_sparse(y, memberships, penalty):
    """Block means followed by entrywise hard (``l0``) or soft (``l1``) thresholding."""
    if not isinstance(penalty, Penalty):
        penalty = Penalty(*penalty)
    labels = _labels_of(memberships)
    ranks = tuple(m.num_clusters for m in memberships)
    return DenseTensor.from_array(_core(as_array(y), labels, ranks, penalty))


def update_membership(y, model, mode):
    """Reassign every slice of ``mode`` to its best cluster given the rest of ``model``."""
    y = as_array(y)
    new, _ = _assign(y, model.core.array, model.labels, mode)
    return Membership(new, model.ranks[mode])


def _check_input(y, config):
    y = as_array(y)
    if not np.all(np.isfinite(y)):
        raise ValueError("input tensor contains non-finite values")
    config.check_dims(y.shape)
    return y


def _sweep(y, core, labels, penalty, steps=None):
    """Relabel every mode against ``core``, then refresh the core. Mutates ``labels``."""
    ranks = core.shape
    for k in range(y.ndim):
        labels[k], repaired = _assign(y, core, labels, k)
        if repaired:
            core = _core(y, labels, ranks, penalty)
        if steps is not None:
            steps.append(_rss(y, core, labels) + penalty.value(core))
    core = _core(y, labels, ranks, penalty)
    if steps is not None:
        steps.append(_rss(y, core, labels) + penalty.value(core))
    return core


def sweep(y, model, penalty=NO_PENALTY):
    """One full pass of the alternating scheme: K membership updates, then the core."""
    y = as_array(y)
    labels = [lab.copy() for lab in model.labels]
    core = _sweep(y, model.core.array, labels, penalty)
    return BlockModel(DenseTensor.from_array(core),
                      [Membership(lab, r) for lab, r in zip(labels, model.ranks)])


def _single_run(y, config, rng):
    ranks, penalty = config.ranks, config.penalty
    labels = [m.labels.copy() for m in kmeans_init(y, ranks, rng)]
    core = _core(y, labels, ranks, penalty)
    f = _rss(y, core, labels) + penalty.value(core)
    trace = [f]
    steps = [f] if config.check_steps else None
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        core = _sweep(y, core, labels, penalty, steps)
        f_new = _rss(y, core, labels) + penalty.value(core)
        if not penalty.active and f_new > f + MONOTONE_ATOL + 1e-12 * abs(f):
            raise InvariantError(f"objective increased from {f!r} to {f_new!r} at sweep {it}")
        trace.append(f_new)
        decrease = (f - f_new) / max(f, np.finfo(float).tiny)
        f = f_new
        if decrease < config.rel_tol:
            converged = True
            break
    return labels, core, trace, it, converged, steps or []


def fit(y, config):
    """Fit a tensor block model with the ranks and penalty in ``config``.

    Restart ``i`` draws its k-means seeds from ``derive_seed(config.seed, i)``;
    the restart with the smallest objective wins (ties go to the lower index)
    and its labels are returned in canonical first-occurrence order.
    """
    y = _check_input(y, config)
    best = None
    restart_objectives = []
    for i in range(config.restarts):
        rng = np.random.default_rng(derive_seed(config.seed, i))
        run = _single_run(y, config, rng)
        restart_objectives.append(run[2][-1])
        if best is None or run[2][-1] < best[1][2][-1]:
            best = (i, run)
    i, (labels, core, trace, iters, converged, steps) = best
    model = canonicalize(BlockModel(
        DenseTensor.from_array(core),
        [Membership(lab, r) for lab, r in zip(labels, config.ranks)],
    ))
    return BlockModelFit(
        model=model,
        objective=trace[-1],
        residual=_rss(y, core, labels),
        objective_trace=trace,
        restart_index=i,
        iterations_used=iters,
        converged=converged,
        penalty=config.penalty,
        restart_objectives=restart_objectives,
        step_trace=steps,
    )
