"""Block models: per-mode memberships plus a core of block means."""
import warnings
from itertools import combinations
from math import prod

import numpy as np

from .tensor import DenseTensor, TensorFormatError, as_array, format_values, unfold


class Membership:
    """Assignment of the ``d`` slices of one mode to ``num_clusters`` clusters.

    Labels are integers in ``[0, num_clusters)`` and every cluster must be
    used at least once.
    """

    __slots__ = ("labels", "num_clusters")

    def __init__(self, labels, num_clusters=None):
        labels = np.array(labels, dtype=np.int64).reshape(-1)
        if labels.size == 0:
            raise ValueError("membership needs at least one index")
        if num_clusters is None:
            num_clusters = int(labels.max()) + 1
        num_clusters = int(num_clusters)
        if labels.min() < 0 or labels.max() >= num_clusters:
            raise ValueError(f"labels must lie in [0, {num_clusters})")
        sizes = np.bincount(labels, minlength=num_clusters)
        if np.any(sizes == 0):
            empty = np.flatnonzero(sizes == 0).tolist()
            raise ValueError(f"empty clusters {empty}")
        labels.setflags(write=False)
        self.labels = labels
        self.num_clusters = num_clusters

    def __len__(self):
        return self.labels.size

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.num_clusters)

    def members(self, r):
        """Indices assigned to cluster ``r``."""
        return np.flatnonzero(self.labels == r)

    def matrix(self):
        """Binary ``d x R`` membership matrix, one 1 per row."""
        m = np.zeros((self.labels.size, self.num_clusters))
        m[np.arange(self.labels.size), self.labels] = 1.0
        return m

    def __eq__(self, other):
        if not isinstance(other, Membership):
            return NotImplemented
        return self.num_clusters == other.num_clusters and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def __repr__(self):
        return f"Membership(R={self.num_clusters}, d={self.labels.size})"


class BlockModel:
    """Core tensor of block means together with one membership per mode."""

    __slots__ = ("core", "memberships")

    def __init__(self, core, memberships):
        if not isinstance(core, DenseTensor):
            core = DenseTensor.from_array(core)
        memberships = tuple(
            m if isinstance(m, Membership) else Membership(m) for m in memberships
        )
        if len(memberships) != core.order:
            raise ValueError(f"{len(memberships)} memberships for an order-{core.order} core")
        for k, (m, r) in enumerate(zip(memberships, core.dims)):
            if m.num_clusters != r:
                raise ValueError(f"mode {k}: membership has {m.num_clusters} clusters, core has {r}")
        self.core = core
        self.memberships = memberships

    @property
    def ranks(self):
        return self.core.dims

    @property
    def dims(self):
        return tuple(len(m) for m in self.memberships)

    @property
    def labels(self):
        return [m.labels for m in self.memberships]

    def mean(self):
        return assemble_mean(self)

    def __eq__(self, other):
        if not isinstance(other, BlockModel):
            return NotImplemented
        return self.core == other.core and self.memberships == other.memberships

    __hash__ = None

    def __repr__(self):
        return f"BlockModel(dims={self.dims}, ranks={self.ranks})"


def assemble_mean(model, dims=None):
    """Blockwise-constant mean: entry ``i`` equals ``core[M_1(i_1), ..., M_K(i_K)]``."""
    if dims is not None and tuple(dims) != model.dims:
        raise ValueError(f"dims {tuple(dims)} do not match membership lengths {model.dims}")
    return DenseTensor.from_array(model.core.array[np.ix_(*model.labels)])


def cluster_proportions(membership):
    return membership.sizes / len(membership)


def _duplicate_slice_pairs(core, rtol=None):
    arr = as_array(core)
    pairs = []
    for k in range(arr.ndim):
        rows = unfold(arr, k)
        for a, b in combinations(range(rows.shape[0]), 2):
            if rtol is None:
                same = np.array_equal(rows[a], rows[b])
            else:
                scale = max(np.max(np.abs(rows[a])), np.max(np.abs(rows[b])), 1e-300)
                same = np.max(np.abs(rows[a] - rows[b])) <= rtol * scale
            if same:
                pairs.append((k, a, b))
    return pairs


def is_irreducible(core):
    """True iff no two order-(K-1) slices of the core coincide along any mode.

    Uses exact equality; see :func:`near_duplicate_slices` for a tolerant check.
    """
    if not _duplicate_slice_pairs(core):
        nd = near_duplicate_slices(core)
        if nd:
            warnings.warn(f"core has near-identical slices {nd}", RuntimeWarning, stacklevel=2)
        return True
    return False


def near_duplicate_slices(core, rtol=1e-9):
    """Slice pairs ``(mode, a, b)`` equal up to relative tolerance ``rtol``."""
    return _duplicate_slice_pairs(core, rtol=rtol)


def block_gap(core):
    """Minimal squared separation between clusters.

    Returns ``(delta_min, per_mode)`` where ``per_mode[k]`` is the minimum over
    cluster pairs of the maximum squared difference between their mode-k
    slices, or ``None`` for modes with a single cluster.
    """
    arr = as_array(core)
    per_mode = []
    for k in range(arr.ndim):
        rows = unfold(arr, k)
        if rows.shape[0] < 2:
            per_mode.append(None)
            continue
        per_mode.append(
            min(float(np.max((rows[a] - rows[b]) ** 2))
                for a, b in combinations(range(rows.shape[0]), 2))
        )
    defined = [g for g in per_mode if g is not None]
    delta_min = min(defined) if defined else None
    return delta_min, per_mode


def first_occurrence_relabel(labels):
    """Relabel so clusters are numbered by first appearance; returns ``(new_labels, order)``.

    ``order[j]`` is the old label that becomes ``j``.
    """
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    inverse = np.empty(order.size, dtype=np.int64)
    inverse[order] = np.arange(order.size)
    return inverse[labels], order


def canonicalize(model):
    """Permute cluster labels into first-occurrence order on every mode."""
    core = model.core.array
    labels = []
    for k, m in enumerate(model.memberships):
        new, order = first_occurrence_relabel(m.labels)
        core = np.take(core, order, axis=k)
        labels.append(Membership(new, m.num_clusters))
    return BlockModel(DenseTensor.from_array(core), labels)


def random_relabel(model, rng):
    """Apply an independent random label permutation on every mode."""
    core = model.core.array
    labels = []
    for k, m in enumerate(model.memberships):
        perm = rng.permutation(m.num_clusters)  # old label r -> perm[r]
        inv = np.argsort(perm)
        core = np.take(core, inv, axis=k)
        labels.append(Membership(perm[m.labels], m.num_clusters))
    return BlockModel(DenseTensor.from_array(core), labels)


# -- .tbm text format -------------------------------------------------------

def dumps_tbm(model):
    lines = [str(model.core.order), " ".join(str(r) for r in model.ranks)]
    lines += [" ".join(str(int(x)) for x in m.labels) for m in model.memberships]
    lines.append(format_values(model.core.data))
    return "\n".join(lines) + "\n"


def loads_tbm(text):
    lines = text.splitlines()
    try:
        k = int(lines[0])
        ranks = tuple(int(x) for x in lines[1].split())
        if len(ranks) != k:
            raise TensorFormatError(f"order {k} but {len(ranks)} ranks")
        labels = [[int(x) for x in lines[2 + j].split()] for j in range(k)]
        values = [float(x) for x in " ".join(lines[2 + k:]).split()]
    except (IndexError, ValueError) as exc:
        raise TensorFormatError(f"malformed block model: {exc}") from None
    if len(values) != prod(ranks):
        raise TensorFormatError(f"expected {prod(ranks)} core values, found {len(values)}")
    try:
        return BlockModel(
            DenseTensor(ranks, values),
            [Membership(lab, r) for lab, r in zip(labels, ranks)],
        )
    except ValueError as exc:
        raise TensorFormatError(str(exc)) from None


def write_tbm(path, model):
    with open(path, "w") as fh:
        fh.write(dumps_tbm(model))


def read_tbm(path):
    with open(path) as fh:
        return loads_tbm(fh.read())
