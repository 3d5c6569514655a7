import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tbm.model import (BlockModel, Membership, assemble_mean, block_gap, canonicalize,
                       cluster_proportions, dumps_tbm, is_irreducible, loads_tbm,
                       near_duplicate_slices, random_relabel, read_tbm, write_tbm)
from tbm.simulate import gen_core, gen_memberships
from tbm.tensor import DenseTensor, TensorFormatError, multilinear_multiply


def test_membership_validation():
    with pytest.raises(ValueError, match="empty"):
        Membership([0, 0, 2], 3)
    with pytest.raises(ValueError):
        Membership([0, 3], 2)
    with pytest.raises(ValueError):
        Membership([-1, 0], 2)
    m = Membership([1, 0, 1, 1])
    assert m.num_clusters == 2
    assert m.sizes.tolist() == [1, 3]
    assert m.members(1).tolist() == [0, 2, 3]
    assert m.matrix().tolist() == [[0, 1], [1, 0], [0, 1], [0, 1]]
    assert cluster_proportions(m).tolist() == [0.25, 0.75]


def test_block_model_shape_checks():
    with pytest.raises(ValueError, match="mode 1"):
        BlockModel(np.zeros((2, 2)), [Membership([0, 1]), Membership([0, 1, 2])])
    with pytest.raises(ValueError):
        BlockModel(np.zeros((2, 2)), [Membership([0, 1])])


def test_assemble_mean_small_example():
    core = np.array([[1.0, 2.0], [3.0, 4.0]])
    model = BlockModel(core, [Membership([0, 1, 0]), Membership([1, 1, 0])])
    theta = assemble_mean(model).array
    assert theta.tolist() == [[2, 2, 1], [4, 4, 3], [2, 2, 1]]
    with pytest.raises(ValueError):
        assemble_mean(model, dims=(3, 4))


def test_assemble_mean_is_multilinear_product():
    rng = np.random.default_rng(5)
    core = gen_core((2, 3, 2), seed=rng)
    mems = gen_memberships((5, 6, 4), (2, 3, 2), seed=rng)
    model = BlockModel(core, mems)
    via_product = multilinear_multiply(core, [m.matrix() for m in mems]).array
    np.testing.assert_array_equal(assemble_mean(model).array, via_product)


def test_irreducible_examples():
    assert is_irreducible(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert not is_irreducible(np.array([[1.0, 2.0], [1.0, 2.0]]))
    assert not is_irreducible(np.array([[1.0, 1.0], [2.0, 2.0]]))
    assert is_irreducible(np.array([[5.0]]))


def test_near_duplicate_warns():
    core = np.array([[1.0, 2.0], [1.0 + 1e-13, 2.0]])
    with pytest.warns(RuntimeWarning):
        assert is_irreducible(core)
    assert near_duplicate_slices(core) == [(0, 0, 1)]


def test_block_gap_hand_value():
    core = np.array([[0.0, 1.0], [3.0, 1.0]])
    delta, per_mode = block_gap(core)
    # rows differ by (3, 0), columns (0, 3) and (1, 1) differ by (1, 2)
    assert per_mode == [9.0, 4.0]
    assert delta == 4.0
    assert block_gap(np.array([[1.0, 2.0]]))[1][0] is None


def test_canonicalize_keeps_mean():
    rng = np.random.default_rng(2)
    model = BlockModel(gen_core((3, 2), seed=rng), gen_memberships((7, 5), (3, 2), seed=rng))
    canon = canonicalize(model)
    for lab in canon.labels:
        _, first = np.unique(lab, return_index=True)
        assert lab[np.sort(first)].tolist() == list(range(lab.max() + 1))
    np.testing.assert_array_equal(assemble_mean(canon).array, assemble_mean(model).array)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(1, 3), min_size=2, max_size=3))
def test_identifiability_up_to_relabelling(seed, ranks):
    """Two irreducible block models with the same mean differ only by label permutations."""
    rng = np.random.default_rng(seed)
    dims = tuple(r + int(rng.integers(0, 3)) for r in ranks)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = BlockModel(gen_core(ranks, seed=rng), gen_memberships(dims, ranks, seed=rng))
    other = random_relabel(model, rng)
    np.testing.assert_array_equal(assemble_mean(other).array, assemble_mean(model).array)
    # recovering a model from its mean alone: canonical forms coincide
    assert canonicalize(other) == canonicalize(model)
    # and the partition of each mode is determined by distinct slices of the mean
    theta = assemble_mean(model).array
    for k, m in enumerate(model.memberships):
        slices = np.moveaxis(theta, k, 0).reshape(theta.shape[k], -1)
        _, inferred = np.unique(slices, axis=0, return_inverse=True)
        inferred = inferred.reshape(-1)
        same_true = m.labels[:, None] == m.labels[None, :]
        same_inferred = inferred[:, None] == inferred[None, :]
        assert np.array_equal(same_true, same_inferred)


def test_reducible_core_breaks_identifiability():
    core = np.array([[1.0, 2.0], [1.0, 2.0]])
    a = BlockModel(core, [Membership([0, 1, 1]), Membership([0, 1])])
    b = BlockModel(core, [Membership([0, 0, 1]), Membership([0, 1])])
    assert assemble_mean(a) == assemble_mean(b)
    assert canonicalize(a) != canonicalize(b)


def test_tbm_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    model = BlockModel(gen_core((2, 3, 2), seed=rng), gen_memberships((4, 5, 3), (2, 3, 2), seed=rng))
    path = tmp_path / "m.tbm"
    write_tbm(path, model)
    assert read_tbm(path) == model
    lines = dumps_tbm(model).splitlines()
    assert lines[0] == "3" and lines[1] == "2 3 2"
    assert lines[2].split() == [str(x) for x in model.labels[0]]


@pytest.mark.parametrize("text", ["", "2\n2 2\n0 1\n", "2\n2 2\n0 1\n0 1\n1 2 3\n",
                                  "1\n2\n0 0\n1 2\n", "1\n2\n0 5\n1 2\n"])
def test_tbm_rejects_malformed(text):
    with pytest.raises(TensorFormatError):
        loads_tbm(text)
