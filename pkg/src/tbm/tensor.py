"""Dense order-K tensors and the multilinear algebra on top of them.

Storage is a C-ordered float64 array: the last index varies fastest, so the
linear position of ``(i_1, ..., i_K)`` is
``((i_1 * d_2 + i_2) * d_3 + ...) * d_K + i_K``. The ``.tsr`` text format
writes values in exactly this order.
"""
from math import isfinite, prod

import numpy as np


class TensorFormatError(ValueError):
    """Malformed ``.tsr`` / ``.tbm`` input."""


class DenseTensor:
    """Immutable dense tensor of float64 values.

    Parameters
    ----------
    dims : sequence of int
        Positive mode sizes ``(d_1, ..., d_K)``, ``K >= 1``.
    data : array_like
        Flat values in canonical (last-index-fastest) order, or an array that
        already has shape ``dims``.
    """

    __slots__ = ("_array",)

    def __init__(self, dims, data):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 1:
            raise ValueError("a tensor needs at least one mode")
        if any(d < 1 for d in dims):
            raise ValueError(f"mode sizes must be positive, got {dims}")
        arr = np.array(data, dtype=np.float64)
        if arr.size != prod(dims):
            raise ValueError(
                f"data length {arr.size} does not match dims {dims} (expected {prod(dims)})"
            )
        arr = arr.reshape(dims)
        arr.setflags(write=False)
        self._array = arr

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr.shape, arr)

    @property
    def dims(self):
        return self._array.shape

    @property
    def order(self):
        return self._array.ndim

    @property
    def size(self):
        return self._array.size

    @property
    def data(self):
        """Flat read-only view in canonical order."""
        return self._array.reshape(-1)

    @property
    def array(self):
        """Read-only ndarray view with shape ``dims``."""
        return self._array

    def __getitem__(self, idx):
        return self._array[idx]

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._array, other._array)

    __hash__ = None

    def __repr__(self):
        return f"DenseTensor(dims={self.dims})"


def as_array(t):
    """ndarray view of a DenseTensor or array-like (no copy when possible)."""
    if isinstance(t, DenseTensor):
        return t.array
    return np.asarray(t, dtype=np.float64)


def linear_index(multi_index, dims):
    """Canonical linear position of a multi-index."""
    pos = 0
    for i, d in zip(multi_index, dims):
        if not 0 <= i < d:
            raise IndexError(f"index {tuple(multi_index)} out of range for dims {tuple(dims)}")
        pos = pos * d + int(i)
    return pos


def multi_index(pos, dims):
    """Inverse of :func:`linear_index`."""
    out = []
    for d in reversed(dims):
        pos, i = divmod(int(pos), d)
        out.append(i)
    if pos:
        raise IndexError("linear position out of range")
    return tuple(reversed(out))


def mode_product(t, mat, mode):
    """Multiply tensor ``t`` along ``mode`` (0-based) by ``mat`` of shape ``(s, d_mode)``."""
    arr = as_array(t)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != arr.shape[mode]:
        raise ValueError(
            f"mode {mode}: matrix has shape {mat.shape}, needs {arr.shape[mode]} columns"
        )
    out = np.tensordot(mat, arr, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def multilinear_multiply(t, mats):
    """Tucker product ``t x_1 M_1 x_2 ... x_K M_K``.

    Executed as K successive mode products, so the cost of step k is
    ``s_k`` times the current tensor size rather than a 2K-deep loop.
    Returns a DenseTensor of dims ``(s_1, ..., s_K)``.
    """
    arr = as_array(t)
    if len(mats) != arr.ndim:
        raise ValueError(f"expected {arr.ndim} matrices, got {len(mats)}")
    for k, m in enumerate(mats):
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[1] != arr.shape[k]:
            raise ValueError(
                f"mode {k}: matrix has shape {m.shape}, needs {arr.shape[k]} columns"
            )
    out = arr
    for k, m in enumerate(mats):
        out = mode_product(out, m, k)
    return DenseTensor.from_array(out)


def inner_product(a, b):
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"dims mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.reshape(-1), b.reshape(-1)))


def frobenius_norm(t):
    return float(np.sqrt(inner_product(t, t)))


def max_norm(t):
    arr = as_array(t)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def unfold(t, mode):
    """Mode-``mode`` matricization (0-based mode).

    Row ``i`` is the slice with index ``i`` fixed along ``mode``, flattened
    with the remaining modes in their original order, last fastest.
    """
    arr = as_array(t)
    if not 0 <= mode < arr.ndim:
        raise ValueError(f"mode {mode} out of range for an order-{arr.ndim} tensor")
    return np.moveaxis(arr, mode, 0).reshape(arr.shape[mode], -1)


def fold(mat, mode, dims):
    """Inverse of :func:`unfold`."""
    dims = tuple(dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for an order-{len(dims)} tensor")
    rest = dims[:mode] + dims[mode + 1:]
    arr = np.asarray(mat, dtype=np.float64).reshape((dims[mode],) + rest)
    return DenseTensor.from_array(np.moveaxis(arr, 0, mode))


# -- .tsr text format -------------------------------------------------------

def format_values(values):
    return "\n".join(repr(float(v)) for v in values)


def dumps_tsr(t):
    arr = as_array(t)
    lines = [str(arr.ndim), " ".join(str(d) for d in arr.shape)]
    body = format_values(arr.reshape(-1))
    return "\n".join(lines) + "\n" + (body + "\n" if body else "")


def loads_tsr(text):
    tokens = text.split("\n", 2)
    if len(tokens) < 2:
        raise TensorFormatError("truncated header")
    try:
        k = int(tokens[0].strip())
        dims = tuple(int(x) for x in tokens[1].split())
    except ValueError as exc:
        raise TensorFormatError(f"bad header: {exc}") from None
    if k < 1 or len(dims) != k:
        raise TensorFormatError(f"header declares order {k} but lists {len(dims)} sizes")
    try:
        values = [float(x) for x in (tokens[2].split() if len(tokens) > 2 else [])]
    except ValueError as exc:
        raise TensorFormatError(f"bad value: {exc}") from None
    if len(values) != prod(dims):
        raise TensorFormatError(f"expected {prod(dims)} values, found {len(values)}")
    if not all(isfinite(v) for v in values):
        raise TensorFormatError("non-finite value in tensor body")
    try:
        return DenseTensor(dims, values)
    except ValueError as exc:
        raise TensorFormatError(str(exc)) from None


def write_tsr(path, t):
    with open(path, "w") as fh:
        fh.write(dumps_tsr(t))


def read_tsr(path):
    with open(path) as fh:
        return loads_tsr(fh.read())
