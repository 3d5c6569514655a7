"""Seed derivation shared by the estimator and the simulators.

Every random stream in the package is a pure function of a user seed and a
small integer stream id, pushed through the SplitMix64 finalizer.
"""
import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x):
    """SplitMix64 finalizer on a 64-bit unsigned integer."""
    z = (int(x) + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed, stream):
    """Child seed for ``stream`` (restart index, generator role, ...)."""
    return splitmix64((int(seed) + int(stream)) & _MASK)


def make_rng(seed, stream=0):
    """Counter-based (Philox) generator for the derived seed."""
    return np.random.Generator(np.random.Philox(derive_seed(seed, stream)))
