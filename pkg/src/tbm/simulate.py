"""Seeded synthetic tensors drawn from a tensor block model."""
import json
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import make_rng
from .errors import ConfigError, SimulationError
from .model import BlockModel, Membership, assemble_mean, is_irreducible
from .tensor import DenseTensor, as_array

NOISE_KINDS = ("gaussian", "bernoulli")
SCHEMES = ("balanced", "multinomial")
MAX_CORE_ATTEMPTS = 100
MAX_MEMBERSHIP_ATTEMPTS = 10_000

# stream ids kept far apart so seed s and seed s + 1 never share a stream
_CORE, _MEMBERS, _NOISE = 0, 1 << 32, 2 << 32


@dataclass(frozen=True)
class SimConfig:
    dims: tuple
    ranks: tuple
    noise: str = "gaussian"
    sigma: float = 1.0
    sparsity_p: float = 0.0
    membership_scheme: str = "balanced"
    min_size: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if len(self.dims) != len(self.ranks) or not self.dims:
            raise ConfigError("dims and ranks must be non-empty and of equal length")
        if any(not 1 <= r <= d for r, d in zip(self.ranks, self.dims)):
            raise ConfigError(f"ranks {self.ranks} infeasible for dims {self.dims}")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")
        if not self.sigma >= 0:
            raise ConfigError("sigma must be >= 0")
        if not 0 <= self.sparsity_p <= 1:
            raise ConfigError("sparsity_p must lie in [0, 1]")
        if self.membership_scheme not in SCHEMES:
            raise ConfigError(f"membership_scheme must be one of {SCHEMES}")

    def echo(self):
        out = asdict(self)
        out["dims"], out["ranks"] = list(self.dims), list(self.ranks)
        return out

    def to_json(self):
        return json.dumps(self.echo(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class SimOutput:
    y: DenseTensor
    truth: BlockModel
    theta_true: DenseTensor


def _rng(seed, stream):
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, stream)


def gen_core(ranks, sparsity_p=0.0, noise_kind="gaussian", seed=0):
    """Irreducible core of block means.

    Gaussian regime: each entry is 0 with probability ``sparsity_p`` and
    Uniform[-3, 3] otherwise. Bernoulli regime: entries are probabilities,
    Uniform[0, 1] with the same zero mass. Draws are repeated until the core
    is irreducible.
    """
    ranks = tuple(int(r) for r in ranks)
    rng = _rng(seed, _CORE)
    lo, hi = (-3.0, 3.0) if noise_kind == "gaussian" else (0.0, 1.0)
    for _ in range(MAX_CORE_ATTEMPTS):
        values = rng.uniform(lo, hi, size=ranks)
        zero = rng.random(ranks) < sparsity_p
        core = DenseTensor.from_array(np.where(zero, 0.0, values))
        if is_irreducible(core):
            return core
    raise SimulationError(
        f"no irreducible core with ranks {ranks} and sparsity {sparsity_p} "
        f"after {MAX_CORE_ATTEMPTS} draws")


def gen_memberships(dims, ranks, scheme="balanced", seed=0, min_size=1):
    rng = _rng(seed, _MEMBERS)
    out = []
    for d, r in zip(dims, ranks):
        if scheme == "balanced":
            labels = rng.permutation(np.arange(d) % r)
        elif scheme == "multinomial":
            if r * min_size > d:
                raise ConfigError(f"cannot give {r} clusters at least {min_size} of {d} indices")
            for _ in range(MAX_MEMBERSHIP_ATTEMPTS):
                labels = rng.integers(r, size=d)
                if np.bincount(labels, minlength=r).min() >= min_size:
                    break
            else:
                raise SimulationError("multinomial memberships kept violating min_size")
        else:
            raise ConfigError(f"unknown membership scheme {scheme!r}")
        out.append(Membership(labels, r))
    return out


def sample_observations(theta, noise="gaussian", sigma=1.0, rng=None):
    """Draw ``y`` around the mean ``theta`` (Gaussian) or with success probabilities ``theta``."""
    theta = as_array(theta)
    rng = rng if rng is not None else np.random.default_rng()
    if noise == "gaussian":
        if sigma == 0:
            return DenseTensor.from_array(theta)
        return DenseTensor.from_array(theta + sigma * rng.standard_normal(theta.shape))
    if noise == "bernoulli":
        if np.any(theta < 0) or np.any(theta > 1):
            raise ConfigError("Bernoulli means must lie in [0, 1]")
        return DenseTensor.from_array((rng.random(theta.shape) < theta).astype(np.float64))
    raise ConfigError(f"unknown noise {noise!r}")


def gen_data(config):
    """Simulate ``(y, truth, theta_true)``; bit-identical for a fixed config."""
    core = gen_core(config.ranks, config.sparsity_p, config.noise, make_rng(config.seed, _CORE))
    mems = gen_memberships(config.dims, config.ranks, config.membership_scheme,
                           make_rng(config.seed, _MEMBERS), config.min_size)
    truth = BlockModel(core, mems)
    theta = assemble_mean(truth)
    y = sample_observations(theta, config.noise, config.sigma, make_rng(config.seed, _NOISE))
    return SimOutput(y=y, truth=truth, theta_true=theta)
