from .tensor import TensorFormatError


class ConfigError(ValueError):
    """Infeasible or invalid configuration (ranks, penalties, grids)."""


class InvariantError(RuntimeError):
    """An internal guarantee was violated (for example a rising objective)."""


class SimulationError(RuntimeError):
    """A simulation request cannot be satisfied (e.g. no irreducible core found)."""


__all__ = ["ConfigError", "InvariantError", "SimulationError", "TensorFormatError"]
