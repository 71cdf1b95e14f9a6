"""Hole spin qubit simulator: strain, self-consistent states, g-tensors and Rabi maps."""

import json

from ._holespin import (
    ConfigError,
    ConvergenceError,
    InvalidInput,
    IoError,
    RunConfig,
    Simulation as _Simulation,
    __version__,
    bulk_hamiltonian,
    load_config,
    parse_config,
    pikus_bir,
    rabi_frequency,
    reconstruct_g_tensor,
    sha256_hex,
    splitting_dot_length,
    weighted_length,
)


class Simulation(_Simulation):
    """Configured device; solve, gtensor and rabi return the metrics as dictionaries."""

    def __init__(self, config):
        if isinstance(config, str):
            config = load_config(config)
        super().__init__(config)

    def solve(self):
        return json.loads(super().solve())

    def gtensor(self):
        return json.loads(super().gtensor())

    def rabi(self):
        return json.loads(super().rabi())


__all__ = [
    "ConfigError",
    "ConvergenceError",
    "InvalidInput",
    "IoError",
    "RunConfig",
    "Simulation",
    "__version__",
    "bulk_hamiltonian",
    "load_config",
    "parse_config",
    "pikus_bir",
    "rabi_frequency",
    "reconstruct_g_tensor",
    "sha256_hex",
    "splitting_dot_length",
    "weighted_length",
]
