"""Per-path normal streams keyed by ``(seed, path_index)``.

Each path draws from its own Philox generator, so a path's increments do not
depend on how paths are batched or on how many threads run them.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NoiseSource", "PhiloxNoise", "ZeroNoise", "path_generator"]


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


class NoiseSource:
    """Supplies standard normal increments for a set of paths, block by block."""

    def streams(self, indices):
        raise NotImplementedError


class PhiloxNoise(NoiseSource):
    def __init__(self, seed: int):
        self.seed = int(seed)

    def streams(self, indices):
        gens = [path_generator(self.seed, i) for i in indices]

        def draw(n_steps: int) -> np.ndarray:
            out = np.empty((len(gens), n_steps))
            for row, g in enumerate(gens):
                out[row] = g.standard_normal(n_steps)
            return out

        return draw


class ZeroNoise(NoiseSource):
    """All increments zero: deterministic drift-only paths."""

    def streams(self, indices):
        n = len(indices)
        return lambda n_steps: np.zeros((n, n_steps))
