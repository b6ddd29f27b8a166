"""Seeded uniform-draw stream."""

import numpy as np

_MAX_SEED = 2**64


class RngStream:
    """Deterministic stream of uniform draws in [0, 1).

    Backed by a PCG64 generator. A block of ``count`` draws taken through
    ``uniforms`` is identical to ``count`` successive calls of ``uniform``, so
    blocked and unblocked samplers can share one stream alignment.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= int(seed) < _MAX_SEED:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}.")
        self.seed = int(seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))
        self.draws = 0

    def uniform(self) -> float:
        self.draws += 1
        return float(self._generator.random())

    def uniforms(self, count: int) -> np.ndarray:
        """Take the next ``count`` draws as a float64 array."""
        self.draws += count
        return self._generator.random(count)

    def standard_normal(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Gaussian draws for random kernel construction (not counted as draws)."""
        return self._generator.standard_normal(shape)

    def spawn(self, count: int) -> list["RngStream"]:
        """Independent child streams derived from this stream's seed."""
        children = np.random.SeedSequence(self.seed).spawn(count)
        return [RngStream(int(child.generate_state(1, np.uint64)[0])) for child in children]

    def __repr__(self) -> str:
        return f"<RngStream(seed={self.seed}, draws={self.draws})>"
