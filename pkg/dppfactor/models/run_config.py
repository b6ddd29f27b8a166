"""Runtime configuration objects."""

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from dppfactor import config


class Variant(str, Enum):
    """Sampling algorithm selected on the command line."""

    UNBLOCKED = "unblocked"
    BLOCKED = "blocked"
    TILED = "tiled"
    SPARSE = "sparse"
    ELEMENTARY = "elementary"
    SPECTRAL = "spectral"
    MAP = "map"


# Variants that only accept hermitian kernels
HERMITIAN_ONLY = {Variant.SPARSE, Variant.ELEMENTARY, Variant.SPECTRAL}


@dataclass
class BlockingConfig:
    """Block/tile sizes and thread count of the dense blocked samplers.

    ``block_size=None`` picks 128 for n <= 2000 and 256 above.
    """

    block_size: int | None = None
    tile_size: int = config.DEFAULT_TILE_SIZE
    thread_count: int | str = "all"

    def __post_init__(self) -> None:
        if self.block_size is not None and self.block_size < 1:
            raise ValueError(f"block_size must be positive, got {self.block_size}.")
        if self.tile_size < 1:
            raise ValueError(f"tile_size must be positive, got {self.tile_size}.")
        if self.thread_count != "all" and int(self.thread_count) < 1:
            raise ValueError(f"thread_count must be positive or 'all', got {self.thread_count}.")

    def resolved_block_size(self, n: int) -> int:
        if self.block_size is not None:
            size = self.block_size
        else:
            size = config.SMALL_BLOCK_SIZE if n <= config.BLOCK_SIZE_SWITCH else config.LARGE_BLOCK_SIZE
        return max(1, min(size, self.tile_size, n))

    def resolved_threads(self) -> int:
        if self.thread_count == "all":
            return os.cpu_count() or 1
        return int(self.thread_count)


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    command: str
    seed: int = 0
    precision: int = 64
    variant: Variant = Variant.UNBLOCKED
    blocking: BlockingConfig = field(default_factory=BlockingConfig)
    builder: str | None = None
    kernel_path: Path | None = None
    out: Path | None = None
    image: Path | None = None
    ordering: str | None = None
    trials: int = 200_000
    significance: float = config.CHI_SQUARE_SIGNIFICANCE

    def __post_init__(self) -> None:
        self.variant = Variant(self.variant)
        if self.precision not in (32, 64):
            raise ValueError(f"Precision must be 32 or 64, got {self.precision}.")

    def resolved_ordering(self, grid: tuple[int, int] | None) -> str:
        """The requested ordering, else nested dissection for grid-shaped kernels and natural otherwise."""
        if self.ordering is not None:
            return self.ordering
        return "nested-dissection" if grid is not None else "natural"

    def check_symmetry(self, hermitian: bool) -> None:
        """Reject LDL^H-only variants on general kernels."""
        if self.variant in HERMITIAN_ONLY and not hermitian:
            raise ValueError(f"Variant '{self.variant.value}' requires a hermitian kernel.")
