"""Spanning-tree and domino-tiling images (binary PPM)."""

from . import tiling_image, tree_image

__all__ = ["tiling_image", "tree_image"]
