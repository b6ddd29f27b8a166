"""Raster rendering of sampled structures."""

from . import images, shared

__all__ = ["images", "shared"]
