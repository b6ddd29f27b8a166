"""Shared rendering helpers."""

from . import palette

__all__ = ["palette"]
