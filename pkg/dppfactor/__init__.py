"""Exact sampling of determinantal point processes by modified matrix factorization."""

__version__ = "0.1.0"
