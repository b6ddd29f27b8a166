"""Spanning-tree raster."""

import logging
from collections.abc import Iterable
from pathlib import Path

from PIL import Image, ImageDraw

from dppfactor import config
from dppfactor.components.shared import palette
from dppfactor.models.structures import UndirectedGraph

logger = logging.getLogger(__name__)


def render(graph: UndirectedGraph, kept: Iterable[int], cell: int = config.CELL_PIXELS) -> Image.Image:
    """Draw the kept edges of a planar graph.

    Vertex positions are scaled by ``cell`` pixels with a one-cell margin, and
    y grows upwards. Every vertex is marked so isolated vertices stay visible.

    Raises:
        ValueError: If the graph carries no vertex positions.
    """
    if len(graph.positions) != graph.vertex_count:
        raise ValueError("Rendering a graph requires one position per vertex.")
    xs = [p[0] for p in graph.positions]
    ys = [p[1] for p in graph.positions]
    width = int(round((max(xs) - min(xs) + 2) * cell)) + 1
    height = int(round((max(ys) - min(ys) + 2) * cell)) + 1

    def pixel(v: int) -> tuple[int, int]:
        x, y = graph.positions[v]
        return int(round((x - min(xs) + 1) * cell)), height - 1 - int(round((y - min(ys) + 1) * cell))

    image = Image.new("RGB", (width, height), palette.BACKGROUND)
    draw = ImageDraw.Draw(image)
    line_width = max(1, cell // 4)
    for e in kept:
        u, v = graph.edges[e]
        draw.line([pixel(u), pixel(v)], fill=palette.TREE_EDGE, width=line_width)
    for v in range(graph.vertex_count):
        draw.point(pixel(v), fill=palette.VERTEX)
    return image


def save(graph: UndirectedGraph, kept: Iterable[int], path: str | Path, cell: int = config.CELL_PIXELS) -> None:
    """Write the tree image as binary (P6) PPM."""
    render(graph, kept, cell).save(path, format="PPM")
    logger.debug("Wrote spanning-tree image to %s", path)
