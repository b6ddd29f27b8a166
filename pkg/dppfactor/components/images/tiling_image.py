"""Domino-tiling raster.

Square (x, y) of an order-d diamond occupies the ``cell`` x ``cell`` pixel
block at column x + d and row d - 1 - y, so the image is 2d cells wide and
high with the diamond's top row first. Both squares of a kept domino are
filled with its orientation colour and the domino is outlined.
"""

import logging
from collections.abc import Iterable
from pathlib import Path

from PIL import Image, ImageDraw

from dppfactor import config
from dppfactor.components.shared import palette
from dppfactor.models.structures import AztecDiamond

logger = logging.getLogger(__name__)


def render(aztec: AztecDiamond, kept: Iterable[int], cell: int = config.CELL_PIXELS) -> Image.Image:
    d = aztec.order
    size = 2 * d * cell
    image = Image.new("RGB", (size, size), palette.BACKGROUND)
    draw = ImageDraw.Draw(image)

    for e in kept:
        w, b = aztec.edges[e]
        squares = (aztec.white[w], aztec.black[b])
        left = (min(x for x, _ in squares) + d) * cell
        top = (d - 1 - max(y for _, y in squares)) * cell
        right = (max(x for x, _ in squares) + d + 1) * cell - 1
        bottom = (d - min(y for _, y in squares)) * cell - 1
        outline = palette.DOMINO_OUTLINE if cell >= 4 else None
        fill = palette.orientation_color(aztec.orientation(e))
        draw.rectangle([left, top, right, bottom], fill=fill, outline=outline)
    return image


def save(aztec: AztecDiamond, kept: Iterable[int], path: str | Path, cell: int = config.CELL_PIXELS) -> None:
    """Write the tiling image as binary (P6) PPM."""
    render(aztec, kept, cell).save(path, format="PPM")
    logger.debug("Wrote tiling image to %s", path)
