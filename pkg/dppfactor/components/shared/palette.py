"""Colours used by the image writers."""

from dppfactor.models.structures import Orientation

RGB = tuple[int, int, int]

BACKGROUND: RGB = (255, 255, 255)
TREE_EDGE: RGB = (20, 20, 20)
VERTEX: RGB = (150, 150, 150)
DOMINO_OUTLINE: RGB = (40, 40, 40)

ORIENTATION_COLORS: dict[Orientation, RGB] = {
    Orientation.LEFT: (40, 80, 200),  # blue
    Orientation.RIGHT: (205, 45, 40),  # red
    Orientation.UP: (240, 200, 30),  # yellow
    Orientation.DOWN: (50, 160, 70),  # green
}


def orientation_color(orientation: Orientation | str) -> RGB:
    """Fill colour of a domino of the given orientation."""
    return ORIENTATION_COLORS[Orientation(orientation)]
