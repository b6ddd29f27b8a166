"""Combinatorial structures sampled by the toolkit and their validity reports."""

from dataclasses import dataclass, field
from enum import Enum

from dppfactor.errors import DPPError


@dataclass(eq=False)
class UndirectedGraph:
    """Simple graph whose edge order fixes the DPP ground-set indexing.

    ``positions`` holds planar coordinates per vertex, used only for rendering.
    """

    vertex_count: int
    edges: list[tuple[int, int]]
    positions: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.vertex_count < 1:
            raise DPPError("A graph needs at least one vertex.")
        seen = set()
        for u, v in self.edges:
            if not 0 <= u < v < self.vertex_count:
                raise DPPError(f"Edge ({u}, {v}) must satisfy 0 <= u < v < {self.vertex_count}.")
            if (u, v) in seen:
                raise DPPError(f"Duplicate edge ({u}, {v}).")
            seen.add((u, v))

    @property
    def edge_count(self) -> int:
        return len(self.edges)


class Orientation(str, Enum):
    """Direction from a domino's black square to its white square."""

    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"


@dataclass(eq=False)
class AztecDiamond:
    """Aztec diamond of order ``order``.

    Squares are lower-left corners (x, y) with |x + 1/2| + |y + 1/2| <= order;
    (x + y) even is black. ``edges`` lists (white, black) index pairs into
    ``white`` and ``black`` and is the DPP ground set.
    """

    order: int
    black: list[tuple[int, int]]
    white: list[tuple[int, int]]
    edges: list[tuple[int, int]]
    weights: list[complex]

    @property
    def ground_set_size(self) -> int:
        return len(self.edges)

    def orientation(self, edge: int) -> Orientation:
        """Orientation of a domino read from its black square."""
        w, b = self.edges[edge]
        (wx, wy), (bx, by) = self.white[w], self.black[b]
        if wx < bx:
            return Orientation.LEFT
        if wx > bx:
            return Orientation.RIGHT
        return Orientation.UP if wy > by else Orientation.DOWN


@dataclass
class SpanningTreeReport:
    """Validity of a sampled edge subset as a spanning tree."""

    valid: bool
    edge_count: int
    expected_edges: int
    acyclic: bool
    connected: bool


@dataclass
class TilingReport:
    """Validity of a sampled edge subset as a perfect matching (domino tiling)."""

    valid: bool
    uncovered: int
    overcovered: int
    orientations: list[Orientation] = field(default_factory=list)
