"""Registry of kernel builders addressed by strings such as ``grid:40x40``."""

import logging
import re
from collections.abc import Callable
from dataclasses import dataclass

from dppfactor.errors import BuilderSyntaxError
from dppfactor.models.kernel import MarginalKernel, ProjectionKernel
from dppfactor.models.rng import RngStream
from dppfactor.models.sparse import SparseKernel
from dppfactor.models.structures import AztecDiamond, UndirectedGraph
from dppfactor.services import kernel_service

logger = logging.getLogger(__name__)

_SIZE = re.compile(r"^(\d+)x(\d+)$")


@dataclass(eq=False)
class BuiltKernel:
    """A kernel plus the structure its ground set indexes, when there is one.

    ``grid`` is the (width, height) of grid-shaped ground sets and lets the
    sparse sampler use nested dissection. ``projection`` is set for kernels
    the elementary sampler can draw from.
    """

    name: str
    kernel: MarginalKernel | SparseKernel
    graph: UndirectedGraph | None = None
    aztec: AztecDiamond | None = None
    grid: tuple[int, int] | None = None
    projection: ProjectionKernel | None = None


def _integer(text: str, descriptor: str) -> int:
    if not text.isdigit() or int(text) < 1:
        raise BuilderSyntaxError(f"Expected a positive integer in '{descriptor}', got '{text}'.")
    return int(text)


def _size(text: str, descriptor: str) -> tuple[int, int]:
    match = _SIZE.match(text)
    if match is None:
        raise BuilderSyntaxError(f"Expected WIDTHxHEIGHT in '{descriptor}', got '{text}'.")
    width, height = int(match.group(1)), int(match.group(2))
    if width < 1 or height < 1:
        raise BuilderSyntaxError(f"Dimensions in '{descriptor}' must be positive.")
    return width, height


def _aztec(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    aztec = kernel_service.aztec_diamond(_integer(args[0], descriptor))
    return BuiltKernel(descriptor, kernel_service.aztec_kernel(aztec, precision), aztec=aztec)


def _spanning_trees(graph: UndirectedGraph, descriptor: str, precision: int) -> BuiltKernel:
    projection = kernel_service.ust_kernel(graph)
    kernel = projection.kernel.astype(precision)
    return BuiltKernel(descriptor, kernel, graph=graph, projection=projection)


def _grid(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    return _spanning_trees(kernel_service.grid_graph(*_size(args[0], descriptor)), descriptor, precision)


def _hex(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    return _spanning_trees(kernel_service.hex_graph(_integer(args[0], descriptor)), descriptor, precision)


def _laplacian(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    width, height = _size(args[0], descriptor)
    try:
        sigma = float(args[1])
    except ValueError as error:
        raise BuilderSyntaxError(f"Expected a real sigma in '{descriptor}', got '{args[1]}'.") from error
    kernel = kernel_service.laplacian2d_kernel(width, height, sigma)
    if precision == 32:
        kernel = SparseKernel(kernel.lower.astype("float32"))
    return BuiltKernel(descriptor, kernel, grid=(width, height))


def _random_hermitian(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    kernel = kernel_service.random_admissible_hermitian(_integer(args[0], descriptor), rng)
    return BuiltKernel(descriptor, kernel.astype(precision))


def _random_nonhermitian(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    kernel = kernel_service.random_admissible_nonhermitian(_integer(args[0], descriptor), rng)
    return BuiltKernel(descriptor, kernel.astype(precision))


def _identity(args: list[str], descriptor: str, rng: RngStream, precision: int) -> BuiltKernel:
    return BuiltKernel(descriptor, kernel_service.identity_kernel(_integer(args[0], descriptor)).astype(precision))


# name -> (argument count, builder)
BUILDERS: dict[str, tuple[int, Callable[[list[str], str, RngStream, int], BuiltKernel]]] = {
    "aztec": (1, _aztec),
    "grid": (1, _grid),
    "hex": (1, _hex),
    "laplacian2d": (2, _laplacian),
    "random-hermitian": (1, _random_hermitian),
    "random-nonhermitian": (1, _random_nonhermitian),
    "identity": (1, _identity),
}


def build(descriptor: str, rng: RngStream | None = None, precision: int = 64) -> BuiltKernel:
    """Build the kernel named by ``descriptor``.

    Args:
        descriptor: ``name:arg[:arg]``, e.g. ``aztec:10`` or ``laplacian2d:200x200:0.72``.
        rng: Stream for the random builders; seed 0 when omitted.
        precision: 32 or 64.

    Raises:
        BuilderSyntaxError: If the name is unknown or the arguments malformed.
    """
    name, *args = descriptor.strip().split(":")
    if name not in BUILDERS:
        known = ", ".join(sorted(BUILDERS))
        raise BuilderSyntaxError(f"Unknown builder '{name}'; expected one of {known}.")
    arity, builder = BUILDERS[name]
    if len(args) != arity:
        raise BuilderSyntaxError(f"Builder '{name}' takes {arity} argument(s), got '{descriptor}'.")

    built = builder(args, descriptor, rng or RngStream(0), precision)
    logger.debug("Built %s: %r", descriptor, built.kernel)
    return built
