"""Blocked and tiled-parallel samplers and the matching plain factorizations.

The blocked variants process each diagonal panel with the unblocked
elimination, form the off-diagonal panels by triangular solves and apply the
trailing Schur update block by block. The tiled variants express the same
steps as a task graph over tiles. Bernoulli draws only happen in the diagonal
tasks, which form a sequential chain, and every tile is updated in a fixed
order, so the result does not depend on the number of threads.
"""

import logging
from collections.abc import Callable, Hashable
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait

import networkx as nx
import numpy as np
from scipy.linalg import solve_triangular

from dppfactor import config
from dppfactor.models.kernel import FactoredKernel, MarginalKernel, Symmetry
from dppfactor.models.rng import RngStream
from dppfactor.models.run_config import BlockingConfig
from dppfactor.models.sample import Sample
from dppfactor.services.sampling_service import Mode, eliminate, imaginary_tolerance, working_copy

logger = logging.getLogger(__name__)


def tile_bounds(n: int, size: int) -> list[tuple[int, int]]:
    """Half-open ranges of width ``size`` covering range(n); the last one may be short."""
    return [(start, min(start + size, n)) for start in range(0, n, size)]


class _Elimination:
    """Shared state of one blocked or tiled run over ``matrix``."""

    def __init__(
        self,
        matrix: np.ndarray,
        hermitian: bool,
        mode: Mode,
        uniforms: np.ndarray | None,
        tolerance: float,
        imag_tolerance: float,
    ) -> None:
        n = matrix.shape[0]
        self.matrix = matrix
        self.hermitian = hermitian
        self.mode = mode
        self.uniforms = np.zeros(n) if uniforms is None else uniforms
        self.tolerance = tolerance
        self.imag_tolerance = imag_tolerance
        self.pivots = np.zeros(n, dtype=np.float64)
        self.decisions = np.zeros(n, dtype=np.bool_)

    # Tile primitives. ``r``, ``c`` and ``k`` are (start, stop) ranges.

    def factor_diagonal(self, k: tuple[int, int], block_size: int | None = None) -> None:
        """Decide the pivots of diagonal tile ``k``, blocking it again if asked."""
        k0, k1 = k
        if block_size is None or block_size >= k1 - k0:
            pivots, decisions = eliminate(
                self.matrix[k0:k1, k0:k1],
                self.hermitian,
                self.mode,
                uniforms=self.uniforms[k0:k1],
                tolerance=self.tolerance,
                imag_tolerance=self.imag_tolerance,
                offset=k0,
            )
            self.pivots[k0:k1] = pivots
            self.decisions[k0:k1] = decisions
            return
        bounds = [(k0 + s, k0 + e) for s, e in tile_bounds(k1 - k0, block_size)]
        self.run_blocked(bounds)

    def solve_lower(self, r: tuple[int, int], k: tuple[int, int]) -> None:
        """A[r, k] <- A[r, k] U[k, k]^{-1}."""
        a = self.matrix
        a[r[0] : r[1], k[0] : k[1]] = solve_triangular(
            a[k[0] : k[1], k[0] : k[1]], a[r[0] : r[1], k[0] : k[1]].T, trans="T", lower=False
        ).T

    def solve_upper(self, k: tuple[int, int], c: tuple[int, int]) -> None:
        """A[k, c] <- L[k, k]^{-1} A[k, c]."""
        a = self.matrix
        a[k[0] : k[1], c[0] : c[1]] = solve_triangular(
            a[k[0] : k[1], k[0] : k[1]], a[k[0] : k[1], c[0] : c[1]], lower=True, unit_diagonal=True
        )

    def solve_hermitian(self, r: tuple[int, int], k: tuple[int, int]) -> None:
        """A[r, k] <- A[r, k] L[k, k]^{-H} D[k]^{-1}."""
        a = self.matrix
        lower = a[k[0] : k[1], k[0] : k[1]]
        panel = a[r[0] : r[1], k[0] : k[1]]
        w = solve_triangular(lower, panel.conj().T, lower=True, unit_diagonal=True).conj().T
        a[r[0] : r[1], k[0] : k[1]] = w / self.pivot_block(k)[None, :]

    def pivot_block(self, k: tuple[int, int]) -> np.ndarray:
        """Real D of a factored diagonal tile."""
        return np.diagonal(self.matrix[k[0] : k[1], k[0] : k[1]]).real

    def update(self, r: tuple[int, int], c: tuple[int, int], k: tuple[int, int]) -> None:
        """Schur update of tile (r, c) by panel step ``k``."""
        a = self.matrix
        if self.hermitian:
            scaled = a[r[0] : r[1], k[0] : k[1]] * self.pivot_block(k)[None, :]
            product = scaled @ a[c[0] : c[1], k[0] : k[1]].conj().T
        else:
            product = a[r[0] : r[1], k[0] : k[1]] @ a[k[0] : k[1], c[0] : c[1]]
        a[r[0] : r[1], c[0] : c[1]] -= product

    def solve_panel(self, r: tuple[int, int], k: tuple[int, int]) -> None:
        if self.hermitian:
            self.solve_hermitian(r, k)
        else:
            self.solve_lower(r, k)
            self.solve_upper(k, r)

    def trailing_pairs(self, bounds: list[tuple[int, int]], step: int):
        """Tile pairs updated after panel ``step``; lower ones only when hermitian."""
        for i in range(step + 1, len(bounds)):
            for j in range(step + 1, len(bounds)):
                if self.hermitian and j > i:
                    continue
                yield i, j

    def run_blocked(self, bounds: list[tuple[int, int]]) -> None:
        for step, k in enumerate(bounds):
            self.factor_diagonal(k)
            for i in range(step + 1, len(bounds)):
                self.solve_panel(bounds[i], k)
            for i, j in self.trailing_pairs(bounds, step):
                self.update(bounds[i], bounds[j], k)


def build_task_graph(tile_count: int, hermitian: bool) -> nx.DiGraph:
    """Dependency graph of a tiled factorization over a tile_count x tile_count grid.

    Nodes are ("factor", k), ("solve", k, i) for panel tiles, ("upper", k, j)
    for the LU row panel, and ("update", k, i, j). Each task depends on the
    last task that wrote any tile it touches.
    """
    graph = nx.DiGraph()
    last_acted_on: dict[tuple[int, int], Hashable] = {}

    def touch(node: Hashable, *tiles: tuple[int, int]) -> None:
        graph.add_node(node)
        for tile in tiles:
            if tile in last_acted_on:
                graph.add_edge(last_acted_on[tile], node)

    for k in range(tile_count):
        factor = ("factor", k)
        touch(factor, (k, k))
        if k > 0:
            graph.add_edge(("factor", k - 1), factor)
        last_acted_on[(k, k)] = factor

        for i in range(k + 1, tile_count):
            solve = ("solve", k, i)
            touch(solve, (i, k))
            graph.add_edge(factor, solve)
            last_acted_on[(i, k)] = solve
            if not hermitian:
                upper = ("upper", k, i)
                touch(upper, (k, i))
                graph.add_edge(factor, upper)
                last_acted_on[(k, i)] = upper

        for i in range(k + 1, tile_count):
            for j in range(k + 1, tile_count):
                if hermitian and j > i:
                    continue
                update = ("update", k, i, j)
                touch(update, (i, j))
                graph.add_edge(("solve", k, i), update)
                graph.add_edge(("solve", k, j) if hermitian else ("upper", k, j), update)
                last_acted_on[(i, j)] = update
    return graph


def run_task_graph(graph: nx.DiGraph, action: Callable[[Hashable], None], threads: int) -> None:
    """Execute ``action`` on every node once all of its predecessors finished.

    Raises:
        Whatever ``action`` raised; tasks not yet started are abandoned.
    """
    remaining = {node: graph.in_degree(node) for node in graph}
    ready = sorted(node for node, degree in remaining.items() if degree == 0)
    running: dict[Future, Hashable] = {}

    with ThreadPoolExecutor(max_workers=threads) as pool:
        while ready or running:
            for node in ready:
                running[pool.submit(action, node)] = node
            ready = []
            done, _ = wait(running, return_when=FIRST_COMPLETED)
            for future in done:
                node = running.pop(future)
                future.result()
                for successor in graph.successors(node):
                    remaining[successor] -= 1
                    if remaining[successor] == 0:
                        ready.append(successor)
            ready.sort()


def _run_tiled(state: _Elimination, cfg: BlockingConfig) -> None:
    n = state.matrix.shape[0]
    bounds = tile_bounds(n, cfg.tile_size)
    block_size = cfg.resolved_block_size(n)
    graph = build_task_graph(len(bounds), state.hermitian)
    threads = cfg.resolved_threads()
    logger.debug(
        "Tiled run: n=%d, tile=%d, block=%d, threads=%d, tasks=%d",
        n, cfg.tile_size, block_size, threads, graph.number_of_nodes(),
    )

    def action(node: Hashable) -> None:
        kind, k, *rest = node
        if kind == "factor":
            state.factor_diagonal(bounds[k], block_size)
        elif kind == "solve":
            if state.hermitian:
                state.solve_hermitian(bounds[rest[0]], bounds[k])
            else:
                state.solve_lower(bounds[rest[0]], bounds[k])
        elif kind == "upper":
            state.solve_upper(bounds[k], bounds[rest[0]])
        else:
            state.update(bounds[rest[0]], bounds[rest[1]], bounds[k])

    run_task_graph(graph, action, threads)


def _start(
    kernel: MarginalKernel, rng: RngStream, tolerance: float
) -> tuple[_Elimination, Symmetry]:
    state = _Elimination(
        working_copy(kernel),
        kernel.is_hermitian,
        Mode.SAMPLE,
        rng.uniforms(kernel.order),
        tolerance,
        imaginary_tolerance(kernel, tolerance),
    )
    return state, kernel.symmetry


def _finish(state: _Elimination, symmetry: Symmetry) -> tuple[Sample, FactoredKernel]:
    return (
        Sample.from_decisions(state.pivots, state.decisions),
        FactoredKernel(state.matrix, symmetry),
    )


def sample_blocked(
    kernel: MarginalKernel,
    rng: RngStream,
    cfg: BlockingConfig | None = None,
    tolerance: float = config.PIVOT_TOLERANCE,
) -> tuple[Sample, FactoredKernel]:
    """Blocked right-looking DPP sampler.

    Hermitian kernels take the LDL^H path, all others the LU path. With
    ``block_size >= n`` the result is byte-identical to the unblocked sampler.
    """
    cfg = cfg or BlockingConfig()
    state, symmetry = _start(kernel, rng, tolerance)
    block_size = cfg.resolved_block_size(kernel.order)
    logger.debug("Blocked run: n=%d, block=%d", kernel.order, block_size)
    state.run_blocked(tile_bounds(kernel.order, block_size))
    return _finish(state, symmetry)


def sample_tiled_parallel(
    kernel: MarginalKernel,
    rng: RngStream,
    cfg: BlockingConfig | None = None,
    tolerance: float = config.PIVOT_TOLERANCE,
) -> tuple[Sample, FactoredKernel]:
    """Tiled DPP sampler scheduled as a task graph on a thread pool.

    Output is byte-identical for any ``thread_count``. When ``block_size``
    equals ``tile_size`` it is also byte-identical to ``sample_blocked``.
    """
    cfg = cfg or BlockingConfig()
    state, symmetry = _start(kernel, rng, tolerance)
    _run_tiled(state, cfg)
    return _finish(state, symmetry)


def _plain(matrix: np.ndarray, hermitian: bool) -> _Elimination:
    matrix = np.array(matrix, order="C", copy=True)
    if not np.issubdtype(matrix.dtype, np.inexact):
        matrix = matrix.astype(np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {matrix.shape}.")
    return _Elimination(matrix, hermitian, Mode.FACTOR, None, config.PIVOT_TOLERANCE, np.inf)


def factor_blocked_lu(matrix: np.ndarray, cfg: BlockingConfig | None = None) -> FactoredKernel:
    """Blocked LU without pivoting.

    Raises:
        ZeroPivot: If a pivot's magnitude drops below ``ZERO_PIVOT``.
    """
    cfg = cfg or BlockingConfig()
    state = _plain(matrix, False)
    n = state.matrix.shape[0]
    state.run_blocked(tile_bounds(n, cfg.resolved_block_size(n)))
    return FactoredKernel(state.matrix, Symmetry.GENERAL)


def factor_blocked_ldl(matrix: np.ndarray, cfg: BlockingConfig | None = None) -> FactoredKernel:
    """Blocked LDL^H without pivoting; only the lower triangle is read."""
    cfg = cfg or BlockingConfig()
    state = _plain(matrix, True)
    n = state.matrix.shape[0]
    state.run_blocked(tile_bounds(n, cfg.resolved_block_size(n)))
    return FactoredKernel(state.matrix, Symmetry.HERMITIAN)


def factor_tiled_lu(matrix: np.ndarray, cfg: BlockingConfig | None = None) -> FactoredKernel:
    state = _plain(matrix, False)
    _run_tiled(state, cfg or BlockingConfig())
    return FactoredKernel(state.matrix, Symmetry.GENERAL)


def factor_tiled_ldl(matrix: np.ndarray, cfg: BlockingConfig | None = None) -> FactoredKernel:
    state = _plain(matrix, True)
    _run_tiled(state, cfg or BlockingConfig())
    return FactoredKernel(state.matrix, Symmetry.HERMITIAN)
