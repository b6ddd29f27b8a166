"""Concrete marginal kernels and decoders for the structures they generate."""

import logging
from collections.abc import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy import linalg

from dppfactor import config
from dppfactor.errors import (
    DisconnectedGraph,
    IndefiniteL,
    InvalidKernel,
    InvalidSigma,
    SingularKasteleyn,
)
from dppfactor.models.kernel import MarginalKernel, ProjectionKernel, Symmetry, dtype_for, symmetrize
from dppfactor.models.rng import RngStream
from dppfactor.models.sparse import SparseKernel
from dppfactor.models.structures import (
    AztecDiamond,
    SpanningTreeReport,
    TilingReport,
    UndirectedGraph,
)

logger = logging.getLogger(__name__)


# Graphs


def grid_graph(width: int, height: int) -> UndirectedGraph:
    """width x height box of Z^2; vertex (x, y) is y * width + x.

    Edges are listed per vertex in row-major order, right neighbour first.
    """
    if width < 1 or height < 1:
        raise ValueError(f"Grid dimensions must be positive, got {width}x{height}.")
    edges = []
    for y in range(height):
        for x in range(width):
            v = y * width + x
            if x + 1 < width:
                edges.append((v, v + 1))
            if y + 1 < height:
                edges.append((v, v + width))
    positions = [(float(x), float(y)) for y in range(height) for x in range(width)]
    return UndirectedGraph(width * height, edges, positions)


def hex_graph(d: int) -> UndirectedGraph:
    """Brick-wall section of the honeycomb lattice with 6d^2 edges.

    Vertices sit on 2d rows of 2d + 1 columns; vertex (c, r) is
    r * (2d + 1) + c. Every row is a path, and rows r and r + 1 are joined at
    the columns c with c + r even. The section holds 2d^2 - 2d + 1 hexagons;
    d = 10 has 299.101 as log(#spanning trees).
    """
    if d < 1:
        raise ValueError(f"Hexagonal size must be positive, got {d}.")
    columns, rows = 2 * d + 1, 2 * d
    edges = []
    for r in range(rows):
        for c in range(columns):
            v = r * columns + c
            if c + 1 < columns:
                edges.append((v, v + 1))
            if r + 1 < rows and (c + r) % 2 == 0:
                edges.append((v, v + columns))
    positions = [(float(c), float(r)) for r in range(rows) for c in range(columns)]
    return UndirectedGraph(rows * columns, edges, positions)


def to_networkx(graph: UndirectedGraph, edges: Iterable[int] | None = None) -> nx.Graph:
    """Graph over all vertices, holding every edge or only the listed edge indices."""
    g = nx.Graph()
    g.add_nodes_from(range(graph.vertex_count))
    chosen = graph.edges if edges is None else [graph.edges[e] for e in edges]
    g.add_edges_from(chosen)
    return g


def ust_kernel(graph: UndirectedGraph) -> ProjectionKernel:
    """Transfer-current projection kernel of the uniform spanning tree.

    K projects onto the row space of the reduced signed incidence matrix B
    (vertex 0 dropped; edge (u, v) has +1 at u and -1 at v). It is formed from
    an orthonormal basis Q of B^T's columns as Q Q^T.

    Raises:
        DisconnectedGraph: If the graph is not connected.
    """
    if not nx.is_connected(to_networkx(graph)):
        raise DisconnectedGraph(f"Graph with {graph.vertex_count} vertices is not connected.")
    incidence = np.zeros((graph.vertex_count, graph.edge_count))
    for e, (u, v) in enumerate(graph.edges):
        incidence[u, e] = 1.0
        incidence[v, e] = -1.0
    basis, _ = linalg.qr(incidence[1:].T, mode="economic")
    kernel = ProjectionKernel.from_matrix(basis @ basis.T, validate=False)
    logger.debug("UST kernel: %d edges, rank %d", graph.edge_count, kernel.rank)
    return kernel


def spanning_tree_log_count(graph: UndirectedGraph) -> float:
    """log(#spanning trees) from the reduced Laplacian's log-determinant."""
    g = to_networkx(graph)
    if not nx.is_connected(g):
        raise DisconnectedGraph(f"Graph with {graph.vertex_count} vertices is not connected.")
    if graph.vertex_count == 1:
        return 0.0
    laplacian = nx.laplacian_matrix(g, nodelist=range(graph.vertex_count)).toarray()
    _, logdet = np.linalg.slogdet(laplacian[1:, 1:].astype(np.float64))
    return float(logdet)


# Aztec diamond


def aztec_diamond(d: int) -> AztecDiamond:
    """Squares, dominoes and Kasteleyn weights of the Aztec diamond of order d.

    Squares are enumerated row by row from the bottom. Each white square lists
    its black neighbours left, right, down, up; horizontal dominoes weigh 1 and
    vertical ones i.
    """
    if d < 1:
        raise ValueError(f"Aztec diamond order must be positive, got {d}.")
    squares = [
        (x, y)
        for y in range(-d, d)
        for x in range(-d, d)
        if abs(x + 0.5) + abs(y + 0.5) <= d
    ]
    black = [s for s in squares if (s[0] + s[1]) % 2 == 0]
    white = [s for s in squares if (s[0] + s[1]) % 2 != 0]
    black_index = {s: i for i, s in enumerate(black)}

    edges, weights = [], []
    for w, (x, y) in enumerate(white):
        for dx, dy, weight in ((-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1j), (0, 1, 1j)):
            b = black_index.get((x + dx, y + dy))
            if b is not None:
                edges.append((w, b))
                weights.append(complex(weight))
    return AztecDiamond(d, black, white, edges, weights)


def kasteleyn_matrix(aztec: AztecDiamond) -> np.ndarray:
    """Rows are white squares, columns black squares."""
    matrix = np.zeros((len(aztec.white), len(aztec.black)), dtype=np.complex128)
    for (w, b), weight in zip(aztec.edges, aztec.weights):
        matrix[w, b] = weight
    return matrix


def aztec_kernel(d: int | AztecDiamond, precision: int = 64) -> MarginalKernel:
    """Non-hermitian domino kernel C[e][f] = M[w_e, b_e] * M^{-1}[b_f, w_e].

    Raises:
        SingularKasteleyn: If the Kasteleyn matrix cannot be inverted.
        InvalidKernel: If the diagonal is not real in [0, 1] within tolerance.
    """
    aztec = d if isinstance(d, AztecDiamond) else aztec_diamond(d)
    matrix = kasteleyn_matrix(aztec)
    try:
        inverse = linalg.inv(matrix)
    except (linalg.LinAlgError, ValueError) as error:
        raise SingularKasteleyn(f"Kasteleyn matrix of order {aztec.order} is singular.") from error

    whites = np.array([w for w, _ in aztec.edges])
    blacks = np.array([b for _, b in aztec.edges])
    entries = inverse[blacks[None, :], whites[:, None]]
    entries *= matrix[whites, blacks][:, None]

    diagonal = np.diagonal(entries)
    tol = config.AZTEC_DIAGONAL_TOLERANCE
    out_of_range = diagonal.real.min() < -tol or diagonal.real.max() > 1 + tol
    if out_of_range or np.abs(diagonal.imag).max() > tol:
        raise InvalidKernel(f"Aztec kernel of order {aztec.order} has a diagonal outside [0, 1].")
    np.fill_diagonal(entries, np.clip(diagonal.real, 0.0, 1.0))
    logger.debug("Aztec kernel: order %d, %d dominoes", aztec.order, aztec.ground_set_size)
    return MarginalKernel(entries.astype(dtype_for(precision, True), copy=False), Symmetry.GENERAL)


# Sparse Laplacian


def laplacian2d_kernel(width: int, height: int, sigma: float) -> SparseKernel:
    """(sigma / 8) (I - Delta) for the 5-point Dirichlet Laplacian Delta.

    Vertex (x, y) is y * width + x. The diagonal is 5 sigma / 8, neighbours
    couple with -sigma / 8 and the spectrum lies in (sigma / 8, 9 sigma / 8).

    Raises:
        InvalidSigma: If sigma is outside (0, 8/9], where the kernel stops being admissible.
    """
    if not 0 < sigma <= config.LAPLACIAN_MAX_SIGMA:
        raise InvalidSigma(f"sigma must lie in (0, 8/9], got {sigma}.")
    if width < 2 or height < 2:
        raise ValueError(f"Laplacian grid must be at least 2x2, got {width}x{height}.")
    n = width * height
    scale = sigma / 8.0
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices, data = [], []
    for v in range(n):
        x = v % width
        indices.append(v)
        data.append(5.0 * scale)
        if x + 1 < width:
            indices.append(v + 1)
            data.append(-scale)
        if v + width < n:
            indices.append(v + width)
            data.append(-scale)
        indptr[v + 1] = len(indices)
    return SparseKernel.from_arrays(n, indptr, np.asarray(indices), np.asarray(data))


# Random admissible kernels


def random_unitary(n: int, rng: RngStream, complex_valued: bool = True) -> np.ndarray:
    """Haar-distributed unitary from the QR of a Gaussian matrix, phases fixed by R's diagonal."""
    gaussian = rng.standard_normal((n, n))
    if complex_valued:
        gaussian = (gaussian + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = linalg.qr(gaussian)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


def random_admissible_hermitian(
    n: int,
    rng: RngStream,
    spectrum: Sequence[float] | None = None,
    complex_valued: bool = True,
) -> MarginalKernel:
    """Q diag(spectrum) Q^H for a random unitary Q.

    Without a spectrum, eigenvalues are drawn uniformly from [0, 1).
    """
    eigenvalues = rng.uniforms(n) if spectrum is None else np.asarray(spectrum, dtype=np.float64)
    if eigenvalues.shape != (n,):
        raise ValueError(f"Expected {n} eigenvalues, got {eigenvalues.size}.")
    if eigenvalues.min() < 0 or eigenvalues.max() > 1:
        raise ValueError("Spectrum of an admissible hermitian kernel must lie in [0, 1].")
    q = random_unitary(n, rng, complex_valued)
    entries = symmetrize((q * eigenvalues[None, :]) @ q.conj().T)
    np.fill_diagonal(entries, np.clip(np.diagonal(entries).real, 0.0, 1.0))
    return MarginalKernel(entries, Symmetry.HERMITIAN)


def random_admissible_nonhermitian(
    n: int, rng: RngStream, spectrum: Sequence[float] | None = None
) -> MarginalKernel:
    """D^{-1} K D for a random admissible hermitian K and complex diagonal D.

    |D_ii| is uniform in [0.5, 2] and its phase uniform on the circle.
    """
    hermitian = random_admissible_hermitian(n, rng, spectrum)
    moduli = 0.5 + 1.5 * rng.uniforms(n)
    phases = np.exp(2j * np.pi * rng.uniforms(n))
    return hermitian.similarity(moduli * phases)


def marginal_from_lensemble(ensemble: np.ndarray) -> MarginalKernel:
    """K = I - (L + I)^{-1} for a hermitian positive semi-definite L.

    Raises:
        IndefiniteL: If L has an eigenvalue below -tolerance.
    """
    ensemble = symmetrize(np.asarray(ensemble))
    n = ensemble.shape[0]
    smallest = float(linalg.eigvalsh(ensemble).min())
    if smallest < -config.LENSEMBLE_TOLERANCE:
        raise IndefiniteL(f"L-ensemble kernel has eigenvalue {smallest!r}.")
    identity = np.eye(n)
    entries = symmetrize(identity - linalg.solve(ensemble + identity, identity, assume_a="pos"))
    np.fill_diagonal(entries, np.clip(np.diagonal(entries).real, 0.0, 1.0))
    return MarginalKernel(entries, Symmetry.HERMITIAN)


def identity_kernel(n: int) -> MarginalKernel:
    return MarginalKernel(np.eye(n), Symmetry.HERMITIAN)


# Decoders


def _check_indices(kept: Iterable[int], size: int) -> list[int]:
    kept = [int(e) for e in kept]
    for e in kept:
        if not 0 <= e < size:
            raise ValueError(f"Index {e} is outside the ground set of size {size}.")
    return kept


def decode_spanning_tree(graph: UndirectedGraph, kept: Iterable[int]) -> SpanningTreeReport:
    """Check that the kept edges form a spanning tree."""
    kept = _check_indices(kept, graph.edge_count)
    tree = to_networkx(graph, kept)
    acyclic = nx.is_forest(tree)
    connected = nx.is_connected(tree)
    expected = graph.vertex_count - 1
    return SpanningTreeReport(
        valid=len(kept) == expected and acyclic and connected,
        edge_count=len(kept),
        expected_edges=expected,
        acyclic=acyclic,
        connected=connected,
    )


def decode_tiling(aztec: AztecDiamond, kept: Iterable[int]) -> TilingReport:
    """Check that the kept dominoes cover every square exactly once."""
    kept = _check_indices(kept, aztec.ground_set_size)
    white_cover = np.zeros(len(aztec.white), dtype=np.int64)
    black_cover = np.zeros(len(aztec.black), dtype=np.int64)
    for e in kept:
        w, b = aztec.edges[e]
        white_cover[w] += 1
        black_cover[b] += 1
    cover = np.concatenate([white_cover, black_cover])
    uncovered = int(np.sum(cover == 0))
    overcovered = int(np.sum(cover > 1))
    return TilingReport(
        valid=uncovered == 0 and overcovered == 0,
        uncovered=uncovered,
        overcovered=overcovered,
        orientations=[aztec.orientation(e) for e in kept],
    )
