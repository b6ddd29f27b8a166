import networkx as nx
import numpy as np
import pytest
from scipy import linalg

from dppfactor.errors import DisconnectedGraph, IndefiniteL, InvalidSigma
from dppfactor.models.rng import RngStream
from dppfactor.models.structures import Orientation, UndirectedGraph
from dppfactor.services import kernel_service
from dppfactor.services.sampling_service import log_likelihood_of, sample_nonhermitian_unblocked


class TestGraphs:
    @pytest.mark.parametrize(("width", "height", "edges"), [(1, 1, 0), (2, 2, 4), (3, 3, 12), (4, 2, 10)])
    def test_grid_edge_count(self, width: int, height: int, edges: int) -> None:
        graph = kernel_service.grid_graph(width, height)

        assert graph.vertex_count == width * height
        assert graph.edge_count == edges

    @pytest.mark.parametrize("d", [1, 2, 5, 10])
    def test_hex_edge_count(self, d: int) -> None:
        graph = kernel_service.hex_graph(d)

        assert graph.vertex_count == 2 * d * (2 * d + 1)
        assert graph.edge_count == 6 * d * d

    def test_hex_faces_are_hexagons(self) -> None:
        graph = kernel_service.hex_graph(3)
        g = kernel_service.to_networkx(graph)

        # Euler: E - V + 1 bounded faces, one per hexagon
        assert graph.edge_count - graph.vertex_count + 1 == 2 * 3 * 3 - 2 * 3 + 1
        assert max(dict(g.degree).values()) == 3
        assert all(len(cycle) == 6 for cycle in nx.minimum_cycle_basis(g))

    def test_single_hexagon(self) -> None:
        graph = kernel_service.hex_graph(1)

        assert graph.edge_count == 6
        assert kernel_service.spanning_tree_log_count(graph) == pytest.approx(np.log(6), abs=1e-12)

    def test_hex_ten_tree_count(self) -> None:
        graph = kernel_service.hex_graph(10)

        assert kernel_service.spanning_tree_log_count(graph) == pytest.approx(299.101, abs=1e-3)

    @pytest.mark.parametrize(("width", "height", "expected"), [(2, 2, 4), (3, 3, 192), (1, 5, 1)])
    def test_spanning_tree_count(self, width: int, height: int, expected: int) -> None:
        graph = kernel_service.grid_graph(width, height)

        assert kernel_service.spanning_tree_log_count(graph) == pytest.approx(np.log(expected), abs=1e-9)

    def test_disconnected(self) -> None:
        graph = UndirectedGraph(4, [(0, 1), (2, 3)])

        with pytest.raises(DisconnectedGraph):
            kernel_service.ust_kernel(graph)
        with pytest.raises(DisconnectedGraph):
            kernel_service.spanning_tree_log_count(graph)


class TestUstKernel:
    def test_projection(self) -> None:
        graph = kernel_service.grid_graph(3, 3)

        projection = kernel_service.ust_kernel(graph)

        entries = projection.kernel.entries
        assert projection.rank == graph.vertex_count - 1
        np.testing.assert_allclose(entries @ entries, entries, atol=1e-12)
        assert np.trace(entries) == pytest.approx(8.0)

    def test_tree_edge_of_path_is_certain(self) -> None:
        projection = kernel_service.ust_kernel(kernel_service.grid_graph(1, 4))

        np.testing.assert_allclose(projection.kernel.entries, np.eye(3), atol=1e-12)

    def test_cycle_marginals(self) -> None:
        projection = kernel_service.ust_kernel(kernel_service.grid_graph(2, 2))

        # each of the 4 cycle edges is in 3 of the 4 spanning trees
        np.testing.assert_allclose(np.diagonal(projection.kernel.entries), 0.75, atol=1e-12)


class TestAztec:
    def test_order_one(self) -> None:
        aztec = kernel_service.aztec_diamond(1)
        kernel = kernel_service.aztec_kernel(aztec)

        assert aztec.ground_set_size == 4
        np.testing.assert_allclose(np.diagonal(kernel.entries).real, 0.5, atol=1e-12)
        assert [aztec.orientation(e) for e in range(4)] == [
            Orientation.RIGHT,
            Orientation.DOWN,
            Orientation.LEFT,
            Orientation.UP,
        ]

    @pytest.mark.parametrize("d", [1, 2, 4])
    def test_trace_counts_dominoes(self, d: int) -> None:
        kernel = kernel_service.aztec_kernel(d)

        assert not kernel.is_hermitian
        assert np.trace(kernel.entries).real == pytest.approx(d * (d + 1), abs=1e-9)

    def test_square_count(self) -> None:
        aztec = kernel_service.aztec_diamond(3)

        assert len(aztec.black) == len(aztec.white) == 3 * 4

    def test_tilings_of_order_one(self) -> None:
        aztec = kernel_service.aztec_diamond(1)
        kernel = kernel_service.aztec_kernel(aztec)

        for tiling in ([0, 2], [1, 3]):
            assert kernel_service.decode_tiling(aztec, tiling).valid
            assert log_likelihood_of(kernel, tiling) == pytest.approx(-np.log(2), abs=1e-9)
        assert log_likelihood_of(kernel, [0, 1]) == -np.inf

    @pytest.mark.parametrize("d", [2, 3])
    def test_samples_are_uniform_tilings(self, d: int) -> None:
        aztec = kernel_service.aztec_diamond(d)
        kernel = kernel_service.aztec_kernel(aztec)
        rng = RngStream(d)

        for _ in range(5):
            sample, _ = sample_nonhermitian_unblocked(kernel, rng)
            report = kernel_service.decode_tiling(aztec, sample.kept)
            assert report.valid
            assert len(report.orientations) == d * (d + 1)
            assert sample.log_likelihood == pytest.approx(-(d * (d + 1) / 2) * np.log(2), abs=1e-8)

    def test_invalid_order(self) -> None:
        with pytest.raises(ValueError):
            kernel_service.aztec_diamond(0)

    def test_precision(self) -> None:
        assert kernel_service.aztec_kernel(2, precision=32).entries.dtype == np.complex64


class TestLaplacian:
    def test_spectrum_is_shifted(self) -> None:
        kernel = kernel_service.laplacian2d_kernel(5, 4, 0.72)

        eigenvalues = linalg.eigvalsh(kernel.full().toarray())
        assert kernel.order == 20
        assert eigenvalues.min() > 0.72 / 8
        assert eigenvalues.max() < 9 * 0.72 / 8

    def test_stencil(self) -> None:
        dense = kernel_service.laplacian2d_kernel(3, 3, 0.8).full().toarray()

        assert dense[4, 4] == pytest.approx(0.5)
        assert dense[4, 3] == dense[4, 5] == dense[4, 1] == dense[4, 7] == pytest.approx(-0.1)
        assert dense[0, 4] == 0

    def test_largest_sigma_is_admissible(self) -> None:
        kernel = kernel_service.laplacian2d_kernel(6, 6, 8 / 9)

        assert linalg.eigvalsh(kernel.full().toarray()).max() < 1

    @pytest.mark.parametrize("sigma", [0.0, -0.5, 0.9, 1.5])
    def test_invalid_sigma(self, sigma: float) -> None:
        with pytest.raises(InvalidSigma):
            kernel_service.laplacian2d_kernel(4, 4, sigma)

    def test_grid_too_small(self) -> None:
        with pytest.raises(ValueError):
            kernel_service.laplacian2d_kernel(1, 4, 0.5)


class TestRandomKernels:
    def test_hermitian_spectrum(self) -> None:
        kernel = kernel_service.random_admissible_hermitian(6, RngStream(3), spectrum=[0, 0.1, 0.2, 0.5, 0.9, 1])

        assert kernel.is_hermitian
        np.testing.assert_allclose(linalg.eigvalsh(kernel.entries), [0, 0.1, 0.2, 0.5, 0.9, 1], atol=1e-12)

    def test_real_valued(self) -> None:
        kernel = kernel_service.random_admissible_hermitian(5, RngStream(3), complex_valued=False)

        assert not kernel.is_complex

    def test_bad_spectrum(self) -> None:
        with pytest.raises(ValueError):
            kernel_service.random_admissible_hermitian(2, RngStream(0), spectrum=[0.5, 1.5])

    def test_nonhermitian_similarity_keeps_spectrum(self) -> None:
        spectrum = [0.1, 0.3, 0.5, 0.7, 0.9]
        kernel = kernel_service.random_admissible_nonhermitian(5, RngStream(8), spectrum=spectrum)

        assert not kernel.is_hermitian
        assert not np.allclose(kernel.entries, kernel.entries.conj().T)
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(kernel.entries).real), spectrum, atol=1e-10)

    def test_deterministic(self) -> None:
        first = kernel_service.random_admissible_hermitian(4, RngStream(5))
        second = kernel_service.random_admissible_hermitian(4, RngStream(5))

        assert first.entries.tobytes() == second.entries.tobytes()


class TestLEnsemble:
    def test_diagonal(self) -> None:
        kernel = kernel_service.marginal_from_lensemble(np.diag([1.0, 3.0]))

        np.testing.assert_allclose(kernel.entries, np.diag([0.5, 0.75]), atol=1e-15)

    def test_indefinite(self) -> None:
        with pytest.raises(IndefiniteL):
            kernel_service.marginal_from_lensemble(np.diag([1.0, -1.0]))

    def test_random_spectrum(self) -> None:
        gaussian = RngStream(5).standard_normal((4, 4))
        ensemble = gaussian @ gaussian.T

        kernel = kernel_service.marginal_from_lensemble(ensemble)

        eigenvalues = linalg.eigvalsh(ensemble)
        np.testing.assert_allclose(linalg.eigvalsh(kernel.entries), eigenvalues / (1.0 + eigenvalues), atol=1e-12)

    @pytest.mark.parametrize(
        ("ensemble", "expected"), [(np.zeros((3, 3)), np.zeros((3, 3))), (np.eye(3), 0.5 * np.eye(3))]
    )
    def test_extremes(self, ensemble: np.ndarray, expected: np.ndarray) -> None:
        kernel = kernel_service.marginal_from_lensemble(ensemble)

        np.testing.assert_allclose(kernel.entries, expected, atol=1e-15)
        assert kernel.is_hermitian


class TestDecoders:
    @pytest.fixture
    def square(self) -> UndirectedGraph:
        return kernel_service.grid_graph(2, 2)

    def test_spanning_tree(self, square: UndirectedGraph) -> None:
        report = kernel_service.decode_spanning_tree(square, [0, 1, 2])

        assert report.valid
        assert report.acyclic and report.connected

    def test_cycle_is_not_a_tree(self, square: UndirectedGraph) -> None:
        report = kernel_service.decode_spanning_tree(square, [0, 1, 2, 3])

        assert not report.valid
        assert not report.acyclic
        assert report.edge_count == 4

    def test_forest_is_not_a_tree(self, square: UndirectedGraph) -> None:
        report = kernel_service.decode_spanning_tree(square, [0])

        assert not report.valid
        assert not report.connected

    def test_overlapping_dominoes(self) -> None:
        aztec = kernel_service.aztec_diamond(1)

        report = kernel_service.decode_tiling(aztec, [0, 1])

        assert not report.valid
        assert report.uncovered == 1
        assert report.overcovered == 1

    def test_index_out_of_range(self, square: UndirectedGraph) -> None:
        with pytest.raises(ValueError):
            kernel_service.decode_spanning_tree(square, [9])
