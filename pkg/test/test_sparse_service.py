import numpy as np
import pytest

from dppfactor.errors import MalformedSparse, PivotOutOfRange
from dppfactor.models.rng import RngStream
from dppfactor.models.sparse import SparseKernel
from dppfactor.services import kernel_service, oracle_service
from dppfactor.services.sampling_service import greedy_map, log_likelihood_of
from dppfactor.services.sparse_service import (
    greedy_map_sparse,
    log_likelihood_of_sparse,
    nested_dissection_grid,
    ordering_permutation,
    sample_sparse_hermitian,
    symbolic_analyze,
    validate_permutation,
)


def tridiagonal(n: int, diagonal: float = 0.5, off: float = 0.2) -> SparseKernel:
    dense = np.diag(np.full(n, diagonal)) + np.diag(np.full(n - 1, off), 1) + np.diag(np.full(n - 1, off), -1)
    return SparseKernel.from_dense(dense)


def structural_counts(pattern: np.ndarray) -> list[int]:
    """Column counts of L by boolean elimination of a dense pattern."""
    filled = pattern.astype(bool).copy()
    n = filled.shape[0]
    for j in range(n):
        below = np.flatnonzero(filled[j + 1 :, j]) + j + 1
        for i in below:
            filled[i, below] = True
    return [int(filled[j:, j].sum()) for j in range(n)]


@pytest.fixture
def laplacian() -> SparseKernel:
    return kernel_service.laplacian2d_kernel(4, 4, 0.72)


class TestSymbolicAnalyze:
    def test_tridiagonal_chain(self) -> None:
        tree = symbolic_analyze(tridiagonal(4))

        assert tree.parent.tolist() == [1, 2, 3, -1]
        assert tree.column_counts.tolist() == [2, 2, 2, 1]
        assert tree.postorder.tolist() == [0, 1, 2, 3]

    def test_arrow_has_no_fill(self) -> None:
        dense = np.eye(4) * 0.5
        dense[3, :3] = dense[:3, 3] = 0.1
        kernel = SparseKernel.from_dense(dense)

        tree = symbolic_analyze(kernel)

        assert tree.parent.tolist() == [3, 3, 3, -1]
        assert tree.factor_nnz == kernel.nnz

    @pytest.mark.parametrize("ordering", ["natural", "rcm", "nested-dissection"])
    def test_grid_counts_match_dense_elimination(self, ordering: str) -> None:
        kernel = kernel_service.laplacian2d_kernel(5, 5, 0.5)
        perm = ordering_permutation(kernel, ordering, grid=(5, 5))
        pattern = kernel.full().toarray() != 0

        tree = symbolic_analyze(kernel, perm)

        assert tree.column_counts.tolist() == structural_counts(pattern[np.ix_(perm, perm)])
        assert tree.flops == float(np.sum(tree.column_counts.astype(float) ** 2))

    def test_parent_above_child(self, laplacian: SparseKernel) -> None:
        parent = symbolic_analyze(laplacian).parent

        assert all(p == -1 or p > j for j, p in enumerate(parent))

    def test_postorder_children_first(self, laplacian: SparseKernel) -> None:
        tree = symbolic_analyze(laplacian, ordering_permutation(laplacian, "rcm"))
        position = {node: k for k, node in enumerate(tree.postorder)}

        assert sorted(position) == list(range(16))
        assert all(p == -1 or position[p] > position[j] for j, p in enumerate(tree.parent))

    def test_malformed_kernel(self) -> None:
        with pytest.raises(MalformedSparse):
            SparseKernel.from_arrays(2, np.array([0, 2, 3]), np.array([1, 0, 1]), np.array([0.1, 0.5, 0.5]))


class TestOrderings:
    def test_natural(self, laplacian: SparseKernel) -> None:
        assert ordering_permutation(laplacian).tolist() == list(range(16))

    def test_rcm_is_permutation(self, laplacian: SparseKernel) -> None:
        perm = ordering_permutation(laplacian, "rcm")

        assert sorted(perm.tolist()) == list(range(16))

    def test_nested_dissection_numbers_separator_last(self) -> None:
        perm = nested_dissection_grid(4, 4)

        assert sorted(perm.tolist()) == list(range(16))
        assert perm[-4:].tolist() == [2, 6, 10, 14]

    def test_nested_dissection_needs_grid(self, laplacian: SparseKernel) -> None:
        with pytest.raises(ValueError):
            ordering_permutation(laplacian, "nested-dissection")

    def test_unknown_ordering(self, laplacian: SparseKernel) -> None:
        with pytest.raises(ValueError):
            ordering_permutation(laplacian, "amd")

    @pytest.mark.parametrize("perm", [[0, 1, 1], [0, 1], [0, 1, 3]])
    def test_bad_permutation(self, perm: list[int]) -> None:
        with pytest.raises(ValueError):
            validate_permutation(perm, 3)


class TestSampleSparseHermitian:
    @pytest.mark.parametrize("ordering", ["natural", "rcm", "nested-dissection"])
    def test_likelihood_matches_dense(self, laplacian: SparseKernel, ordering: str) -> None:
        dense = laplacian.to_dense()
        tree = symbolic_analyze(laplacian, ordering_permutation(laplacian, ordering, grid=(4, 4)))

        for seed in range(4):
            sample, _ = sample_sparse_hermitian(laplacian, tree, RngStream(seed))
            assert sample.log_likelihood == pytest.approx(log_likelihood_of(dense, sample.kept), rel=1e-9)

    def test_factor_matches_symbolic_prediction(self, laplacian: SparseKernel) -> None:
        tree = symbolic_analyze(laplacian, nested_dissection_grid(4, 4))

        patterns = []
        for seed in range(3):
            _, factor = sample_sparse_hermitian(laplacian, tree, RngStream(seed))
            assert factor.nnz == tree.factor_nnz
            patterns.append(factor.lower.indices.tolist())

        assert patterns[0] == patterns[1] == patterns[2]

    def test_factor_reconstructs_permuted_kernel(self, laplacian: SparseKernel) -> None:
        perm = ordering_permutation(laplacian, "rcm")
        tree = symbolic_analyze(laplacian, perm)

        sample, factor = sample_sparse_hermitian(laplacian, tree, RngStream(3))

        lower = factor.lower.toarray()
        shifted = laplacian.to_dense().entries[np.ix_(perm, perm)] - np.diag((~sample.decisions).astype(float))
        reconstructed = lower @ np.diag(factor.diagonal) @ lower.conj().T
        np.testing.assert_allclose(reconstructed, shifted, rtol=1e-9, atol=1e-10)

    def test_order_records_permutation(self, laplacian: SparseKernel) -> None:
        perm = ordering_permutation(laplacian, "rcm")

        sample, _ = sample_sparse_hermitian(laplacian, symbolic_analyze(laplacian, perm), RngStream(1))

        assert sample.order.tolist() == perm.tolist()
        assert sample.kept == sorted(int(perm[k]) for k in np.flatnonzero(sample.decisions))

    def test_tree_must_fit_kernel(self, laplacian: SparseKernel) -> None:
        with pytest.raises(ValueError):
            sample_sparse_hermitian(laplacian, symbolic_analyze(tridiagonal(3)), RngStream(0))

    def test_pivot_out_of_range(self) -> None:
        kernel = tridiagonal(3, diagonal=0.5, off=0.9)

        with pytest.raises(PivotOutOfRange):
            sample_sparse_hermitian(kernel, symbolic_analyze(kernel), RngStream(0))


class TestSparseMapAndLikelihood:
    def test_diagonal_map_keeps_half(self) -> None:
        kernel = SparseKernel.from_dense(np.eye(10) * 0.5)

        sample, _ = greedy_map_sparse(kernel, symbolic_analyze(kernel))

        assert sample.kept == list(range(10))

    def test_map_matches_dense(self, laplacian: SparseKernel) -> None:
        dense, _ = greedy_map(laplacian.to_dense())

        sample, _ = greedy_map_sparse(laplacian, symbolic_analyze(laplacian))

        assert sample.kept == dense.kept
        assert sample.log_likelihood == pytest.approx(dense.log_likelihood, rel=1e-9)

    def test_likelihood_of_subset(self, laplacian: SparseKernel) -> None:
        tree = symbolic_analyze(laplacian, ordering_permutation(laplacian, "rcm"))
        subset = [0, 5, 10, 15]

        value = log_likelihood_of_sparse(laplacian, tree, subset)

        assert value == pytest.approx(log_likelihood_of(laplacian.to_dense(), subset), rel=1e-9)

    def test_probability_zero_subset(self) -> None:
        kernel = SparseKernel.from_dense(np.diag([1.0, 0.5]))

        assert log_likelihood_of_sparse(kernel, symbolic_analyze(kernel), [1]) == -np.inf

    def test_tiny_probability_is_finite(self) -> None:
        kernel = SparseKernel.from_dense(np.diag([1e-13, 0.5]))

        value = log_likelihood_of_sparse(kernel, symbolic_analyze(kernel), [0])

        assert value == pytest.approx(np.log(1e-13) + np.log(0.5), rel=1e-12)

    def test_rejects_foreign_index(self, laplacian: SparseKernel) -> None:
        with pytest.raises(ValueError):
            log_likelihood_of_sparse(laplacian, symbolic_analyze(laplacian), [16])


@pytest.mark.statistical
class TestDistribution:
    def test_tridiagonal_matches_enumeration(self) -> None:
        kernel = tridiagonal(3, diagonal=0.5, off=0.3)
        tree = symbolic_analyze(kernel)

        report = oracle_service.chi_square_compare(
            lambda rng: sample_sparse_hermitian(kernel, tree, rng)[0], kernel.to_dense(), 20_000, seed=3
        )

        assert report.passed

    def test_permuted_pivot_order_same_distribution(self) -> None:
        dense = kernel_service.random_admissible_hermitian(5, RngStream(44), complex_valued=False)
        kernel = SparseKernel.from_dense(dense.entries)
        tree = symbolic_analyze(kernel, [3, 0, 4, 2, 1])

        report = oracle_service.chi_square_compare(
            lambda rng: sample_sparse_hermitian(kernel, tree, rng)[0], dense, 20_000, seed=4
        )

        assert report.passed
