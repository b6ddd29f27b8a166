"""Full-size runs of the structured kernels. Deselected by default; run with ``-m slow``."""

import numpy as np
import pytest

from dppfactor.models.rng import RngStream
from dppfactor.models.run_config import BlockingConfig
from dppfactor.services import kernel_service, sparse_service
from dppfactor.services.blocked_service import sample_blocked, sample_tiled_parallel
from dppfactor.services.elementary_service import sample_elementary
from dppfactor.services.sampling_service import sample_nonhermitian_unblocked

pytestmark = pytest.mark.slow


def test_grid_spanning_tree_40x40() -> None:
    graph = kernel_service.grid_graph(40, 40)
    projection = kernel_service.ust_kernel(graph)

    sample = sample_elementary(projection, RngStream(40))

    assert kernel_service.decode_spanning_tree(graph, sample.kept).valid
    assert sample.log_likelihood == pytest.approx(-kernel_service.spanning_tree_log_count(graph), abs=1e-6)
    assert sample.log_likelihood == pytest.approx(-1794.24, abs=0.01)


def test_hex_spanning_tree_order_10() -> None:
    graph = kernel_service.hex_graph(10)
    projection = kernel_service.ust_kernel(graph)

    sample = sample_elementary(projection, RngStream(10))

    assert kernel_service.decode_spanning_tree(graph, sample.kept).valid
    assert sample.log_likelihood == pytest.approx(-299.101, abs=1e-3)


def test_aztec_order_10_likelihood() -> None:
    aztec = kernel_service.aztec_diamond(10)
    kernel = kernel_service.aztec_kernel(aztec)

    sample, _ = sample_nonhermitian_unblocked(kernel, RngStream(10))

    assert kernel_service.decode_tiling(aztec, sample.kept).valid
    assert sample.log_likelihood == pytest.approx(-38.1231, abs=1e-3)


def test_aztec_order_20_tiled_matches_blocked() -> None:
    aztec = kernel_service.aztec_diamond(20)
    kernel = kernel_service.aztec_kernel(aztec)
    cfg = BlockingConfig(block_size=256, tile_size=256, thread_count=4)

    tiled, _ = sample_tiled_parallel(kernel, RngStream(3), cfg)
    blocked, _ = sample_blocked(kernel, RngStream(3), cfg)

    assert tiled.same_as(blocked)
    assert kernel_service.decode_tiling(aztec, tiled.kept).valid
    assert tiled.log_likelihood == pytest.approx(-(20 * 21 / 2) * np.log(2), rel=1e-6)


def test_laplacian_200x200_sparse() -> None:
    kernel = kernel_service.laplacian2d_kernel(200, 200, 0.72)
    tree = sparse_service.symbolic_analyze(kernel, sparse_service.nested_dissection_grid(200, 200))

    sample, factor = sparse_service.sample_sparse_hermitian(kernel, tree, RngStream(0))
    replayed = sparse_service.log_likelihood_of_sparse(kernel, tree, sample.kept)
    map_sample, _ = sparse_service.greedy_map_sparse(kernel, tree)

    assert factor.nnz == tree.factor_nnz
    assert replayed == pytest.approx(sample.log_likelihood, rel=1e-9)
    assert map_sample.log_likelihood > sample.log_likelihood
    assert map_sample.log_likelihood == pytest.approx(-26058.02, abs=0.1)
    # samples spread by tens around the mean log-likelihood
    assert sample.log_likelihood == pytest.approx(-27472.2, abs=300)
