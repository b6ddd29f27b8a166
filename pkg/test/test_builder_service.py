import numpy as np
import pytest

from dppfactor.errors import BuilderSyntaxError, InvalidSigma
from dppfactor.models.kernel import MarginalKernel
from dppfactor.models.rng import RngStream
from dppfactor.models.sparse import SparseKernel
from dppfactor.services import builder_service


class TestBuild:
    @pytest.mark.parametrize(
        ("descriptor", "order"),
        [
            ("aztec:2", 16),
            ("grid:3x3", 12),
            ("hex:1", 6),
            ("laplacian2d:4x3:0.72", 12),
            ("random-hermitian:6", 6),
            ("random-nonhermitian:5", 5),
            ("identity:3", 3),
        ],
    )
    def test_valid_descriptors(self, descriptor: str, order: int) -> None:
        built = builder_service.build(descriptor)

        assert built.name == descriptor
        assert built.kernel.order == order

    def test_grid_carries_graph_and_projection(self) -> None:
        built = builder_service.build("grid:3x3")

        assert built.graph is not None and built.graph.vertex_count == 9
        assert built.projection is not None and built.projection.rank == 8
        assert built.aztec is None

    def test_aztec_carries_diamond(self) -> None:
        built = builder_service.build("aztec:3")

        assert built.aztec is not None and built.aztec.order == 3
        assert not built.kernel.is_hermitian

    def test_laplacian_is_sparse_with_grid(self) -> None:
        built = builder_service.build("laplacian2d:5x4:0.5")

        assert isinstance(built.kernel, SparseKernel)
        assert built.grid == (5, 4)

    @pytest.mark.parametrize(
        "descriptor",
        [
            "",
            "torus:3",
            "aztec",
            "aztec:0",
            "aztec:-2",
            "aztec:two",
            "grid:3",
            "grid:3x",
            "grid:0x4",
            "laplacian2d:4x4",
            "laplacian2d:4x4:big",
            "identity:3:3",
        ],
    )
    def test_invalid_descriptors(self, descriptor: str) -> None:
        with pytest.raises(BuilderSyntaxError):
            builder_service.build(descriptor)

    def test_sigma_out_of_range(self) -> None:
        with pytest.raises(InvalidSigma):
            builder_service.build("laplacian2d:4x4:2")

    @pytest.mark.parametrize(
        ("descriptor", "dtype"),
        [
            ("random-hermitian:4", np.complex64),
            ("aztec:2", np.complex64),
            ("grid:2x3", np.float32),
            ("laplacian2d:3x3:0.5", np.float32),
        ],
    )
    def test_single_precision(self, descriptor: str, dtype: type) -> None:
        built = builder_service.build(descriptor, precision=32)

        entries = built.kernel.lower if isinstance(built.kernel, SparseKernel) else built.kernel.entries
        assert entries.dtype == dtype
        assert built.kernel.precision == 32

    def test_random_builders_follow_stream(self) -> None:
        first = builder_service.build("random-nonhermitian:4", RngStream(9))
        second = builder_service.build("random-nonhermitian:4", RngStream(9))
        other = builder_service.build("random-nonhermitian:4", RngStream(10))

        assert isinstance(first.kernel, MarginalKernel)
        assert first.kernel.entries.tobytes() == second.kernel.entries.tobytes()
        assert first.kernel.entries.tobytes() != other.kernel.entries.tobytes()
