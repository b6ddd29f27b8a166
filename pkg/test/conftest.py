import numpy as np
import pytest

from dppfactor.models.kernel import MarginalKernel, Symmetry
from dppfactor.models.rng import RngStream
from dppfactor.services import kernel_service


@pytest.fixture
def rng() -> RngStream:
    return RngStream(20240611)


@pytest.fixture
def diagonal_kernel() -> MarginalKernel:
    return MarginalKernel(np.diag([0.3, 0.9]), Symmetry.HERMITIAN)


@pytest.fixture
def rank_one_projection() -> MarginalKernel:
    return MarginalKernel(np.full((2, 2), 0.5), Symmetry.HERMITIAN)


@pytest.fixture
def hermitian_kernel() -> MarginalKernel:
    return kernel_service.random_admissible_hermitian(4, RngStream(7))


@pytest.fixture
def nonhermitian_kernel() -> MarginalKernel:
    return kernel_service.random_admissible_nonhermitian(4, RngStream(11))


@pytest.fixture
def out_of_range_kernel() -> MarginalKernel:
    # valid diagonal, but eigenvalues -0.4 and 1.4
    return MarginalKernel(np.array([[0.5, 0.9], [0.9, 0.5]]), Symmetry.HERMITIAN)
