"""Sparse kernel and symbolic-analysis models."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from dppfactor import config
from dppfactor.errors import InvalidKernel, MalformedSparse
from dppfactor.models.kernel import MarginalKernel, Symmetry, precision_of


def validate_lower_csc(n: int, indptr: np.ndarray, indices: np.ndarray) -> None:
    """Check a lower-triangle CSC pattern.

    Raises:
        MalformedSparse: On unsorted or duplicate row indices, entries above
            the diagonal, or a missing diagonal entry.
    """
    if indptr.size != n + 1 or indptr[0] != 0 or indptr[-1] != indices.size:
        raise MalformedSparse("Column pointer array is inconsistent with the row indices.")
    for j in range(n):
        rows = indices[indptr[j] : indptr[j + 1]]
        if rows.size == 0 or rows[0] != j:
            raise MalformedSparse(f"Column {j} must start with its diagonal entry.")
        if np.any(np.diff(rows) <= 0):
            raise MalformedSparse(f"Row indices of column {j} are unsorted or duplicated.")


@dataclass(eq=False)
class SparseKernel:
    """Hermitian kernel stored as its lower triangle (diagonal included) in CSC."""

    lower: sp.csc_matrix

    def __post_init__(self) -> None:
        lower = self.lower
        if not (sp.issparse(lower) and lower.format == "csc"):
            raise MalformedSparse("Sparse kernels must be given in compressed sparse-column form.")
        n = lower.shape[0]
        if lower.shape != (n, n) or n == 0:
            raise InvalidKernel(f"Kernel must be a non-empty square matrix, got shape {lower.shape}.")
        validate_lower_csc(n, lower.indptr, lower.indices)

        diagonal = lower.data[lower.indptr[:-1]].astype(np.complex128)
        tol = config.DIAGONAL_TOLERANCE
        if np.any(np.abs(diagonal.imag) > tol):
            raise InvalidKernel("Kernel diagonal must be real.")
        if np.any(diagonal.real < -tol) or np.any(diagonal.real > 1 + tol):
            raise InvalidKernel("Kernel diagonal must lie in [0, 1].")

    @classmethod
    def from_arrays(
        cls, n: int, indptr: np.ndarray, indices: np.ndarray, data: np.ndarray
    ) -> "SparseKernel":
        """Wrap raw CSC arrays without letting scipy reorder or merge them."""
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        validate_lower_csc(n, indptr, indices)
        return cls(sp.csc_matrix((np.asarray(data), indices, indptr), shape=(n, n)))

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "SparseKernel":
        """Keep the nonzero lower triangle of a dense hermitian matrix (diagonal always)."""
        matrix = np.asarray(matrix)
        lower = np.tril(matrix)
        pattern = lower != 0
        np.fill_diagonal(pattern, True)
        rows, cols = np.nonzero(pattern.T)  # column-major walk
        n = matrix.shape[0]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return cls.from_arrays(n, np.cumsum(indptr), cols, lower[cols, rows])

    @property
    def order(self) -> int:
        return self.lower.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.lower.nnz)

    @property
    def precision(self) -> int:
        return precision_of(self.lower.dtype)

    def full(self) -> sp.csc_matrix:
        """Both triangles as a sparse hermitian matrix."""
        strict = sp.tril(self.lower, -1, format="csc")
        return (self.lower + strict.conj().T).tocsc()

    def to_dense(self) -> MarginalKernel:
        """Densify into a hermitian marginal kernel."""
        dense = self.full().toarray()
        np.fill_diagonal(dense, np.diagonal(dense).real)
        return MarginalKernel(dense, Symmetry.HERMITIAN)

    def __repr__(self) -> str:
        return f"<SparseKernel(order={self.order}, nnz={self.nnz}, dtype={self.lower.dtype})>"


@dataclass(eq=False)
class EliminationTree:
    """Symbolic analysis of a (permuted) sparse kernel.

    ``parent[j] == -1`` marks a root. ``column_counts`` include the unit
    diagonal, so their sum is the factor's nonzero count.
    """

    parent: np.ndarray
    postorder: np.ndarray
    column_counts: np.ndarray
    perm: np.ndarray
    flops: float

    @property
    def order(self) -> int:
        return self.parent.size

    @property
    def factor_nnz(self) -> int:
        return int(self.column_counts.sum())


@dataclass(eq=False)
class SparseFactor:
    """Unit-lower L (diagonal stored) and real D of the permuted K - 1_{Y^C}."""

    lower: sp.csc_matrix
    diagonal: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.lower.nnz)
