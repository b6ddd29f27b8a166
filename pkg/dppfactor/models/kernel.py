"""Dense kernel models."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dppfactor import config
from dppfactor.errors import InvalidKernel


class Symmetry(str, Enum):
    """Structure flag of a marginal kernel."""

    HERMITIAN = "hermitian"
    GENERAL = "general"


SUPPORTED_DTYPES = (np.float32, np.float64, np.complex64, np.complex128)


def precision_of(dtype: np.dtype) -> int:
    """Return 32 or 64 for the real precision underlying ``dtype``."""
    return 32 if np.dtype(dtype) in (np.dtype(np.float32), np.dtype(np.complex64)) else 64


def dtype_for(precision: int, is_complex: bool) -> np.dtype:
    """Return the numpy dtype for a (precision, complexity) pair."""
    if precision not in (32, 64):
        raise ValueError(f"Precision must be 32 or 64, got {precision}.")
    if is_complex:
        return np.dtype(np.complex64 if precision == 32 else np.complex128)
    return np.dtype(np.float32 if precision == 32 else np.float64)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A^H) / 2, which is exactly hermitian in floating point."""
    return (matrix + matrix.conj().T) / 2


@dataclass(eq=False)
class MarginalKernel:
    """Square marginal kernel of a DPP.

    Entries are stored row-major (C order). A hermitian kernel must equal its
    conjugate transpose bit for bit; builders call ``symmetrize`` first.
    """

    entries: np.ndarray
    symmetry: Symmetry = Symmetry.GENERAL
    _norm: float | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.symmetry = Symmetry(self.symmetry)
        entries = np.ascontiguousarray(self.entries)
        if entries.dtype not in [np.dtype(t) for t in SUPPORTED_DTYPES]:
            entries = entries.astype(np.complex128 if np.iscomplexobj(entries) else np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise InvalidKernel(f"Kernel must be a non-empty square matrix, got shape {entries.shape}.")
        self.entries = entries

        if self.symmetry is Symmetry.HERMITIAN and not np.array_equal(entries, entries.conj().T):
            raise InvalidKernel("Kernel flagged hermitian is not exactly equal to its conjugate transpose.")

        diagonal = np.diagonal(entries).astype(np.complex128)
        tol = config.DIAGONAL_TOLERANCE
        if np.any(np.abs(diagonal.imag) > tol):
            raise InvalidKernel("Kernel diagonal must be real.")
        if np.any(diagonal.real < -tol) or np.any(diagonal.real > 1 + tol):
            worst = int(np.argmax(np.maximum(-diagonal.real, diagonal.real - 1)))
            raise InvalidKernel(
                f"Kernel diagonal must lie in [0, 1]; entry {worst} is {diagonal.real[worst]!r}."
            )

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def precision(self) -> int:
        return precision_of(self.entries.dtype)

    @property
    def is_hermitian(self) -> bool:
        return self.symmetry is Symmetry.HERMITIAN

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)

    def norm(self) -> float:
        """Frobenius norm, used to scale imaginary-part tolerances. Computed once, without a copy."""
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.entries))
        return self._norm

    def astype(self, precision: int) -> "MarginalKernel":
        """Return the same kernel at another scalar precision."""
        dtype = dtype_for(precision, self.is_complex)
        return MarginalKernel(self.entries.astype(dtype), self.symmetry)

    def similarity(self, scaling: np.ndarray) -> "MarginalKernel":
        """Return D^{-1} K D for D = diag(scaling); the DPP is unchanged."""
        scaling = np.asarray(scaling)
        entries = (self.entries / scaling[:, None]) * scaling[None, :]
        np.fill_diagonal(entries, np.diagonal(self.entries))
        return MarginalKernel(entries, Symmetry.GENERAL)

    def __repr__(self) -> str:
        return f"<MarginalKernel(order={self.order}, symmetry='{self.symmetry.value}', dtype={self.entries.dtype})>"


@dataclass(eq=False)
class FactoredKernel:
    """In-place factorization of K - 1_{Y^C}.

    General kernels hold unit-lower L strictly below the diagonal and U on and
    above it. Hermitian kernels hold unit-lower L strictly below the diagonal
    and the real D on it; the strict upper triangle is not referenced.
    """

    matrix: np.ndarray
    symmetry: Symmetry

    def unit_lower(self) -> np.ndarray:
        lower = np.tril(self.matrix, -1)
        np.fill_diagonal(lower, 1)
        return lower

    def upper(self) -> np.ndarray:
        return np.triu(self.matrix)

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.matrix).copy()

    def reconstruct(self) -> np.ndarray:
        """Multiply the factors back together."""
        lower = self.unit_lower()
        if self.symmetry is Symmetry.HERMITIAN:
            d = self.diagonal().real
            return (lower * d[None, :]) @ lower.conj().T
        return lower @ self.upper()


@dataclass(eq=False)
class ProjectionKernel:
    """Hermitian orthogonal projection kernel of rank ``rank``."""

    kernel: MarginalKernel
    rank: int

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, validate: bool = True) -> "ProjectionKernel":
        """Build a projection kernel, checking K^2 = K and an integral trace.

        Args:
            matrix: Hermitian projection matrix (symmetrized before use).
            validate: Skip the O(n^3) idempotency check when the caller built
                the matrix as Q Q^H from orthonormal columns.

        Raises:
            InvalidKernel: If the matrix is not a projection.
        """
        matrix = symmetrize(np.asarray(matrix))
        trace = float(np.trace(matrix).real)
        rank = int(round(trace))
        if validate:
            tol = config.PROJECTION_TOLERANCE
            if not np.allclose(matrix @ matrix, matrix, rtol=0, atol=tol):
                raise InvalidKernel("Matrix is not idempotent (K^2 != K).")
            if abs(trace - rank) > config.RANK_TOLERANCE:
                raise InvalidKernel(f"Projection trace {trace!r} is not an integer.")
        diagonal = np.clip(np.diagonal(matrix).real, 0.0, 1.0)
        matrix = matrix.copy()
        np.fill_diagonal(matrix, diagonal)
        return cls(MarginalKernel(matrix, Symmetry.HERMITIAN), rank)

    @property
    def order(self) -> int:
        return self.kernel.order
