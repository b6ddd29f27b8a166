"""Projection-DPP sampling by diagonally pivoted Cholesky, and spectral sampling."""

import logging

import numpy as np
from scipy.linalg import eigh

from dppfactor import config
from dppfactor.errors import DegenerateMass, InvalidKernel, NegativeDiagonal, SpectrumOutOfRange
from dppfactor.models.kernel import MarginalKernel, ProjectionKernel
from dppfactor.models.rng import RngStream
from dppfactor.models.sample import ElementarySample, Sample
from dppfactor.services.sampling_service import replay_decisions, subset_mask

logger = logging.getLogger(__name__)


def _swap(matrix: np.ndarray, diagonal: np.ndarray, perm: np.ndarray, i: int, j: int) -> None:
    """Symmetric row/column interchange i <-> j."""
    if i == j:
        return
    matrix[[i, j], :] = matrix[[j, i], :]
    matrix[:, [i, j]] = matrix[:, [j, i]]
    diagonal[[i, j]] = diagonal[[j, i]]
    perm[[i, j]] = perm[[j, i]]


def sample_elementary(
    proj: ProjectionKernel,
    rng: RngStream,
    negative_tolerance: float = config.NEGATIVE_DIAGONAL,
    mass_tolerance: float = config.DEGENERATE_MASS,
) -> ElementarySample:
    """Draw exactly ``rank`` indices from a projection DPP.

    Left-looking Cholesky with out-of-place tracking of the remaining diagonal
    ``d``. Pivot j is chosen among the unprocessed indices with probability
    d_t / (k - j), drawn by inverse CDF over ``d`` renormalized to its actual
    mass. One uniform is drawn per chosen pivot.

    Args:
        proj: Projection kernel of rank k.
        rng: Uniform stream.
        negative_tolerance: Most negative remaining diagonal entry tolerated.
        mass_tolerance: Smallest remaining mass before all k pivots are drawn.

    Returns:
        The k indices in draw order, the k x k lower Cholesky factor of K_Y in
        that order and log det(K_Y).

    Raises:
        NegativeDiagonal: If a remaining diagonal entry drops below -tol.
        DegenerateMass: If the remaining mass vanishes early.
    """
    n, k = proj.order, proj.rank
    matrix = np.array(proj.kernel.entries, dtype=np.complex128, order="C")
    diagonal = np.diagonal(matrix).real.copy()
    perm = np.arange(n)
    residuals = []
    log_likelihood = 0.0

    for j in range(k):
        remaining = diagonal[j:]
        residual = float(remaining.sum()) - (k - j)
        residuals.append(residual)
        if config.DEBUG_CHECKS:
            assert abs(residual) <= config.MASS_CONSERVATION, f"mass drift {residual} at step {j}"

        if remaining.min() < -negative_tolerance:
            worst = j + int(np.argmin(remaining))
            raise NegativeDiagonal(
                f"Remaining diagonal entry {int(perm[worst])} is {diagonal[worst]!r} at step {j}."
            )
        weights = np.clip(remaining, 0.0, None)
        mass = float(weights.sum())
        if mass < mass_tolerance:
            raise DegenerateMass(f"Remaining diagonal mass {mass!r} vanished at step {j} of {k}.")

        # Inverse CDF, renormalized by the actual mass rather than k - j
        cumulative = np.cumsum(weights) / mass
        offset = int(np.searchsorted(cumulative, rng.uniform(), side="right"))
        offset = min(offset, remaining.size - 1)
        while weights[offset] == 0.0:  # never land on a zero-probability index
            offset -= 1
        _swap(matrix, diagonal, perm, j, j + offset)

        # Left-looking update of column j from the previous columns
        column = matrix[j:, j] - matrix[j:, :j] @ matrix[j, :j].conj()
        pivot = np.sqrt(diagonal[j])
        matrix[j, j] = pivot
        matrix[j + 1 :, j] = column[1:] / pivot
        diagonal[j + 1 :] -= np.abs(matrix[j + 1 :, j]) ** 2
        log_likelihood += 2.0 * np.log(pivot)

    factor = np.tril(matrix[:k, :k])
    logger.debug("Elementary sample of rank %d from n=%d", k, n)
    return ElementarySample([int(i) for i in perm[:k]], factor, float(log_likelihood), residuals)


def sample_spectral(
    kernel: MarginalKernel, rng: RngStream, tolerance: float = config.SPECTRUM_TOLERANCE
) -> Sample:
    """Spectral sampler for hermitian kernels.

    Eigenvector j is kept with probability equal to its eigenvalue (one draw
    per eigenvalue, ascending order); the projection onto the kept
    eigenvectors is sampled with ``sample_elementary``. The returned pivots and
    likelihood come from replaying the decisions on the original kernel.

    Raises:
        InvalidKernel: If the kernel is not hermitian.
        SpectrumOutOfRange: If an eigenvalue lies outside [-tol, 1 + tol].
    """
    if not kernel.is_hermitian:
        raise InvalidKernel("Spectral sampling requires a hermitian kernel.")
    eigenvalues, eigenvectors = eigh(kernel.entries.astype(np.complex128))
    if eigenvalues.min() < -tolerance or eigenvalues.max() > 1 + tolerance:
        raise SpectrumOutOfRange(
            f"Eigenvalues span [{eigenvalues.min()!r}, {eigenvalues.max()!r}], outside [0, 1]."
        )

    chosen = rng.uniforms(kernel.order) < np.clip(eigenvalues, 0.0, 1.0)
    indices: list[int] = []
    if chosen.any():
        basis = eigenvectors[:, chosen]
        proj = ProjectionKernel.from_matrix(basis @ basis.conj().T, validate=False)
        proj.rank = int(chosen.sum())
        indices = sample_elementary(proj, rng).kept
    logger.debug("Spectral sample: %d eigenvectors kept", int(chosen.sum()))

    sample, _ = replay_decisions(kernel, subset_mask(kernel.order, indices))
    return sample
