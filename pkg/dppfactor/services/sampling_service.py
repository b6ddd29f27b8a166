"""Unblocked factorization-based DPP samplers, greedy MAP and conditioning.

Both eliminations work in place on a row-major copy of the kernel. Pivot j is
turned into the conditional inclusion probability p_j; the index is kept or
dropped and, when dropped, 1 is subtracted from the pivot before the usual
elimination step. Hermitian kernels run the LDL^H variant, which reads and
writes only the lower triangle.
"""

import logging
from collections.abc import Iterable
from enum import IntEnum

import numba as nb
import numpy as np

from dppfactor import config
from dppfactor.errors import (
    InvalidKernel,
    NonRealPivot,
    PivotOutOfRange,
    SingularConditioning,
    StructureMismatch,
    ZeroPivot,
)
from dppfactor.models.kernel import FactoredKernel, MarginalKernel, Symmetry, symmetrize
from dppfactor.models.rng import RngStream
from dppfactor.models.sample import Sample

logger = logging.getLogger(__name__)


class Mode(IntEnum):
    """How an elimination decides each pivot."""

    SAMPLE = 0  # Bernoulli draw against the supplied uniforms
    MAP = 1  # keep iff p >= 1/2
    FORCED = 2  # follow supplied decisions
    FACTOR = 3  # plain factorization, no decisions


_MAP_THRESHOLD = config.MAP_THRESHOLD

# Kernel status codes
STATUS_OK = 0
STATUS_OUT_OF_RANGE = 1
STATUS_NON_REAL = 2
STATUS_ZERO_PIVOT = 3
STATUS_IMPOSSIBLE = 4
STATUS_STRUCTURE = 5


@nb.jit(nopython=True, nogil=True)
def decide_pivot(pivot_real, j, mode, tol, uniforms, forced, impossible, pivots, decisions):
    """Clamp the pivot and pick keep/drop; returns (status, keep, clamped)."""
    if pivot_real < -tol or pivot_real > 1.0 + tol:
        return STATUS_OUT_OF_RANGE, False, False
    p = min(max(pivot_real, 0.0), 1.0)
    clamped = p != pivot_real and abs(p - pivot_real) > 1e-12
    pivots[j] = p
    if mode == 0:
        keep = uniforms[j] < p
    elif mode == 1:
        keep = p >= _MAP_THRESHOLD
    else:
        keep = forced[j]
        if (keep and p < impossible) or (not keep and 1.0 - p < impossible):
            return STATUS_IMPOSSIBLE, keep, clamped
    decisions[j] = keep
    return STATUS_OK, keep, clamped


@nb.jit(nopython=True, nogil=True)
def _lu_kernel(a, mode, uniforms, forced, tol, imag_tol, zero_pivot, stop, pivots, decisions):
    """Right-looking unpivoted LU of the leading ``stop`` pivots of ``a``.

    Returns (status, index, clamp_count).
    """
    n = a.shape[0]
    clamps = 0
    for j in range(stop):
        pivot = a[j, j]
        if mode != 3:
            if abs(pivot.imag) > imag_tol:
                return STATUS_NON_REAL, j, clamps
            status, keep, clamped = decide_pivot(
                pivot.real, j, mode, tol, uniforms, forced, zero_pivot, pivots, decisions
            )
            if status != STATUS_OK:
                return status, j, clamps
            if clamped:
                clamps += 1
            if not keep:
                a[j, j] = pivot - 1
                pivot = a[j, j]
        if abs(pivot) < zero_pivot:
            return STATUS_ZERO_PIVOT, j, clamps
        for i in range(j + 1, n):
            a[i, j] = a[i, j] / pivot
        for i in range(j + 1, n):
            lij = a[i, j]
            if lij != 0:
                for k in range(j + 1, n):
                    a[i, k] -= lij * a[j, k]
    return STATUS_OK, stop, clamps


@nb.jit(nopython=True, nogil=True)
def _ldl_kernel(a, mode, uniforms, forced, tol, zero_pivot, stop, pivots, decisions):
    """Right-looking LDL^H on the lower triangle; the diagonal stays exactly real."""
    n = a.shape[0]
    clamps = 0
    for j in range(stop):
        d = a[j, j].real
        if mode != 3:
            status, keep, clamped = decide_pivot(
                d, j, mode, tol, uniforms, forced, zero_pivot, pivots, decisions
            )
            if status != STATUS_OK:
                return status, j, clamps
            if clamped:
                clamps += 1
            if not keep:
                d = d - 1
        a[j, j] = d
        if abs(d) < zero_pivot:
            return STATUS_ZERO_PIVOT, j, clamps
        for i in range(j + 1, n):
            aij = a[i, j]
            if aij != 0:
                s = aij / d
                for k in range(j + 1, i + 1):
                    a[i, k] -= s * a[k, j].conjugate()
        for i in range(j + 1, n):
            a[i, j] = a[i, j] / d
    return STATUS_OK, stop, clamps


def eliminate(
    matrix: np.ndarray,
    hermitian: bool,
    mode: Mode,
    uniforms: np.ndarray | None = None,
    forced: np.ndarray | None = None,
    tolerance: float = config.PIVOT_TOLERANCE,
    imag_tolerance: float | None = None,
    zero_pivot: float = config.ZERO_PIVOT,
    stop: int | None = None,
    offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Run one in-place elimination over ``matrix`` and translate its status.

    Args:
        matrix: Square working array, modified in place.
        hermitian: Select LDL^H (lower triangle only) instead of LU.
        mode: Decision rule for each pivot.
        uniforms: One draw per pivot (``Mode.SAMPLE``).
        forced: One decision per pivot (``Mode.FORCED``).
        tolerance: Allowed excursion of a pivot outside [0, 1].
        imag_tolerance: Allowed imaginary part of an LU pivot.
        zero_pivot: Pivot magnitude treated as zero. In forced mode it is also
            the branch probability treated as impossible.
        stop: Number of leading pivots to eliminate (default: all).
        offset: Added to pivot indices in error messages (blocked callers).

    Returns:
        (pivots, decisions) in pivot order, both of length ``stop``.

    Raises:
        PivotOutOfRange, NonRealPivot, ZeroPivot, SingularConditioning.
    """
    n = matrix.shape[0]
    stop = n if stop is None else stop
    uniforms = np.zeros(stop) if uniforms is None else np.asarray(uniforms, dtype=np.float64)
    forced = np.zeros(stop, dtype=np.bool_) if forced is None else np.asarray(forced, dtype=np.bool_)
    pivots = np.zeros(stop, dtype=np.float64)
    decisions = np.zeros(stop, dtype=np.bool_)
    if imag_tolerance is None:
        imag_tolerance = tolerance

    if hermitian:
        status, index, clamps = _ldl_kernel(
            matrix, int(mode), uniforms, forced, tolerance, zero_pivot, stop, pivots, decisions
        )
    else:
        status, index, clamps = _lu_kernel(
            matrix, int(mode), uniforms, forced, tolerance, imag_tolerance, zero_pivot, stop,
            pivots, decisions,
        )

    if clamps:
        logger.warning("Clamped %d pivot(s) drifting outside [0, 1].", clamps)
    if status != STATUS_OK:
        raise_for_status(status, index + offset, complex(matrix[index, index]), tolerance)
    return pivots, decisions


def raise_for_status(status: int, index: int, value: complex, tolerance: float) -> None:
    if status == STATUS_OUT_OF_RANGE:
        raise PivotOutOfRange(
            f"Pivot {index} has real part {value.real!r}, outside [-{tolerance}, 1 + {tolerance}].",
            index,
            value,
        )
    if status == STATUS_NON_REAL:
        raise NonRealPivot(f"Pivot {index} has imaginary part {value.imag!r}.", index, value)
    if status == STATUS_IMPOSSIBLE:
        raise SingularConditioning(f"Forced decision at pivot {index} has probability zero.", index, value)
    if status == STATUS_STRUCTURE:
        raise StructureMismatch(f"Factor entry in column {index} falls outside the symbolic pattern.")
    raise ZeroPivot(f"Pivot {index} is numerically zero ({value!r}).", index, value)


def working_copy(kernel: MarginalKernel) -> np.ndarray:
    """Row-major copy of the kernel entries the eliminations can overwrite."""
    return np.array(kernel.entries, order="C", copy=True)


def imaginary_tolerance(kernel: MarginalKernel, tolerance: float) -> float:
    return tolerance * max(1.0, kernel.norm())


def _check_reconstruction(kernel: MarginalKernel, factored: FactoredKernel, decisions: np.ndarray) -> None:
    target = kernel.entries.astype(np.complex128) - np.diag((~decisions).astype(np.float64))
    residual = np.linalg.norm(factored.reconstruct() - target)
    if residual > 1e-10 * max(1.0, kernel.norm()):
        logger.warning("Factor reconstruction residual %.3e exceeds tolerance.", residual)


def _run(
    kernel: MarginalKernel,
    hermitian: bool,
    mode: Mode,
    uniforms: np.ndarray | None = None,
    forced: np.ndarray | None = None,
    tolerance: float = config.PIVOT_TOLERANCE,
    zero_pivot: float = config.ZERO_PIVOT,
) -> tuple[Sample, FactoredKernel]:
    matrix = working_copy(kernel)
    pivots, decisions = eliminate(
        matrix,
        hermitian,
        mode,
        uniforms=uniforms,
        forced=forced,
        tolerance=tolerance,
        imag_tolerance=imaginary_tolerance(kernel, tolerance),
        zero_pivot=zero_pivot,
    )
    factored = FactoredKernel(matrix, Symmetry.HERMITIAN if hermitian else Symmetry.GENERAL)
    if config.DEBUG_CHECKS:
        _check_reconstruction(kernel, factored, decisions)
    return Sample.from_decisions(pivots, decisions), factored


def sample_nonhermitian_unblocked(
    kernel: MarginalKernel, rng: RngStream, tolerance: float = config.PIVOT_TOLERANCE
) -> tuple[Sample, FactoredKernel]:
    """Sample a DPP through a modified right-looking LU factorization.

    Works for any admissible kernel; hermitian kernels are treated as general.

    Args:
        kernel: Marginal kernel.
        rng: Stream supplying exactly one uniform per index, in pivot order.
        tolerance: Allowed pivot excursion outside [0, 1] before clamping.

    Returns:
        The sample and the in-place LU factorization of K - 1_{Y^C}.

    Raises:
        PivotOutOfRange: If a pivot leaves [-tol, 1 + tol].
        NonRealPivot: If a pivot's imaginary part exceeds tol * max(1, ||K||).
    """
    logger.debug("LU sampling, n=%d, dtype=%s", kernel.order, kernel.entries.dtype)
    return _run(kernel, False, Mode.SAMPLE, uniforms=rng.uniforms(kernel.order), tolerance=tolerance)


def sample_hermitian_unblocked(
    kernel: MarginalKernel, rng: RngStream, tolerance: float = config.PIVOT_TOLERANCE
) -> tuple[Sample, FactoredKernel]:
    """Sample a DPP with a hermitian kernel through a modified LDL^H factorization.

    Raises:
        InvalidKernel: If the kernel is not flagged hermitian.
        PivotOutOfRange: If a pivot leaves [-tol, 1 + tol].
    """
    if not kernel.is_hermitian:
        raise InvalidKernel("LDL^H sampling requires a hermitian kernel.")
    logger.debug("LDL^H sampling, n=%d, dtype=%s", kernel.order, kernel.entries.dtype)
    return _run(kernel, True, Mode.SAMPLE, uniforms=rng.uniforms(kernel.order), tolerance=tolerance)


def greedy_map(
    kernel: MarginalKernel, tolerance: float = config.PIVOT_TOLERANCE
) -> tuple[Sample, FactoredKernel]:
    """Deterministic greedy maximum-likelihood subset.

    Each index is kept iff its conditional probability is at least 1/2.
    """
    return _run(kernel, kernel.is_hermitian, Mode.MAP, tolerance=tolerance)


def replay_decisions(
    kernel: MarginalKernel, decisions: Iterable[bool], tolerance: float = config.PIVOT_TOLERANCE
) -> tuple[Sample, FactoredKernel]:
    """Eliminate while forcing each keep/drop decision.

    Raises:
        SingularConditioning: If a forced decision has probability zero.
    """
    forced = np.asarray(list(decisions), dtype=np.bool_)
    if forced.size != kernel.order:
        raise ValueError(f"Expected {kernel.order} decisions, got {forced.size}.")
    return _run(
        kernel,
        kernel.is_hermitian,
        Mode.FORCED,
        forced=forced,
        tolerance=tolerance,
        zero_pivot=config.ZERO_PIVOT,
    )


def subset_mask(order: int, subset: Iterable[int]) -> np.ndarray:
    """Boolean membership mask of ``subset`` within range(order)."""
    mask = np.zeros(order, dtype=np.bool_)
    for index in subset:
        if not 0 <= int(index) < order:
            raise ValueError(f"Index {index} is outside the ground set of size {order}.")
        mask[int(index)] = True
    return mask


def log_likelihood_of(
    kernel: MarginalKernel, subset: Iterable[int], tolerance: float = config.PIVOT_TOLERANCE
) -> float:
    """Log of P[Y = subset], or -inf when the subset has probability zero."""
    try:
        sample, _ = replay_decisions(kernel, subset_mask(kernel.order, subset), tolerance)
    except SingularConditioning:
        return float("-inf")
    return sample.log_likelihood


def conditional_kernel(
    kernel: MarginalKernel,
    included: Iterable[int],
    excluded: Iterable[int],
    tolerance: float = config.SINGULAR_CONDITIONING,
) -> tuple[MarginalKernel, list[int]]:
    """Kernel of the remaining indices given A included and X excluded.

    Computes K_B - K_{B,A+X} (K_{A+X} - 1_X)^{-1} K_{A+X,B} by eliminating the
    pivots of A and X, with 1 subtracted from the X pivots first.

    Returns:
        The conditional kernel and the remaining indices B it is indexed by.

    Raises:
        ValueError: If A and X overlap.
        SingularConditioning: If an eliminated pivot is smaller than ``tolerance``.
    """
    n = kernel.order
    included_mask = subset_mask(n, included)
    excluded_mask = subset_mask(n, excluded)
    if np.any(included_mask & excluded_mask):
        raise ValueError("Included and excluded index sets must be disjoint.")

    eliminated = np.flatnonzero(included_mask | excluded_mask)
    remaining = np.flatnonzero(~(included_mask | excluded_mask))
    if remaining.size == 0:
        raise ValueError("Conditioning must leave at least one index.")
    order = np.concatenate([eliminated, remaining])

    matrix = np.array(kernel.entries[np.ix_(order, order)], dtype=np.complex128, order="C")
    for position, index in enumerate(eliminated):
        if excluded_mask[index]:
            matrix[position, position] -= 1

    try:
        eliminate(matrix, False, Mode.FACTOR, zero_pivot=tolerance, stop=eliminated.size)
    except ZeroPivot as error:
        label = int(eliminated[error.index])
        raise SingularConditioning(
            f"Conditioning on index {label} is a probability-zero event.", label, error.value
        ) from error

    schur = matrix[eliminated.size :, eliminated.size :]
    if not np.iscomplexobj(kernel.entries):
        schur = schur.real
    schur = schur.astype(kernel.entries.dtype)
    if kernel.is_hermitian:
        schur = symmetrize(schur)
        np.fill_diagonal(schur, np.diagonal(schur).real)
    return MarginalKernel(schur, kernel.symmetry), [int(j) for j in remaining]
