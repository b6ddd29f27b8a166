"""Sparse-direct hermitian DPP sampling.

Symbolic analysis builds the elimination tree and exact factor column counts of
the permuted kernel. The numeric phase is an up-looking LDL^H: row k of L is a
sparse triangular solve over the tree-reachable set of row k of the kernel,
after which the Bernoulli rule decides pivot k. Decisions only change diagonal
values, so the factor pattern always equals the symbolic prediction.
"""

import logging
from collections.abc import Iterable

import numba as nb
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from dppfactor import config
from dppfactor.errors import SingularConditioning
from dppfactor.models.rng import RngStream
from dppfactor.models.sample import Sample
from dppfactor.models.sparse import EliminationTree, SparseFactor, SparseKernel, validate_lower_csc
from dppfactor.services.sampling_service import (
    STATUS_OK,
    STATUS_STRUCTURE,
    STATUS_ZERO_PIVOT,
    Mode,
    decide_pivot,
    raise_for_status,
)

logger = logging.getLogger(__name__)

ORDERINGS = ("natural", "rcm", "nested-dissection")


# Symbolic phase


@nb.jit(nopython=True)
def _etree(n, rowptr, cols):
    """Elimination tree from the rows of the lower triangle (columns of the upper)."""
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(rowptr[k], rowptr[k + 1]):
            i = cols[p]
            while i != -1 and i < k:
                following = ancestor[i]
                ancestor[i] = k
                if following == -1:
                    parent[i] = k
                i = following
    return parent


@nb.jit(nopython=True)
def _postorder(n, parent):
    head = np.full(n, -1, dtype=np.int64)
    following = np.full(n, -1, dtype=np.int64)
    for j in range(n - 1, -1, -1):
        if parent[j] != -1:
            following[j] = head[parent[j]]
            head[parent[j]] = j
    post = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    k = 0
    for root in range(n):
        if parent[root] != -1:
            continue
        top = 0
        stack[0] = root
        while top >= 0:
            node = stack[top]
            child = head[node]
            if child == -1:
                top -= 1
                post[k] = node
                k += 1
            else:
                head[node] = following[child]
                top += 1
                stack[top] = child
    return post


@nb.jit(nopython=True)
def _column_counts(n, rowptr, cols, parent):
    """Nonzeros per factor column (unit diagonal included) via row subtrees."""
    counts = np.ones(n, dtype=np.int64)
    flag = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        flag[k] = k
        for p in range(rowptr[k], rowptr[k + 1]):
            i = cols[p]
            while i < k and flag[i] != k:
                counts[i] += 1
                flag[i] = k
                i = parent[i]
    return counts


def permuted_rows(kernel: SparseKernel, perm: np.ndarray) -> sp.csr_matrix:
    """Lower triangle of P K P^T in compressed rows, sorted within each row."""
    full = kernel.full()
    if not np.array_equal(perm, np.arange(kernel.order)):
        full = full[perm][:, perm]
    rows = sp.tril(full, format="csr")
    rows.sort_indices()
    return rows


def validate_permutation(perm: Iterable[int] | None, n: int) -> np.ndarray:
    if perm is None:
        return np.arange(n)
    perm = np.asarray(list(perm), dtype=np.int64)
    if perm.size != n or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"Permutation must be a bijection on range({n}).")
    return perm


def symbolic_analyze(kernel: SparseKernel, perm: Iterable[int] | None = None) -> EliminationTree:
    """Elimination tree, postorder and factor column counts of P K P^T.

    Args:
        kernel: Sparse hermitian kernel.
        perm: Pivot order; ``perm[k]`` is the label eliminated k-th.

    Returns:
        The tree, with ``flops`` modeled as the sum of squared column counts.

    Raises:
        MalformedSparse: On unsorted or duplicate row indices.
    """
    n = kernel.order
    validate_lower_csc(n, kernel.lower.indptr, kernel.lower.indices)
    perm = validate_permutation(perm, n)
    rows = permuted_rows(kernel, perm)
    rowptr = rows.indptr.astype(np.int64)
    cols = rows.indices.astype(np.int64)

    parent = _etree(n, rowptr, cols)
    postorder = _postorder(n, parent)
    counts = _column_counts(n, rowptr, cols, parent)
    flops = float(np.sum(counts.astype(np.float64) ** 2))
    logger.debug("Symbolic analysis: n=%d, nnz(L)=%d, flops=%.3e", n, int(counts.sum()), flops)
    return EliminationTree(parent, postorder, counts, perm, flops)


# Orderings


def nested_dissection_grid(width: int, height: int, leaf: int = 8) -> np.ndarray:
    """Geometric nested dissection of a row-major width x height grid.

    The longer side of each region is cut by a middle grid line which is
    numbered after both halves. Regions with at most ``leaf`` vertices are
    numbered row-major.
    """
    order: list[int] = []

    def dissect(x0: int, x1: int, y0: int, y1: int) -> None:
        w, h = x1 - x0, y1 - y0
        if w <= 0 or h <= 0:
            return
        if w * h <= leaf:
            order.extend(y * width + x for y in range(y0, y1) for x in range(x0, x1))
            return
        if w >= h:
            mid = x0 + w // 2
            dissect(x0, mid, y0, y1)
            dissect(mid + 1, x1, y0, y1)
            order.extend(y * width + mid for y in range(y0, y1))
        else:
            mid = y0 + h // 2
            dissect(x0, x1, y0, mid)
            dissect(x0, x1, mid + 1, y1)
            order.extend(mid * width + x for x in range(x0, x1))

    dissect(0, width, 0, height)
    return np.asarray(order, dtype=np.int64)


def ordering_permutation(
    kernel: SparseKernel, method: str = "natural", grid: tuple[int, int] | None = None
) -> np.ndarray:
    """Pivot order for ``kernel``. Orderings change fill and speed, never the distribution.

    Raises:
        ValueError: On an unknown method, or nested dissection without a grid shape.
    """
    if method == "natural":
        return np.arange(kernel.order)
    if method == "rcm":
        full = kernel.full().tocsr()
        pattern = sp.csr_matrix((np.ones(full.nnz), full.indices, full.indptr), shape=full.shape)
        return np.asarray(reverse_cuthill_mckee(pattern, symmetric_mode=True), dtype=np.int64)
    if method == "nested-dissection":
        if grid is None or grid[0] * grid[1] != kernel.order:
            raise ValueError("Nested dissection needs the grid shape of the kernel.")
        return nested_dissection_grid(*grid)
    raise ValueError(f"Unknown ordering '{method}'. Choose from {', '.join(ORDERINGS)}.")


# Numeric phase


@nb.jit(nopython=True)
def _up_looking(
    n, rowptr, cols, values, parent, colptr, mode, uniforms, forced, tol, zero_pivot,
    row_index, factor, diagonal, pivots, decisions,
):
    """Up-looking LDL^H with the Bernoulli pivot rule; returns (status, index, pivot)."""
    x = np.zeros(n, dtype=values.dtype)
    flag = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    fill = colptr[:-1] + 1
    for k in range(n):
        # Row pattern of L(k, :) in topological order: stack[top:n]
        top = n
        flag[k] = k
        d = 0.0
        for p in range(rowptr[k], rowptr[k + 1]):
            i = cols[p]
            if i == k:
                d = values[p].real
                continue
            x[i] = values[p].conjugate()
            length = 0
            while flag[i] != k:
                if i < 0 or i > k:
                    return STATUS_STRUCTURE, k, d
                stack[length] = i
                length += 1
                flag[i] = k
                i = parent[i]
            while length > 0:
                top -= 1
                length -= 1
                stack[top] = stack[length]

        # Sparse triangular solve and diagonal update
        for t in range(top, n):
            i = stack[t]
            yi = x[i]
            x[i] = 0
            for p in range(colptr[i] + 1, fill[i]):
                x[row_index[p]] -= factor[p] * yi
            lki = yi.conjugate() / diagonal[i]
            d -= (lki * yi).real
            p = fill[i]
            if p >= colptr[i + 1]:
                return STATUS_STRUCTURE, i, d
            row_index[p] = k
            factor[p] = lki
            fill[i] = p + 1

        if mode != 3:
            status, keep, clamped = decide_pivot(
                d, k, mode, tol, uniforms, forced, zero_pivot, pivots, decisions
            )
            if status != STATUS_OK:
                return status, k, d
            if not keep:
                d -= 1.0
        if abs(d) < zero_pivot:
            return STATUS_ZERO_PIVOT, k, d
        diagonal[k] = d
        row_index[colptr[k]] = k
        factor[colptr[k]] = 1
    for i in range(n):
        if fill[i] != colptr[i + 1]:
            return STATUS_STRUCTURE, i, 0.0
    return STATUS_OK, n, 0.0


def _factorize(
    kernel: SparseKernel,
    tree: EliminationTree,
    mode: Mode,
    uniforms: np.ndarray | None = None,
    forced: np.ndarray | None = None,
    tolerance: float = config.PIVOT_TOLERANCE,
    zero_pivot: float = config.ZERO_PIVOT,
) -> tuple[Sample, SparseFactor]:
    n = kernel.order
    if tree.order != n:
        raise ValueError(f"Elimination tree of order {tree.order} does not fit a kernel of order {n}.")
    rows = permuted_rows(kernel, tree.perm)
    values = rows.data
    real_dtype = np.float32 if kernel.precision == 32 else np.float64

    colptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(tree.column_counts, out=colptr[1:])
    row_index = np.zeros(colptr[-1], dtype=np.int64)
    factor = np.zeros(colptr[-1], dtype=values.dtype)
    diagonal = np.zeros(n, dtype=real_dtype)
    pivots = np.zeros(n, dtype=np.float64)
    decisions = np.zeros(n, dtype=np.bool_)

    status, index, value = _up_looking(
        n,
        rows.indptr.astype(np.int64),
        rows.indices.astype(np.int64),
        values,
        tree.parent,
        colptr,
        int(mode),
        np.zeros(n) if uniforms is None else uniforms,
        np.zeros(n, dtype=np.bool_) if forced is None else forced,
        tolerance,
        zero_pivot,
        row_index,
        factor,
        diagonal,
        pivots,
        decisions,
    )
    if status != STATUS_OK:
        raise_for_status(status, int(index), complex(value), tolerance)

    lower = sp.csc_matrix((factor, row_index, colptr), shape=(n, n))
    sample = Sample.from_decisions(pivots, decisions, order=tree.perm)
    return sample, SparseFactor(lower, diagonal)


def sample_sparse_hermitian(
    kernel: SparseKernel,
    tree: EliminationTree,
    rng: RngStream,
    tolerance: float = config.PIVOT_TOLERANCE,
) -> tuple[Sample, SparseFactor]:
    """Sample a DPP with a sparse hermitian kernel.

    Pivots are eliminated in ``tree.perm`` order and one uniform is drawn per
    pivot. The sample's ``kept`` is in original labels and ``order`` holds the
    permutation.

    Args:
        kernel: Sparse hermitian kernel.
        tree: Output of ``symbolic_analyze`` for this kernel.
        rng: Uniform stream.
        tolerance: Allowed pivot excursion outside [0, 1] before clamping.

    Returns:
        The sample and the factor of P (K - 1_{Y^C}) P^T.

    Raises:
        PivotOutOfRange: If a pivot leaves [-tol, 1 + tol].
        StructureMismatch: If the numeric factor leaves the symbolic pattern.
    """
    uniforms = rng.uniforms(kernel.order)
    sample, factor = _factorize(kernel, tree, Mode.SAMPLE, uniforms=uniforms, tolerance=tolerance)
    logger.debug(
        "Sparse sample: n=%d, kept=%d, nnz(L)=%d", kernel.order, len(sample.kept), factor.nnz
    )
    return sample, factor


def greedy_map_sparse(
    kernel: SparseKernel, tree: EliminationTree, tolerance: float = config.PIVOT_TOLERANCE
) -> tuple[Sample, SparseFactor]:
    """Greedy MAP over a sparse kernel: keep each pivot iff p >= 1/2."""
    return _factorize(kernel, tree, Mode.MAP, tolerance=tolerance)


def log_likelihood_of_sparse(
    kernel: SparseKernel,
    tree: EliminationTree,
    subset: Iterable[int],
    tolerance: float = config.PIVOT_TOLERANCE,
) -> float:
    """Log of P[Y = subset] by forced sparse elimination; -inf for probability zero."""
    members = np.zeros(kernel.order, dtype=np.bool_)
    for index in subset:
        if not 0 <= int(index) < kernel.order:
            raise ValueError(f"Index {index} is outside the ground set of size {kernel.order}.")
        members[int(index)] = True
    try:
        sample, _ = _factorize(
            kernel,
            tree,
            Mode.FORCED,
            forced=members[tree.perm],
            tolerance=tolerance,
            zero_pivot=config.ZERO_PIVOT,
        )
    except SingularConditioning:
        return float("-inf")
    return sample.log_likelihood

