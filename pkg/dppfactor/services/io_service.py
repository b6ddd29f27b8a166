"""Matrix Market kernel files and plain-text sample files."""

import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.io import mminfo, mmread, mmwrite

from dppfactor.errors import MalformedSparse
from dppfactor.models.kernel import MarginalKernel, Symmetry
from dppfactor.models.sample import Sample
from dppfactor.models.sparse import SparseKernel

logger = logging.getLogger(__name__)

DIGITS = 17  # enough for a float64 to survive a decimal round trip


def _mm_symmetry(hermitian: bool, is_complex: bool) -> str:
    if not hermitian:
        return "general"
    return "hermitian" if is_complex else "symmetric"


def _lower_from_coo(coo: sp.coo_matrix) -> SparseKernel:
    """Lower-triangle CSC with every diagonal entry present, explicit zeros included."""
    n = coo.shape[0]
    keep = coo.row >= coo.col
    rows, cols, data = coo.row[keep], coo.col[keep], coo.data[keep]

    missing = np.setdiff1d(np.arange(n), rows[rows == cols])
    rows = np.concatenate([rows, missing])
    cols = np.concatenate([cols, missing])
    data = np.concatenate([data, np.zeros(missing.size, dtype=data.dtype)])

    order = np.lexsort((rows, cols))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, cols + 1, 1)
    return SparseKernel.from_arrays(n, np.cumsum(indptr), rows[order], data[order])


def read_kernel(path: str | Path) -> MarginalKernel | SparseKernel:
    """Read a kernel from a Matrix Market file.

    Array files become a dense ``MarginalKernel`` (hermitian when the header
    says so or the entries are exactly hermitian). Coordinate files holding a
    hermitian matrix become a ``SparseKernel``; other coordinate files are
    densified.

    Raises:
        OSError: If the file cannot be read.
        MalformedSparse: If a coordinate file repeats an entry.
        InvalidKernel: If the matrix is not a valid marginal kernel.
    """
    rows, cols, _, layout, field, symmetry = mminfo(str(path))
    if rows != cols:
        raise MalformedSparse(f"Kernel file {path} holds a {rows}x{cols} matrix, not a square one.")
    if field in ("integer", "pattern"):
        logger.debug("Promoting %s entries of %s to real", field, path)
    content = mmread(str(path))

    if layout == "array":
        entries = np.asarray(content)
        if not np.iscomplexobj(entries):
            entries = entries.astype(np.float64)
        hermitian = symmetry in ("symmetric", "hermitian") or np.array_equal(entries, entries.conj().T)
        logger.debug("Read dense %dx%d kernel from %s", rows, cols, path)
        return MarginalKernel(entries, Symmetry.HERMITIAN if hermitian else Symmetry.GENERAL)

    coo = sp.coo_matrix(content)
    keys = coo.row.astype(np.int64) * cols + coo.col
    if np.unique(keys).size != keys.size:
        raise MalformedSparse(f"Kernel file {path} lists an entry more than once.")
    if not np.iscomplexobj(coo.data):
        coo = coo.astype(np.float64)

    csr = coo.tocsr()
    if (csr - csr.conj().T).count_nonzero() == 0:
        logger.debug("Read sparse %dx%d kernel with %d entries from %s", rows, cols, coo.nnz, path)
        return _lower_from_coo(coo)
    logger.debug("Coordinate kernel %s is not hermitian; densifying", path)
    return MarginalKernel(csr.toarray(), Symmetry.GENERAL)


def write_kernel(path: str | Path, kernel: MarginalKernel | SparseKernel) -> None:
    """Write a kernel as Matrix Market with 17 significant digits.

    Dense kernels use the array layout; sparse kernels the coordinate layout
    with only the lower triangle stored.
    """
    if isinstance(kernel, SparseKernel):
        lower = kernel.lower
        symmetry = _mm_symmetry(True, np.iscomplexobj(lower.data))
        mmwrite(str(path), lower.tocoo(), symmetry=symmetry, precision=DIGITS)
    else:
        entries = kernel.entries
        symmetry = _mm_symmetry(kernel.is_hermitian, kernel.is_complex)
        mmwrite(str(path), entries, symmetry=symmetry, precision=DIGITS)
    logger.debug("Wrote %r to %s", kernel, path)


def format_sample(sample: Sample) -> str:
    return f"loglik {sample.log_likelihood!r}\n{' '.join(str(j) for j in sample.kept)}\n"


def write_sample(path: str | Path, sample: Sample) -> None:
    """Write ``loglik <value>`` then the kept indices on one line."""
    Path(path).write_text(format_sample(sample))


def read_sample(path: str | Path) -> tuple[float, list[int]]:
    """Parse a sample file back into its log-likelihood and kept indices.

    Raises:
        ValueError: If the file does not follow the two-line layout.
    """
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("loglik "):
        raise ValueError(f"Sample file {path} must start with a 'loglik' line.")
    log_likelihood = float(lines[0].split(maxsplit=1)[1])
    kept = [int(token) for token in lines[1].split()] if len(lines) > 1 else []
    return log_likelihood, kept
