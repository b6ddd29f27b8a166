"""Exception hierarchy.

Every error raised on purpose by the package derives from ``DPPError``, which
is itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class DPPError(ValueError):
    """Base class for all package errors."""


class InvalidKernel(DPPError):
    """A matrix failed construction-time validation."""


class PivotError(DPPError):
    """A pivot was unusable during elimination.

    Attributes:
        index: Pivot position (in pivot order).
        value: The offending pivot value.
    """

    def __init__(self, message: str, index: int, value: complex) -> None:
        super().__init__(message)
        self.index = index
        self.value = value


class PivotOutOfRange(PivotError):
    """Real part of a pivot fell outside [-tol, 1 + tol]."""


class NonRealPivot(PivotError):
    """Imaginary part of a pivot exceeded the tolerance."""


class ZeroPivot(PivotError):
    """Plain factorization hit a pivot of (near) zero magnitude."""


class SingularConditioning(PivotError):
    """Conditioning on a probability-zero event."""


class StructureMismatch(DPPError):
    """Numeric sparse factorization left the symbolic pattern."""


class MalformedSparse(DPPError):
    """Unsorted or duplicate row indices in compressed storage."""


class NegativeDiagonal(DPPError):
    """Remaining diagonal of a projection went negative."""


class DegenerateMass(DPPError):
    """Remaining diagonal mass vanished before all pivots were drawn."""


class SpectrumOutOfRange(DPPError):
    """An eigenvalue of a hermitian kernel lies outside [0, 1]."""


class DisconnectedGraph(DPPError):
    """Spanning-tree kernels need a connected graph."""


class SingularKasteleyn(DPPError):
    """The Kasteleyn matrix could not be inverted."""


class InvalidSigma(DPPError):
    """Laplacian scale outside (0, 1]."""


class IndefiniteL(DPPError):
    """L-ensemble kernel has a negative eigenvalue."""


class TooLarge(DPPError):
    """Brute-force enumeration requested beyond the supported order."""


class BuilderSyntaxError(DPPError):
    """A ``--builder`` string could not be parsed."""
