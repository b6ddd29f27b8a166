"""Sampler results."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(eq=False)
class Sample:
    """One draw from a DPP.

    ``pivots`` and ``decisions`` are in pivot order. ``order`` maps a pivot
    position to its ground-set label; ``None`` means the identity (dense
    samplers). ``kept`` is always in ground-set labels, sorted.
    """

    kept: list[int]
    log_likelihood: float
    pivots: np.ndarray
    decisions: np.ndarray
    order: np.ndarray | None = None

    @classmethod
    def from_decisions(
        cls, pivots: np.ndarray, decisions: np.ndarray, order: np.ndarray | None = None
    ) -> "Sample":
        """Assemble a sample; the likelihood is summed from the clamped pivots."""
        pivots = np.asarray(pivots, dtype=np.float64)
        decisions = np.asarray(decisions, dtype=bool)
        labels = np.arange(pivots.size) if order is None else np.asarray(order)
        kept = sorted(int(j) for j in labels[decisions])
        return cls(kept, log_likelihood_from_pivots(pivots, decisions), pivots, decisions, order)

    @property
    def probability(self) -> float:
        return float(np.exp(self.log_likelihood))

    def same_as(self, other: "Sample") -> bool:
        """Byte-for-byte equality of every recorded field."""
        return (
            self.kept == other.kept
            and np.float64(self.log_likelihood).tobytes() == np.float64(other.log_likelihood).tobytes()
            and self.pivots.tobytes() == other.pivots.tobytes()
            and self.decisions.tobytes() == other.decisions.tobytes()
        )

    def to_dict(self) -> dict:
        """Convert to a JSON-friendly dictionary."""
        return {
            "kept": self.kept,
            "log_likelihood": self.log_likelihood,
            "pivots": self.pivots.tolist(),
            "decisions": self.decisions.tolist(),
            "order": None if self.order is None else self.order.tolist(),
        }

    def __repr__(self) -> str:
        return f"<Sample(size={len(self.kept)}, log_likelihood={self.log_likelihood:.6g})>"


def log_likelihood_from_pivots(pivots: np.ndarray, decisions: np.ndarray) -> float:
    """Sum ln(p) over kept indices and ln(1 - p) over excluded ones."""
    with np.errstate(divide="ignore"):
        terms = np.where(decisions, np.log(pivots), np.log1p(-pivots))
    return float(np.sum(terms))


@dataclass(eq=False)
class ElementarySample:
    """Result of projection-DPP sampling.

    ``factor`` is the k x k lower Cholesky factor of K_Y in draw order and
    ``mass_residuals[j]`` records sum(d[j:]) - (k - j) just before pivot j.
    """

    indices: list[int]
    factor: np.ndarray
    log_likelihood: float
    mass_residuals: list[float] = field(default_factory=list)

    @property
    def kept(self) -> list[int]:
        return sorted(self.indices)


@dataclass(eq=False)
class SubsetDistribution:
    """Exact DPP law over all 2^n subsets; bit j of a mask marks j in Y."""

    order: int
    probabilities: np.ndarray

    @staticmethod
    def mask_of(subset: list[int] | tuple[int, ...] | set[int]) -> int:
        mask = 0
        for j in subset:
            mask |= 1 << int(j)
        return mask

    def probability(self, subset: list[int] | tuple[int, ...] | set[int]) -> float:
        return float(self.probabilities[self.mask_of(subset)])

    def marginals(self) -> np.ndarray:
        """P(j in Y) for every j."""
        masks = np.arange(self.probabilities.size)
        return np.array(
            [self.probabilities[(masks >> j) & 1 == 1].sum() for j in range(self.order)]
        )

    def total(self) -> float:
        return float(self.probabilities.sum())
