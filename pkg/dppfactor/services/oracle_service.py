"""Brute-force ground truth for small kernels and the chi-square harness."""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import chi2

from dppfactor import config
from dppfactor.errors import InvalidKernel, TooLarge
from dppfactor.models.kernel import MarginalKernel
from dppfactor.models.report import AdmissibilityReport, ChiSquareReport
from dppfactor.models.rng import RngStream
from dppfactor.models.sample import SubsetDistribution

logger = logging.getLogger(__name__)

Sampler = Callable[[RngStream], object]


def _check_order(kernel: MarginalKernel) -> int:
    n = kernel.order
    if n > config.MAX_ENUMERATION_ORDER:
        raise TooLarge(
            f"Enumerating 2^{n} subsets exceeds the limit of n={config.MAX_ENUMERATION_ORDER}."
        )
    return n


def _membership(masks: np.ndarray, n: int) -> np.ndarray:
    """Boolean (len(masks), n) table; entry [m, j] tells whether bit j is set."""
    return ((masks[:, None] >> np.arange(n)) & 1).astype(bool)


def signed_determinants(kernel: MarginalKernel) -> np.ndarray:
    """(-1)^|J| det(K - 1_J) for every J, indexed by the bitmask of J.

    Determinants are evaluated in batches of ``config.ENUMERATION_BATCH``
    stacked matrices.
    """
    n = _check_order(kernel)
    entries = np.asarray(kernel.entries, dtype=np.complex128)
    total = 1 << n
    values = np.empty(total, dtype=np.float64)

    for start in range(0, total, config.ENUMERATION_BATCH):
        masks = np.arange(start, min(start + config.ENUMERATION_BATCH, total))
        members = _membership(masks, n)
        stack = np.broadcast_to(entries, (masks.size, n, n)).copy()
        stack[:, np.arange(n), np.arange(n)] -= members
        signs = np.where(members.sum(axis=1) % 2 == 0, 1.0, -1.0)
        values[masks] = signs * np.linalg.det(stack).real

    return values


def enumerate_probabilities(kernel: MarginalKernel) -> SubsetDistribution:
    """Exact probability of every subset of the ground set.

    P(Y) = (-1)^|Y^C| det(K - 1_{Y^C}). Values within
    ``config.ADMISSIBILITY_TOLERANCE`` below zero are clamped to zero.

    Raises:
        TooLarge: If n exceeds ``config.MAX_ENUMERATION_ORDER``.
        InvalidKernel: If a subset probability is clearly negative.
    """
    n = _check_order(kernel)
    signed = signed_determinants(kernel)
    # Y^C has bitmask full ^ Y, which reverses the index order
    probabilities = signed[::-1].copy()

    worst = int(np.argmin(probabilities))
    if probabilities[worst] < -config.ADMISSIBILITY_TOLERANCE:
        subset = [j for j in range(n) if worst >> j & 1]
        raise InvalidKernel(
            f"Kernel is not admissible: P({subset}) = {probabilities[worst]!r}."
        )
    np.clip(probabilities, 0.0, None, out=probabilities)
    logger.debug("Enumerated %d subset probabilities, total %.12g", probabilities.size, probabilities.sum())
    return SubsetDistribution(n, probabilities)


def check_admissibility(kernel: MarginalKernel) -> AdmissibilityReport:
    """Check that every signed determinant (-1)^|J| det(K - 1_J) is nonnegative.

    Returns:
        The verdict together with the most negative case J and its value.

    Raises:
        TooLarge: If n exceeds ``config.MAX_ENUMERATION_ORDER``.
    """
    n = kernel.order
    signed = signed_determinants(kernel)
    worst = int(np.argmin(signed))
    value = float(signed[worst])
    return AdmissibilityReport(
        admissible=value >= -config.ADMISSIBILITY_TOLERANCE,
        worst_subset=[j for j in range(n) if worst >> j & 1],
        worst_value=value,
    )


def chi_square_statistic(
    observed: np.ndarray,
    probabilities: np.ndarray,
    significance: float = config.CHI_SQUARE_SIGNIFICANCE,
) -> ChiSquareReport:
    """Pearson test of subset counts against exact subset probabilities.

    Bins with an expected count below ``config.CHI_SQUARE_MIN_EXPECTED`` are
    pooled into one tail bin; a tail still below the threshold is merged into
    the smallest regular bin. Any observation of a subset with probability
    below ``config.IMPOSSIBLE_PROBABILITY`` fails the test outright.

    Args:
        observed: Count per subset bitmask.
        probabilities: Exact probability per subset bitmask.
        significance: Rejection level of the test.

    Returns:
        The statistic, degrees of freedom, critical value and verdict.
    """
    observed = np.asarray(observed, dtype=np.float64)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if observed.shape != probabilities.shape:
        raise ValueError(
            f"Observed counts {observed.shape} and probabilities {probabilities.shape} differ in shape."
        )
    if not 0.0 < significance < 1.0:
        raise ValueError(f"Significance must lie in (0, 1), got {significance}.")

    trials = int(observed.sum())
    expected = probabilities * trials
    impossible = int(observed[probabilities < config.IMPOSSIBLE_PROBABILITY].sum())

    regular = expected >= config.CHI_SQUARE_MIN_EXPECTED
    bins_observed = list(observed[regular])
    bins_expected = list(expected[regular])
    tail_observed = float(observed[~regular].sum())
    tail_expected = float(expected[~regular].sum())
    if tail_observed > 0 or tail_expected > 0:
        if tail_expected >= config.CHI_SQUARE_MIN_EXPECTED or not bins_expected:
            bins_observed.append(tail_observed)
            bins_expected.append(tail_expected)
        else:
            smallest = int(np.argmin(bins_expected))
            bins_observed[smallest] += tail_observed
            bins_expected[smallest] += tail_expected

    o, e = np.array(bins_observed), np.array(bins_expected)
    dof = len(e) - 1
    if dof < 1:
        statistic, threshold, p_value = 0.0, 0.0, 1.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(e > 0, (o - e) ** 2 / e, np.where(o > 0, np.inf, 0.0))
        statistic = float(terms.sum())
        threshold = float(chi2.isf(significance, dof))
        p_value = float(chi2.sf(statistic, dof))

    return ChiSquareReport(
        statistic=statistic,
        dof=dof,
        threshold=threshold,
        p_value=p_value,
        significance=significance,
        trials=trials,
        bins=len(e),
        impossible_observed=impossible,
    )


def _count_masks(sampler: Sampler, rng: RngStream, trials: int, n: int) -> np.ndarray:
    masks = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        mask = 0
        for j in sampler(rng).kept:  # type: ignore[attr-defined]
            mask |= 1 << j
        masks[t] = mask
    return np.bincount(masks, minlength=1 << n)


def chi_square_compare(
    sampler: Sampler,
    kernel: MarginalKernel,
    trials: int,
    significance: float = config.CHI_SQUARE_SIGNIFICANCE,
    seed: int = 0,
    streams: int = 1,
    workers: int = 1,
) -> ChiSquareReport:
    """Draw ``trials`` samples and test them against the exact distribution.

    Trials are split over ``streams`` child streams spawned from ``seed``; the
    counts depend only on the seed and the stream count, never on ``workers``.

    Args:
        sampler: Callable taking an ``RngStream`` and returning an object with
            a ``kept`` list of indices.
        kernel: Kernel the sampler draws from.
        trials: Total number of draws.
        significance: Rejection level of the test.
        seed: Seed of the parent stream.
        streams: Number of independent child streams.
        workers: Threads used to run the streams.
    """
    if trials < 1:
        raise ValueError(f"Trials must be positive, got {trials}.")
    if streams < 1 or workers < 1:
        raise ValueError("Streams and workers must be positive.")

    distribution = enumerate_probabilities(kernel)
    n = kernel.order

    children = RngStream(seed).spawn(streams) if streams > 1 else [RngStream(seed)]
    shares = [trials // streams + (1 if s < trials % streams else 0) for s in range(streams)]

    if workers == 1:
        partials = [_count_masks(sampler, rng, share, n) for rng, share in zip(children, shares)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(lambda job: _count_masks(sampler, job[0], job[1], n), zip(children, shares))
            )
    observed = np.sum(partials, axis=0)

    report = chi_square_statistic(observed, distribution.probabilities, significance)
    logger.info(
        "Chi-square over %d trials: statistic %.4g, dof %d, threshold %.4g, %s",
        trials,
        report.statistic,
        report.dof,
        report.threshold,
        "pass" if report.passed else "fail",
    )
    return report
