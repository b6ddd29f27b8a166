from unittest.mock import patch

import numpy as np
import pytest

from dppfactor.errors import InvalidKernel, TooLarge
from dppfactor.models.kernel import MarginalKernel, Symmetry, symmetrize
from dppfactor.services import kernel_service, oracle_service
from dppfactor.services.sampling_service import sample_hermitian_unblocked


def dft_kernel(spectrum: list[float]) -> MarginalKernel:
    """Hermitian kernel with the given spectrum and constant diagonal mean(spectrum)."""
    n = len(spectrum)
    q = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
    return MarginalKernel(symmetrize((q * np.asarray(spectrum)) @ q.conj().T), Symmetry.HERMITIAN)


class TestEnumerateProbabilities:
    def test_diagonal_kernel(self, diagonal_kernel: MarginalKernel) -> None:
        distribution = oracle_service.enumerate_probabilities(diagonal_kernel)

        np.testing.assert_allclose(distribution.probabilities, [0.07, 0.03, 0.63, 0.27], atol=1e-12)
        assert distribution.probability([1]) == pytest.approx(0.63)
        np.testing.assert_allclose(distribution.marginals(), [0.3, 0.9], atol=1e-12)

    def test_rank_one_projection(self, rank_one_projection: MarginalKernel) -> None:
        distribution = oracle_service.enumerate_probabilities(rank_one_projection)

        np.testing.assert_allclose(distribution.probabilities, [0.0, 0.5, 0.5, 0.0], atol=1e-12)

    def test_sums_to_one_with_kernel_marginals(self, nonhermitian_kernel: MarginalKernel) -> None:
        distribution = oracle_service.enumerate_probabilities(nonhermitian_kernel)

        assert distribution.total() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(distribution.marginals(), np.diagonal(nonhermitian_kernel.entries).real, atol=1e-10)

    @pytest.mark.parametrize("fixture", ["hermitian_kernel", "nonhermitian_kernel"])
    def test_invariant_under_diagonal_similarity(self, fixture: str, request: pytest.FixtureRequest) -> None:
        kernel = request.getfixturevalue(fixture)
        scaling = np.array([1.0, -2.0, 0.5j, 3.0 - 1.0j])

        scaled = oracle_service.enumerate_probabilities(kernel.similarity(scaling))

        np.testing.assert_allclose(
            scaled.probabilities, oracle_service.enumerate_probabilities(kernel).probabilities, atol=1e-10
        )

    def test_inadmissible(self, out_of_range_kernel: MarginalKernel) -> None:
        with pytest.raises(InvalidKernel):
            oracle_service.enumerate_probabilities(out_of_range_kernel)

    def test_too_large(self) -> None:
        with pytest.raises(TooLarge):
            oracle_service.enumerate_probabilities(kernel_service.identity_kernel(21))

    def test_small_batches(self, hermitian_kernel: MarginalKernel) -> None:
        expected = oracle_service.signed_determinants(hermitian_kernel)

        with patch.object(oracle_service.config, "ENUMERATION_BATCH", 3):
            batched = oracle_service.signed_determinants(hermitian_kernel)

        np.testing.assert_allclose(batched, expected, atol=1e-14)


class TestCheckAdmissibility:
    def test_admissible(self, nonhermitian_kernel: MarginalKernel) -> None:
        assert oracle_service.check_admissibility(nonhermitian_kernel).admissible

    def test_inadmissible_reports_worst(self, out_of_range_kernel: MarginalKernel) -> None:
        report = oracle_service.check_admissibility(out_of_range_kernel)

        assert not report.admissible
        assert report.worst_subset in ([], [0, 1])
        assert report.worst_value == pytest.approx(0.25 - 0.81)

    @pytest.mark.parametrize(
        ("spectrum", "admissible"),
        [
            ([0.0, 0.3, 0.6, 1.0], True),
            ([0.1, 0.1, 0.1, 0.1], True),
            ([1.2, 0.4, 0.4, 0.4], False),
            ([-0.1, 0.3, 0.6, 0.9], False),
        ],
    )
    def test_hermitian_matches_spectrum(self, spectrum: list[float], admissible: bool) -> None:
        assert oracle_service.check_admissibility(dft_kernel(spectrum)).admissible is admissible

    def test_too_large(self) -> None:
        with pytest.raises(TooLarge):
            oracle_service.check_admissibility(kernel_service.identity_kernel(21))


class TestChiSquareStatistic:
    def test_exact_counts_pass(self) -> None:
        report = oracle_service.chi_square_statistic(np.array([70, 30, 630, 270]), np.array([0.07, 0.03, 0.63, 0.27]))

        assert report.passed
        assert report.statistic == pytest.approx(0.0, abs=1e-9)
        assert report.dof == 3
        assert report.trials == 1000

    def test_impossible_subset_fails(self) -> None:
        report = oracle_service.chi_square_statistic(np.array([0, 500, 499, 1]), np.array([0.0, 0.5, 0.5, 0.0]))

        assert report.impossible_observed == 1
        assert not report.passed

    def test_small_bins_merge(self) -> None:
        report = oracle_service.chi_square_statistic(np.array([50, 49, 1, 0]), np.array([0.5, 0.49, 0.005, 0.005]))

        assert report.bins == 2
        assert report.dof == 1
        assert report.passed

    def test_tail_bin_kept_when_large(self) -> None:
        probabilities = np.array([0.4, 0.4] + [0.02] * 10)
        observed = probabilities * 1000

        report = oracle_service.chi_square_statistic(observed, probabilities)

        # expected 20 per small bin, all regular
        assert report.bins == 12

    def test_skewed_counts_fail(self) -> None:
        report = oracle_service.chi_square_statistic(np.array([250, 250, 250, 250]), np.array([0.07, 0.03, 0.63, 0.27]))

        assert not report.passed
        assert report.p_value < 1e-3

    def test_single_bin(self) -> None:
        report = oracle_service.chi_square_statistic(np.array([10, 0]), np.array([1.0, 0.0]))

        assert report.dof == 0
        assert report.passed

    def test_shape_mismatch(self) -> None:
        with pytest.raises(ValueError):
            oracle_service.chi_square_statistic(np.array([1, 2]), np.array([0.5, 0.25, 0.25]))

    @pytest.mark.parametrize("significance", [0.0, 1.0, 1.5])
    def test_bad_significance(self, significance: float) -> None:
        with pytest.raises(ValueError):
            oracle_service.chi_square_statistic(np.array([1, 1]), np.array([0.5, 0.5]), significance)


class TestChiSquareCompare:
    def test_unblocked_sampler_passes(self, diagonal_kernel: MarginalKernel) -> None:
        report = oracle_service.chi_square_compare(
            lambda rng: sample_hermitian_unblocked(diagonal_kernel, rng)[0], diagonal_kernel, 2000, seed=1
        )

        assert report.passed
        assert report.trials == 2000

    def test_wrong_sampler_fails(self, diagonal_kernel: MarginalKernel) -> None:
        wrong = MarginalKernel(np.diag([0.5, 0.5]), Symmetry.HERMITIAN)

        report = oracle_service.chi_square_compare(
            lambda rng: sample_hermitian_unblocked(wrong, rng)[0], diagonal_kernel, 2000, seed=1
        )

        assert not report.passed

    def test_workers_do_not_change_counts(self, hermitian_kernel: MarginalKernel) -> None:
        def sampler(rng):
            return sample_hermitian_unblocked(hermitian_kernel, rng)[0]

        serial = oracle_service.chi_square_compare(sampler, hermitian_kernel, 1000, seed=5, streams=4, workers=1)
        threaded = oracle_service.chi_square_compare(sampler, hermitian_kernel, 1000, seed=5, streams=4, workers=4)

        assert serial.statistic == threaded.statistic
        assert serial.trials == threaded.trials == 1000

    @pytest.mark.parametrize(("trials", "streams", "workers"), [(0, 1, 1), (10, 0, 1), (10, 1, 0)])
    def test_bad_arguments(self, diagonal_kernel: MarginalKernel, trials: int, streams: int, workers: int) -> None:
        with pytest.raises(ValueError):
            oracle_service.chi_square_compare(
                lambda rng: sample_hermitian_unblocked(diagonal_kernel, rng)[0],
                diagonal_kernel,
                trials,
                streams=streams,
                workers=workers,
            )
