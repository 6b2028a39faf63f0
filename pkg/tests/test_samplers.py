"""Goodness-of-fit suites for the variate generators: analytic moment
oracles, Kolmogorov-Smirnov tests against independent CDFs, and the
determinism contract."""

import numpy as np
import pytest
from scipy import integrate, special, stats

from bqreg import (
    NumericalError,
    RngHandle,
    TruncationSide,
    derive_subseed,
    sample_gig_half,
    sample_mvn,
    sample_truncated_normal,
)

# Asymptotic 1% critical value of the one-sample KS statistic.
KS_CRIT_1PCT = 1.628


def ks_against(draws: np.ndarray, cdf) -> float:
    return stats.kstest(draws, cdf).statistic


def gig_mean(chi: float, psi: float) -> float:
    """Bessel-ratio closed form E[u] = sqrt(chi/psi) * K_{3/2}(x)/K_{1/2}(x)."""
    x = np.sqrt(chi * psi)
    return np.sqrt(chi / psi) * special.kv(1.5, x) / special.kv(0.5, x)


def gig_variance(chi: float, psi: float) -> float:
    x = np.sqrt(chi * psi)
    second = (chi / psi) * special.kv(2.5, x) / special.kv(0.5, x)
    return second - gig_mean(chi, psi) ** 2


def gig_cdf_by_quadrature(chi: float, psi: float, upper: float):
    """CDF of the GIG(1/2) kernel via cumulative quadrature on a fine grid;
    independent of the inverse-Gaussian sampling route."""
    grid = np.linspace(1e-9, upper, 40001)
    kernel = grid ** (-0.5) * np.exp(-(chi / grid + psi * grid) / 2.0)
    cdf = integrate.cumulative_trapezoid(kernel, grid, initial=0.0)
    cdf /= cdf[-1]
    return lambda v: np.interp(v, grid, cdf)


class TestTruncatedNormal:
    def test_support_non_negative(self):
        rng = RngHandle(0)
        x = sample_truncated_normal(np.zeros(1000), np.ones(1000), TruncationSide.NON_NEGATIVE, rng)
        assert np.all(x >= 0.0)

    def test_support_negative(self):
        rng = RngHandle(0)
        x = sample_truncated_normal(np.zeros(1000), np.ones(1000), TruncationSide.NEGATIVE, rng)
        assert np.all(x < 0.0)

    def test_half_normal_mean(self):
        n = 1_000_000
        rng = RngHandle(101)
        x = sample_truncated_normal(np.zeros(n), np.ones(n), TruncationSide.NON_NEGATIVE, rng)
        expected = np.sqrt(2.0 / np.pi)
        se = np.sqrt((1.0 - 2.0 / np.pi) / n)
        assert abs(x.mean() - expected) < 3.0 * se

    def test_far_boundary_mean(self):
        # truncation is negligible ten sigma from the boundary
        n = 1_000_000
        rng = RngHandle(102)
        x = sample_truncated_normal(
            np.full(n, 10.0), np.ones(n), TruncationSide.NON_NEGATIVE, rng
        )
        assert abs(x.mean() - 10.0) < 0.01

    @pytest.mark.parametrize(
        "mean,side",
        [
            (0.0, TruncationSide.NON_NEGATIVE),
            (0.0, TruncationSide.NEGATIVE),
            (8.0, TruncationSide.NON_NEGATIVE),
            (8.0, TruncationSide.NEGATIVE),
            (-8.0, TruncationSide.NON_NEGATIVE),
            (-8.0, TruncationSide.NEGATIVE),
        ],
    )
    def test_ks_against_analytic_cdf(self, mean, side):
        n = 100_000
        rng = RngHandle(103)
        x = sample_truncated_normal(np.full(n, mean), np.ones(n), side, rng)
        if side is TruncationSide.NON_NEGATIVE:
            a, b = -mean, np.inf
        else:
            a, b = -np.inf, -mean
        stat = ks_against(x, lambda v: stats.truncnorm.cdf(v, a, b, loc=mean, scale=1.0))
        assert stat < KS_CRIT_1PCT / np.sqrt(n)

    def test_scalar_call(self):
        rng = RngHandle(5)
        value = sample_truncated_normal(2.0, 4.0, TruncationSide.NEGATIVE, rng)
        assert isinstance(value, float) and value < 0.0

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            sample_truncated_normal(0.0, 0.0, TruncationSide.NON_NEGATIVE, RngHandle(0))
        with pytest.raises(ValueError):
            sample_truncated_normal(0.0, -1.0, TruncationSide.NEGATIVE, RngHandle(0))


class TestGigHalf:
    def test_mean_unit_parameters(self):
        # K_{3/2}(x)/K_{1/2}(x) = 1 + 1/x gives E[u] = 2 at chi = psi = 1
        n = 1_000_000
        draws = sample_gig_half(np.ones(n), 1.0, RngHandle(104))
        expected = gig_mean(1.0, 1.0)
        assert expected == pytest.approx(2.0, rel=1e-10)
        se = np.sqrt(gig_variance(1.0, 1.0) / n)
        assert abs(draws.mean() - expected) < 3.0 * se

    def test_mean_chi_four(self):
        n = 1_000_000
        draws = sample_gig_half(np.full(n, 4.0), 1.0, RngHandle(105))
        expected = gig_mean(4.0, 1.0)
        assert expected == pytest.approx(3.0, rel=1e-10)
        se = np.sqrt(gig_variance(4.0, 1.0) / n)
        assert abs(draws.mean() - expected) < 3.0 * se

    def test_second_moment(self):
        n = 1_000_000
        chi, psi = 2.0, 3.0
        draws = sample_gig_half(np.full(n, chi), psi, RngHandle(106))
        x = np.sqrt(chi * psi)
        second = (chi / psi) * special.kv(2.5, x) / special.kv(0.5, x)
        fourth = (chi / psi) ** 2 * special.kv(4.5, x) / special.kv(0.5, x)
        se = np.sqrt((fourth - second**2) / n)
        assert abs((draws**2).mean() - second) < 3.0 * se

    def test_all_draws_positive(self):
        draws = sample_gig_half(np.full(10_000, 0.3), 2.5, RngHandle(107))
        assert np.all(draws > 0.0)

    @pytest.mark.parametrize("chi,psi", [(1.0, 1.0), (4.0, 1.0), (0.5, 2.0)])
    def test_ks_against_quadrature_cdf(self, chi, psi):
        n = 100_000
        draws = sample_gig_half(np.full(n, chi), psi, RngHandle(108))
        cdf = gig_cdf_by_quadrature(chi, psi, upper=float(draws.max()) * 1.2)
        assert ks_against(draws, cdf) < KS_CRIT_1PCT / np.sqrt(n)

    def test_reciprocal_is_inverse_gaussian(self):
        # 1/u ~ GIG(-1/2, psi, chi), i.e. InverseGaussian(sqrt(psi/chi), psi)
        n = 1_000_000
        chi, psi = 2.0, 5.0
        recip = 1.0 / sample_gig_half(np.full(n, chi), psi, RngHandle(109))
        mu = np.sqrt(psi / chi)
        variance = mu**3 / psi
        assert abs(recip.mean() - mu) < 3.0 * np.sqrt(variance / n)
        # central second moment against the IG variance, allowing kurtosis slack
        assert recip.var() == pytest.approx(variance, rel=0.02)

    def test_chi_zero_gamma_limit(self):
        n = 200_000
        psi = 2.0
        draws = sample_gig_half(np.zeros(n), psi, RngHandle(110))
        assert np.all(draws > 0.0)
        stat = ks_against(draws, lambda v: stats.gamma.cdf(v, a=0.5, scale=2.0 / psi))
        assert stat < KS_CRIT_1PCT / np.sqrt(n)

    def test_mixed_zero_and_positive_chi(self):
        chi = np.array([0.0, 1.0, 0.0, 4.0])
        draws = sample_gig_half(chi, 1.0, RngHandle(111))
        assert draws.shape == (4,) and np.all(draws > 0.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sample_gig_half(1.0, 0.0, RngHandle(0))
        with pytest.raises(ValueError):
            sample_gig_half(-1.0, 1.0, RngHandle(0))


class TestMvn:
    def test_identity_covariance_d2(self):
        sample = sample_mvn(np.zeros(2), np.eye(2), RngHandle(112), size=1_000_000)
        assert np.allclose(np.cov(sample.T), np.eye(2), atol=0.01)

    def test_scalar_case_variance(self):
        sample = sample_mvn(np.zeros(1), np.array([[2.5]]), RngHandle(114), size=200_000)
        se = 2.5 * np.sqrt(2.0 / 200_000)
        assert abs(sample[:, 0].var() - 2.5) < 4.0 * se

    def test_mean_recovery(self):
        mean = np.array([5.0, -3.0])
        cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        sample = sample_mvn(mean, cov, RngHandle(115), size=200_000)
        for j in range(2):
            se = np.sqrt(cov[j, j] / 200_000)
            assert abs(sample[:, j].mean() - mean[j]) < 3.0 * se

    def test_single_draw_shape(self):
        rng = RngHandle(116)
        value = sample_mvn(np.zeros(3), np.eye(3), rng)
        assert value.shape == (3,)

    def test_covariance_recovery(self):
        cov = np.array([[1.5, -0.4], [-0.4, 0.8]])
        sample = sample_mvn(np.zeros(2), cov, RngHandle(116), size=500_000)
        assert np.allclose(np.cov(sample.T), cov, atol=0.01)

    def test_asymmetry_is_repaired_once(self):
        cov = np.array([[1.0, 0.3 + 1e-13], [0.3, 1.0]])
        value = sample_mvn(np.zeros(2), cov, RngHandle(117))
        assert np.all(np.isfinite(value))

    def test_non_spd_raises_with_condition(self):
        cov = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
        with pytest.raises(NumericalError, match="condition"):
            sample_mvn(np.zeros(2), cov, RngHandle(118))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sample_mvn(np.zeros(3), np.eye(2), RngHandle(0))


class TestDeterminism:
    def test_equal_seeds_equal_streams(self):
        for maker in (
            lambda r: sample_truncated_normal(
                np.linspace(-3, 3, 500), np.full(500, 2.0), TruncationSide.NON_NEGATIVE, r
            ),
            lambda r: sample_gig_half(np.linspace(0.0, 5.0, 500), 1.7, r),
            lambda r: sample_mvn(np.array([1.0, 2.0]), np.array([[2.0, 0.5], [0.5, 1.0]]), r),
        ):
            a = maker(RngHandle(987654321))
            b = maker(RngHandle(987654321))
            np.testing.assert_array_equal(a, b)

    def test_distinct_seeds_differ(self):
        a = sample_gig_half(np.ones(100), 1.0, RngHandle(1))
        b = sample_gig_half(np.ones(100), 1.0, RngHandle(2))
        assert not np.array_equal(a, b)

    def test_subseed_derivation_deterministic(self):
        assert derive_subseed(42, 3) == derive_subseed(42, 3)
        assert derive_subseed(42, 3) != derive_subseed(42, 4)
        assert derive_subseed(42, 3) != derive_subseed(43, 3)

    def test_seed_domain(self):
        with pytest.raises(ValueError):
            RngHandle(-1)
        with pytest.raises(ValueError):
            RngHandle(2**64)
