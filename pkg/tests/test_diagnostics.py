"""Diagnostics tests: residual ACF, portmanteau statistics, Toeplitz determinant."""
import numpy as np
import pytest
from scipy.linalg import toeplitz

from gvport.diagnostics import (
    NotPositiveDefinite,
    NotPositiveDefiniteError,
    ResidualAcf,
    box_pierce,
    d_hat,
    d_mod,
    durbin_levinson_partials,
    ljung_box,
    residual_acf,
    toeplitz_corr_det,
)


def dense_det_oracle(r):
    """Brute-force determinant of the (m+1) x (m+1) Toeplitz correlation matrix."""
    row = np.concatenate(([1.0], np.asarray(r, float)))
    return float(np.linalg.det(toeplitz(row)))


def acf_from_partials(partials):
    """Forward Durbin-Levinson: valid autocorrelation sequence from partials in (-1,1)."""
    partials = np.asarray(partials, float)
    m = partials.size
    rho = np.zeros(m)
    phi = np.zeros(m)
    v = 1.0
    for k in range(1, m + 1):
        pk = partials[k - 1]
        if k == 1:
            rho[0] = pk
        else:
            rho[k - 1] = pk * v + np.dot(phi[: k - 1], rho[k - 2 :: -1])
            phi[: k - 1] -= pk * phi[k - 2 :: -1]
        phi[k - 1] = pk
        v *= 1.0 - pk * pk
    return rho


class TestResidualAcf:
    def test_alternating(self):
        acf = residual_acf([1.0, -1.0, 1.0, -1.0], 1)
        assert acf.r[0] == pytest.approx(-0.75)

    def test_constant_nonzero(self):
        # no centering: numerator (n-1)c^2, denominator n c^2
        acf = residual_acf([2.0, 2.0, 2.0, 2.0], 1)
        assert acf.r[0] == pytest.approx(0.75)

    def test_zero_residuals_rejected(self):
        with pytest.raises(ValueError, match="identically zero"):
            residual_acf(np.zeros(10), 2)

    def test_m_bounds(self):
        with pytest.raises(ValueError):
            residual_acf(np.ones(5), 5)
        with pytest.raises(ValueError):
            residual_acf(np.ones(5), 0)

    def test_within_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.standard_normal(rng.integers(10, 200))
            acf = residual_acf(a, min(12, a.size - 1))
            assert np.all(np.abs(acf.r) <= 1.0)

    def test_toeplitz_nonneg_definite(self):
        # eq-(2)-style estimates always give a PSD correlation matrix
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = rng.standard_normal(60)
            acf = residual_acf(a, 12)
            row = np.concatenate(([1.0], acf.r))
            eig = np.linalg.eigvalsh(toeplitz(row))
            assert eig.min() >= -1e-10


class TestLjungBox:
    def test_zero_acf(self):
        value, p = ljung_box(ResidualAcf(np.zeros(3), 100, 3), 0)
        assert value.statistic == 0.0
        assert p == pytest.approx(1.0)

    def test_single_lag_value(self):
        value, _ = ljung_box(ResidualAcf(np.array([0.1]), 100, 1), 0)
        assert value.statistic == pytest.approx(100 * 102 * 0.01 / 99)

    def test_df_zero_error(self):
        acf = ResidualAcf(np.array([0.1, 0.05]), 100, 2)
        with pytest.raises(ValueError, match="m > fit_count"):
            ljung_box(acf, 2)
        value, p = ljung_box(acf, 2, pvalue=False)
        assert p is None and value.statistic > 0

    def test_box_pierce(self):
        acf = ResidualAcf(np.array([0.1, -0.2]), 50, 2)
        value, p = box_pierce(acf, 0)
        assert value.statistic == pytest.approx(50 * (0.01 + 0.04))
        assert 0 <= p <= 1


class TestToeplitzDet:
    def test_identity(self):
        det, partials = toeplitz_corr_det(ResidualAcf(np.zeros(4), 50, 4))
        assert det == pytest.approx(1.0)
        np.testing.assert_allclose(partials, 0.0)

    def test_single_lag(self):
        det, _ = toeplitz_corr_det(ResidualAcf(np.array([0.3]), 50, 1))
        assert det == pytest.approx(1 - 0.09)

    def test_hand_worked_m2(self):
        det, partials = toeplitz_corr_det(ResidualAcf(np.array([0.5, 0.25]), 50, 2))
        assert det == pytest.approx(0.5625)
        assert partials[1] == pytest.approx(0.0)

    def test_error_carries_lag_and_det(self):
        with pytest.raises(NotPositiveDefiniteError) as exc:
            durbin_levinson_partials(np.array([0.9, 0.1]))
        assert exc.value.lag == 2
        assert exc.value.det_so_far == pytest.approx(1 - 0.81)

    def test_matches_dense_oracle_from_residuals(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = rng.standard_normal(rng.integers(20, 120))
            m = int(rng.integers(1, 13))
            acf = residual_acf(a, m)
            det, _ = toeplitz_corr_det(acf)
            assert det == pytest.approx(dense_det_oracle(acf.r), rel=1e-10, abs=1e-13)

    def test_matches_dense_oracle_from_partials(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            m = int(rng.integers(1, 13))
            r = acf_from_partials(rng.uniform(-0.95, 0.95, size=m))
            det, _ = toeplitz_corr_det(ResidualAcf(r, 500, m))
            assert det == pytest.approx(dense_det_oracle(r), rel=1e-10, abs=1e-13)


class TestDhat:
    def test_zero(self):
        assert d_hat(ResidualAcf(np.zeros(5), 100, 5)).statistic == 0.0

    def test_single_lag(self):
        got = d_hat(ResidualAcf(np.array([0.2]), 100, 1))
        assert got.statistic == pytest.approx(100 * (1 - 0.96))

    def test_hand_worked_m2(self):
        got = d_hat(ResidualAcf(np.array([0.5, 0.25]), 100, 2))
        assert got.statistic == pytest.approx(100 * (1 - 0.5625**0.5))
        assert got.statistic == pytest.approx(25.0)

    def test_never_fails_on_genuine_residuals(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            a = rng.standard_normal(rng.integers(15, 80))
            m = int(rng.integers(1, min(14, a.size)))
            value = d_hat(residual_acf(a, m))
            assert value.statistic >= 0.0


class TestDmod:
    def test_zero(self):
        got = d_mod(ResidualAcf(np.zeros(5), 100, 5))
        assert got.statistic == 0.0

    def test_single_lag_inflation(self):
        got = d_mod(ResidualAcf(np.array([0.2]), 100, 1))
        rdd2 = (102.0 / 99.0) * 0.04
        assert got.statistic == pytest.approx(100 * rdd2, rel=1e-12)
        assert got.statistic == pytest.approx(4.12121, abs=1e-5)

    def test_not_positive_definite_case(self):
        r = np.zeros(10)
        r[9] = 0.9  # inflation factor (n+2)/(n-k) = 14/2 = 7 at k=10
        got = d_mod(ResidualAcf(r, 12, 10))
        assert isinstance(got, NotPositiveDefinite)
        assert got.lag == 10

    def test_monotone_inflation(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = rng.standard_normal(40)
            acf = residual_acf(a, 10)
            k = np.arange(1, 11)
            inflated = np.abs(acf.r) * np.sqrt((acf.n + 2.0) / (acf.n - k))
            assert np.all(inflated >= np.abs(acf.r))
            assert np.all((inflated > np.abs(acf.r)) | (acf.r == 0.0))

    def test_failure_rate_substantial_for_short_series(self):
        # configured short-series setup: white-noise fit, n=30, m=24
        from gvport.arma import ArmaSpec
        from gvport.estimation import fit_arma
        from gvport.generators import RngStream, simulate_arma

        fails = 0
        trials = 300
        for t in range(trials):
            x = simulate_arma(ArmaSpec(), 30, RngStream(5150, t))
            fit = fit_arma(x, 0, 0)
            if isinstance(d_mod(residual_acf(fit.residuals, 24)), NotPositiveDefinite):
                fails += 1
        assert fails / trials > 0.10


class TestScaleInvariance:
    def test_exact_under_power_of_two_scaling(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal(80)
        acf = residual_acf(a, 8)
        q0, _ = ljung_box(acf, 0)
        d0 = d_hat(acf)
        dd0 = d_mod(acf)
        for c in (2.0, 0.25, -4.0):
            acf_c = residual_acf(c * a, 8)
            np.testing.assert_array_equal(acf_c.r, acf.r)
            assert ljung_box(acf_c, 0)[0].statistic == q0.statistic
            assert d_hat(acf_c).statistic == d0.statistic
            assert d_mod(acf_c).statistic == dd0.statistic
