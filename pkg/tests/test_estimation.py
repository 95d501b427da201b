"""Estimation tests: CSS recursion, PACF transform, optimizer behavior."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvport.arma import ArmaSpec, check_admissible
from gvport.diagnostics import residual_acf
from gvport.estimation import (
    FitOptions,
    coeffs_to_pacf,
    css_residuals,
    fit_arma,
    pacf_to_coeffs,
)
from gvport.generators import RngStream, simulate_arma


class TestCssResiduals:
    def test_white_noise_is_centered_series(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        spec = ArmaSpec(mean=float(x.mean()))
        np.testing.assert_allclose(css_residuals(x, spec), x - x.mean())

    def test_ar1_recursion(self):
        got = css_residuals([1.0, 2.0, 3.0], ArmaSpec(ar=(0.5,), mean=0.0))
        np.testing.assert_allclose(got, [1.0, 1.5, 2.0])

    def test_ma1_recursion(self):
        got = css_residuals([1.0, 0.0, 0.0], ArmaSpec(ma=(0.5,), mean=0.0))
        np.testing.assert_allclose(got, [1.0, 0.5, 0.25])

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            css_residuals([1.0, 2.0], ArmaSpec(ar=(0.5,), ma=(0.1,)))

    def test_true_spec_residuals_are_white(self):
        spec = ArmaSpec(ar=(0.7,), ma=(-0.3,))
        x = simulate_arma(spec, 10_000, RngStream(0, 0))
        resid = css_residuals(x, ArmaSpec(ar=spec.ar, ma=spec.ma, mean=0.0))
        acf = residual_acf(resid, 10)
        assert np.all(np.abs(acf.r) < 3 / np.sqrt(10_000))


class TestPacfTransform:
    @settings(deadline=None, max_examples=100)
    @given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=6))
    def test_round_trip(self, pacf):
        coeffs = pacf_to_coeffs(pacf)
        back = coeffs_to_pacf(coeffs)
        np.testing.assert_allclose(back, pacf, atol=1e-9)

    @settings(deadline=None, max_examples=100)
    @given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=6))
    def test_always_admissible(self, pacf):
        coeffs = pacf_to_coeffs(pacf)
        assert check_admissible(ArmaSpec(ar=tuple(coeffs)))

    def test_order_one_is_identity(self):
        np.testing.assert_allclose(pacf_to_coeffs([0.6]), [0.6])

    def test_step_down_rejects_inadmissible(self):
        with pytest.raises(ValueError):
            coeffs_to_pacf([1.2])


class TestFitArma:
    def test_white_noise_order(self):
        rng = np.random.default_rng(1)
        x = 2.0 + 1.5 * rng.standard_normal(500)
        fit = fit_arma(x, 0, 0)
        assert fit.spec.ar == () and fit.spec.ma == ()
        assert fit.spec.mean == pytest.approx(x.mean())
        assert fit.spec.sigma2 == pytest.approx(np.mean((x - x.mean()) ** 2))
        assert fit.converged

    def test_ar1_recovery(self):
        x = simulate_arma(ArmaSpec(ar=(0.7,)), 2000, RngStream(2, 0))
        fit = fit_arma(x, 1, 0)
        se = np.sqrt((1 - 0.49) / 2000)
        assert fit.spec.ar[0] == pytest.approx(0.7, abs=3 * se)
        assert fit.converged

    def test_ma1_recovery(self):
        x = simulate_arma(ArmaSpec(ma=(0.6,)), 3000, RngStream(3, 0))
        fit = fit_arma(x, 0, 1)
        assert fit.spec.ma[0] == pytest.approx(0.6, abs=0.06)

    def test_arma21_recovery(self):
        spec = ArmaSpec(ar=(1.2, -0.5), ma=(0.4,))
        x = simulate_arma(spec, 4000, RngStream(4, 0))
        fit = fit_arma(x, 2, 1)
        np.testing.assert_allclose(fit.spec.ar, spec.ar, atol=0.1)
        np.testing.assert_allclose(fit.spec.ma, spec.ma, atol=0.12)

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            fit_arma(np.ones(100), 1, 0)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError, match="below the fitting minimum"):
            fit_arma(np.arange(20.0), 1, 0)

    def test_nonfinite_rejected(self):
        x = np.ones(100)
        x[3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            fit_arma(x, 0, 0)

    def test_fitted_always_admissible(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            x = rng.standard_normal(80)
            p, q = int(rng.integers(0, 3)), int(rng.integers(0, 2))
            fit = fit_arma(x, p, q)
            assert check_admissible(fit.spec)
            assert fit.residuals.size == 80

    def test_sigma2_is_css_over_n(self):
        x = simulate_arma(ArmaSpec(ar=(0.5,)), 400, RngStream(6, 0))
        fit = fit_arma(x, 1, 0)
        assert fit.spec.sigma2 == pytest.approx(fit.css / fit.n)

    def test_deterministic(self):
        x = simulate_arma(ArmaSpec(ar=(0.4,), ma=(0.2,)), 300, RngStream(7, 0))
        a = fit_arma(x, 1, 1)
        b = fit_arma(x, 1, 1)
        assert a.spec == b.spec

    def test_consistency_smoke(self):
        # median |phi_hat - phi| shrinks by ~sqrt(10) from n=200 to n=2000
        errs = {200: [], 2000: []}
        for n in errs:
            for rep in range(200):
                x = simulate_arma(ArmaSpec(ar=(0.6,)), n, RngStream(1000 + n, rep))
                fit = fit_arma(x, 1, 0)
                errs[n].append(abs(fit.spec.ar[0] - 0.6))
        ratio = np.median(errs[200]) / np.median(errs[2000])
        assert 2.0 <= ratio <= 5.0

    def test_options_restart_path(self):
        # tight iteration budget forces the restart loop to run
        x = simulate_arma(ArmaSpec(ar=(0.5,), ma=(-0.4,)), 200, RngStream(8, 0))
        opts = FitOptions(max_restarts=2, max_iter_factor=3)
        fit = fit_arma(x, 1, 1, opts)
        assert not fit.converged
        assert check_admissible(fit.spec)
