"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 6-9 carry multi-minute runtimes and are marked slow; the default
`pytest` run still executes them (markers are documentation and selection
handles, not skips).
"""
import numpy as np
import pytest
from scipy import stats
from scipy.linalg import toeplitz

from gvport.arma import ArmaSpec
from gvport.asymptotic import (
    InfeasibleGammaError,
    gamma_distortion,
    gamma_params,
    imhof_cdf,
    lambda_spectrum,
)
from gvport.diagnostics import (
    NotPositiveDefinite,
    ResidualAcf,
    d_hat,
    d_mod,
    residual_acf,
    toeplitz_corr_det,
)
from gvport.generators import RngStream, simulate_arma
from gvport.mc import mc_portmanteau_test
from gvport.studies import load_study_config, run_convergence_study, run_power_study, run_size_study

THREADS = 2

# Published gamma-distortion table: ARMA(1,1), m=10, nominal 5%.
# Rows are theta, columns phi over (-0.9,-0.6,-0.3,0.3,0.6,0.9); None marks the
# unidentifiable diagonal.  The (theta=-0.3, phi=-0.6) entry prints 0.692 in the
# source but is a transposition of 0.069 (checked against its symmetric partner).
GRID = (-0.9, -0.6, -0.3, 0.3, 0.6, 0.9)
TABLE_DISTORTION = {
    -0.9: (None, 0.105, 0.091, 0.083, 0.085, 0.109),
    -0.6: (0.105, None, 0.069, 0.063, 0.065, 0.085),
    -0.3: (0.091, 0.069, None, 0.060, 0.063, 0.083),
    0.3: (0.083, 0.063, 0.060, None, 0.069, 0.091),
    0.6: (0.085, 0.065, 0.063, 0.069, None, 0.105),
    0.9: (0.108, 0.085, 0.083, 0.091, 0.105, None),
}


def test_criterion_1_gamma_distortion_table(acceptance_log):
    worst = 0.0
    for theta, row in TABLE_DISTORTION.items():
        for phi, want in zip(GRID, row):
            if want is None:
                continue
            got = gamma_distortion(ArmaSpec(ar=(phi,), ma=(theta,)), 10, 0.05)
            worst = max(worst, abs(got - want))
    ok = worst <= 0.002
    acceptance_log(1, "gamma-distortion table (ARMA(1,1), m=10, 5%) within +-0.002",
                   ok, f"worst |diff|={worst:.4f}")
    assert ok


def test_criterion_2_imhof_sampling_oracle(acceptance_log):
    rng = np.random.default_rng(20241105)
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 21))
        lam = np.sort(rng.uniform(0.02, 1.0, size=m))[::-1]
        draws = (rng.standard_normal((1_000_000, m)) ** 2) @ lam
        hi = float(np.quantile(draws, 0.999))
        xs = np.linspace(hi / 50.0, hi, 50)
        draws.sort()
        emp = np.searchsorted(draws, xs, side="right") / draws.size
        got = np.array([imhof_cdf(x, lam) for x in xs])
        worst = max(worst, float(np.max(np.abs(got - emp))))
    chi_ok = (
        abs(imhof_cdf(stats.chi2.ppf(0.95, 1), np.array([1.0])) - 0.95) < 1e-6
        and abs(imhof_cdf(stats.chi2.ppf(0.95, 2), np.array([1.0, 1.0])) - 0.95) < 1e-6
    )
    ok = worst < 0.005 and chi_ok
    acceptance_log(2, "Imhof CDF vs 1e6-draw empirical CDF (20 spectra) and chi2 quantiles",
                   ok, f"sup|diff|={worst:.4f}, chi2 checks={'ok' if chi_ok else 'FAIL'}")
    assert ok


def test_criterion_3_white_noise_spectrum_identity(acceptance_log):
    exact = True
    for m in range(1, 51):
        lam = lambda_spectrum(ArmaSpec(), m).lambdas
        want = (m - np.arange(1, m + 1) + 1.0) / m
        exact &= np.array_equal(lam, want)
    lam_proj = lambda_spectrum(ArmaSpec(ar=(0.5,)), 2, covariance="projection").lambdas
    proj_ok = np.allclose(lam_proj, [0.6, 0.0], atol=1e-12)
    # information-matrix route for the record: with J = 1/(1-0.25) = 4/3 the
    # 2x2 symmetric form has trace 0.65625 and det 0.03125
    lam_info = lambda_spectrum(ArmaSpec(ar=(0.5,)), 2).lambdas
    tr, det = 0.65625, 0.03125
    lam_closed = np.array([(tr + np.sqrt(tr**2 - 4 * det)) / 2,
                           (tr - np.sqrt(tr**2 - 4 * det)) / 2])
    info_ok = np.allclose(lam_info, lam_closed, atol=1e-10)
    ok = exact and proj_ok and info_ok
    acceptance_log(3, "white-noise spectrum exact for m=1..50; AR(1) m=2 projection {0.6, 0}",
                   ok, f"wn exact={exact}, projection={proj_ok}, information-form={info_ok}")
    assert ok


def test_criterion_4_gamma_feasibility_boundary(acceptance_log):
    ok = True
    for fit_count in range(0, 7):
        for m in range(1, 60):
            den = 2 * (m + 1) * (2 * m + 1) - 12 * m * fit_count
            num = (m + 1) - 2 * fit_count
            should_fail = den <= 0 or num <= 0
            try:
                gamma_params(m, fit_count)
                failed = False
            except InfeasibleGammaError:
                failed = True
            ok &= failed == should_fail
    try:
        gamma_params(7, 3)
        msg_ok = False
    except InfeasibleGammaError as err:
        msg_ok = "minimal feasible m is 8" in str(err)
    ok &= msg_ok
    acceptance_log(4, "gamma feasibility errors exactly when numerator/denominator <= 0",
                   ok, f"minimal m message for p+q=3: {'ok' if msg_ok else 'FAIL'}")
    assert ok


def test_criterion_5_toeplitz_determinant_oracle(acceptance_log):
    rng = np.random.default_rng(55)
    worst = 0.0
    for trial in range(1000):
        n = int(rng.integers(20, 150))
        m = int(rng.integers(1, 13))
        acf = residual_acf(rng.standard_normal(n), m)
        det, partials = toeplitz_corr_det(acf)
        dense = float(np.linalg.det(toeplitz(np.concatenate(([1.0], acf.r)))))
        scale = max(abs(dense), 1e-300)
        worst = max(worst, abs(det - dense) / scale)
        assert np.all(np.abs(partials) < 1.0)
    det_ok = worst <= 1e-10

    # constructed inflation failures return the marker, never raise
    npd_ok = True
    r = np.zeros(10)
    r[9] = 0.9
    out = d_mod(ResidualAcf(r, 12, 10))
    npd_ok &= isinstance(out, NotPositiveDefinite) and out.lag == 10
    for _ in range(50):
        m = int(rng.integers(4, 12))
        n = m + int(rng.integers(2, 5))
        acf = residual_acf(rng.standard_normal(n), m)
        result = d_mod(acf)
        npd_ok &= isinstance(result, NotPositiveDefinite) or result.statistic >= 0.0

    # the un-inflated statistic never fails on genuine residual autocorrelations
    dhat_ok = True
    for _ in range(1000):
        n = int(rng.integers(15, 100))
        m = int(rng.integers(1, min(13, n)))
        dhat_ok &= d_hat(residual_acf(rng.standard_normal(n), m)).statistic >= 0.0

    ok = det_ok and npd_ok and dhat_ok
    acceptance_log(5, "Durbin-Levinson det vs dense oracle (1e3 cases, rel 1e-10); NPD handling",
                   ok, f"worst rel diff={worst:.2e}")
    assert ok


@pytest.mark.slow
def test_criterion_6_exact_mc_validity_oracle_mode(acceptance_log):
    spec = ArmaSpec(ar=(0.5,))
    trials = 10_000
    rejections = 0
    for t in range(trials):
        root = RngStream(60609, t)
        x = simulate_arma(spec, 60, root.substream(0))
        res = mc_portmanteau_test(x, 1, 0, 5, 19, master_seed=60609,
                                  base_stream=root, known_spec=spec)
        rejections += res.p_value <= 0.05
    rate = rejections / trials
    band = 2.576 * np.sqrt(0.05 * 0.95 / trials)
    ok = abs(rate - 0.05) < band
    acceptance_log(6, "oracle-mode MC rejection rate at alpha=0.05, N=19 (1e4 trials)",
                   ok, f"rate={rate:.4f}, 99% band=0.05+-{band:.4f}")
    assert ok


@pytest.mark.slow
def test_criterion_7_size_study_reduced_scale(acceptance_log):
    cfg = load_study_config({
        "study": "size",
        "models": [{"type": "arma", "ar": [phi], "id": f"ar1_{phi}"} for phi in (0.1, 0.5, 0.9)],
        "fit": {"p": 1, "q": 0},
        "m": [10], "n": [200], "R": 500, "N": 99,
        "levels": [0.05], "statistics": ["d_hat"], "seed": 733,
    })
    rep = run_size_study(cfg, threads=THREADS)
    sizes = {r["model_id"]: r["estimate"] for r in rep.rows}
    ok = all(0.03 <= v <= 0.07 for v in sizes.values())
    acceptance_log(7, "empirical size (AR(1) MC test, n=200, m=10, R=500, N=99) in [0.03, 0.07]",
                   ok, ", ".join(f"{k}={v:.3f}" for k, v in sizes.items()))
    assert ok


@pytest.mark.slow
def test_criterion_8_convergence_trend(acceptance_log):
    cfg = load_study_config({
        "study": "convergence",
        "models": [{"type": "arma", "ar": [0.4], "id": "ar1_0.4"}],
        "fit": {"p": 1, "q": 0},
        "m": [50], "n": [100, 500, 1000], "R": 2000,
        "levels": [0.05], "seed": 844,
    })
    rep = run_convergence_study(cfg, threads=THREADS)
    by_n = {r["n"]: r["estimate"] for r in rep.rows}
    tail = [by_n[100], by_n[500], by_n[1000]]
    ok = tail[0] > 0.30 and tail[2] < 0.10 and tail[0] > tail[1] > tail[2]
    acceptance_log(8, "asymptotic tail prob at empirical 95% quantile decreases toward 0.05",
                   ok, f"n=100: {tail[0]:.3f}, n=500: {tail[1]:.3f}, n=1000: {tail[2]:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_9_power_ordering_reduced_scale(acceptance_log):
    cfg = load_study_config({
        "study": "power",
        "models": [{"type": "fractional_noise", "d": 0.3, "id": "fn_d0.3"}],
        "fit": {"p": 1, "q": 0},
        "m": [20, 40], "n": [512], "R": 300, "N": 199,
        "levels": [0.05], "statistics": ["d_hat", "ljung_box"], "seed": 955,
    })
    rep = run_power_study(cfg, threads=THREADS)
    power = {(r["study"], r["m"]): r["estimate"] for r in rep.rows}
    paper = {("power:mc_d_hat", 20): 0.851, ("power:mc_ljung_box", 20): 0.804,
             ("power:mc_d_hat", 40): 0.778, ("power:mc_ljung_box", 40): 0.708}
    order_ok = all(power[("power:mc_d_hat", m)] > power[("power:mc_ljung_box", m)]
                   for m in (20, 40))
    close_ok = all(abs(power[k] - v) <= 0.10 for k, v in paper.items())
    ok = order_ok and close_ok
    detail = ", ".join(f"m={m}: D={power[('power:mc_d_hat', m)]:.3f}/"
                       f"Q={power[('power:mc_ljung_box', m)]:.3f}" for m in (20, 40))
    acceptance_log(9, "paired MC power (FN d=0.3, n=512): D beats Q; both within 0.10 of source",
                   ok, detail)
    assert ok


def test_criterion_10_study_determinism_across_thread_counts(acceptance_log):
    cfg = load_study_config({
        "study": "size",
        "models": [{"type": "arma", "ar": [0.5], "id": "ar1"}],
        "fit": {"p": 1, "q": 0},
        "m": [5, 8], "n": [80], "R": 16, "N": 19,
        "levels": [0.05, 0.1], "statistics": ["d_hat", "ljung_box"], "seed": 1066,
    })
    texts = {t: run_size_study(cfg, threads=t).csv_text() for t in (1, 4, 8)}
    ok = texts[1] == texts[4] == texts[8]
    acceptance_log(10, "byte-identical study CSV at thread counts 1, 4, 8",
                   ok, f"{len(texts[1].splitlines()) - 1} rows compared")
    assert ok
