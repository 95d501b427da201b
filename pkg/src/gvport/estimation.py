"""ARMA fitting by conditional sum of squares.

The optimizer searches an unconstrained space: each coefficient block (AR,
MA) is parameterized by partial autocorrelations in (-1, 1) via tanh, then
mapped to polynomial coefficients by the Levinson step-up recursion.  Every
point the optimizer can reach is stationary and invertible, so no penalty
terms or constraint handling are needed.  The mean is the sample mean
(plug-in), not jointly estimated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .arma import ArmaSpec, check_admissible, require_admissible
from .diagnostics import durbin_levinson_partials


@dataclass(frozen=True)
class FittedModel:
    """CSS fit: estimated spec, residuals, objective value, optimizer status."""

    spec: ArmaSpec
    residuals: np.ndarray
    css: float
    converged: bool
    iterations: int
    n: int


@dataclass(frozen=True)
class FitOptions:
    """Knobs for fit_arma; defaults match the package-wide conventions."""

    max_restarts: int = 3
    restart_seed: int = 20060619
    xatol: float = 1e-8
    fatol: float = 1e-10
    max_iter_factor: int = 600


def pacf_to_coeffs(pacf) -> np.ndarray:
    """Levinson step-up: partial autocorrelations in (-1,1) to coefficients.

    The result is always an admissible polynomial vector (all roots outside
    the unit circle).
    """
    pacf = np.asarray(pacf, dtype=float)
    k = pacf.size
    a = np.zeros(k)
    for j in range(k):
        pj = pacf[j]
        if j:
            a[:j] = a[:j] - pj * a[j - 1 :: -1]
        a[j] = pj
    return a


def coeffs_to_pacf(coeffs) -> np.ndarray:
    """Inverse of pacf_to_coeffs (Levinson step-down).

    Requires an admissible coefficient vector; raises ValueError when a
    step-down stage leaves (-1, 1).
    """
    a = np.array(coeffs, dtype=float)
    k = a.size
    pacf = np.zeros(k)
    for j in range(k - 1, -1, -1):
        pj = a[j]
        if not -1.0 < pj < 1.0:
            raise ValueError(f"coefficient vector is not admissible (stage {j + 1})")
        pacf[j] = pj
        if j:
            a[:j] = (a[:j] + pj * a[j - 1 :: -1]) / (1.0 - pj * pj)
    return pacf


def css_residuals(series, spec: ArmaSpec) -> np.ndarray:
    """Conditional-sum-of-squares residual recursion.

    a_t = x_t - sum phi_i x_{t-i} + sum theta_j a_{t-j} on the mean-centered
    series, with zero presample values; all n residuals are returned,
    including the presample-contaminated leading ones.
    """
    require_admissible(spec)
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if x.size <= spec.p + spec.q:
        raise ValueError(f"series length {x.size} too short for ARMA({spec.p},{spec.q})")
    b = np.concatenate(([1.0], -np.asarray(spec.ar)))
    den = np.concatenate(([1.0], -np.asarray(spec.ma)))
    return lfilter(b, den, x - spec.mean)


def _sample_pacf(series, p: int) -> np.ndarray:
    """First p sample partial autocorrelations (Yule-Walker start values)."""
    x = np.asarray(series, dtype=float) - np.mean(series)
    denom = np.dot(x, x)
    r = np.array([np.dot(x[k:], x[:-k]) / denom for k in range(1, p + 1)])
    try:
        partials, _ = durbin_levinson_partials(r)
    except ValueError:
        partials = np.clip(r, -0.9, 0.9)
    return np.clip(partials, -0.95, 0.95)


def fit_arma(series, p: int, q: int, options: FitOptions = FitOptions()) -> FittedModel:
    """Minimize the conditional sum of squares over the admissible region.

    Start values: Yule-Walker partials for the AR block, zeros for the MA
    block; on non-convergence the start is perturbed and the search rerun
    (up to options.max_restarts), keeping the best objective seen.  The
    innovation variance estimate is CSS/n.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = x.size
    if p < 0 or q < 0:
        raise ValueError("orders must be nonnegative")
    if n < max(30, 5 * (p + q)):
        raise ValueError(f"series length {n} below the fitting minimum {max(30, 5 * (p + q))}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    mu = float(np.mean(x))
    xc = x - mu
    if np.dot(xc, xc) == 0.0:
        raise ValueError("series is constant; nothing to fit")

    if p + q == 0:
        sigma2 = float(np.dot(xc, xc) / n)
        spec = ArmaSpec(ar=(), ma=(), sigma2=sigma2, mean=mu)
        return FittedModel(spec=spec, residuals=xc.copy(), css=float(np.dot(xc, xc)),
                           converged=True, iterations=0, n=n)

    def unpack(z):
        # clip keeps the implied roots safely off the unit circle
        g = np.clip(np.tanh(z), -0.99999, 0.99999)
        phi = pacf_to_coeffs(g[:p]) if p else np.array([])
        theta = pacf_to_coeffs(g[p:]) if q else np.array([])
        return phi, theta

    def objective(z):
        phi, theta = unpack(z)
        b = np.concatenate(([1.0], -phi))
        den = np.concatenate(([1.0], -theta))
        a = lfilter(b, den, xc)
        val = np.dot(a, a) / n
        return val if np.isfinite(val) else 1e300

    start = np.zeros(p + q)
    if p:
        start[:p] = np.arctanh(_sample_pacf(x, p))
    rng = np.random.default_rng(options.restart_seed)
    maxiter = options.max_iter_factor * (p + q)

    best = None
    iterations = 0
    for attempt in range(1 + options.max_restarts):
        z0 = start if attempt == 0 else start + rng.normal(0.0, 0.5, size=p + q)
        res = minimize(objective, z0, method="Nelder-Mead",
                       options={"xatol": options.xatol, "fatol": options.fatol,
                                "maxiter": maxiter, "maxfev": 2 * maxiter})
        iterations += res.nit
        if best is None or res.fun < best.fun:
            best = res
        if res.success:
            break
    converged = bool(best.success)

    phi, theta = unpack(best.x)
    b = np.concatenate(([1.0], -phi))
    den = np.concatenate(([1.0], -theta))
    resid = lfilter(b, den, xc)
    css = float(np.dot(resid, resid))
    spec = ArmaSpec(ar=tuple(phi), ma=tuple(theta), sigma2=max(css / n, 1e-300), mean=mu)
    # tanh keeps the search inside the admissible region by construction
    assert check_admissible(spec), "fit produced an inadmissible spec"
    return FittedModel(spec=spec, residuals=resid, css=css,
                       converged=converged, iterations=int(iterations), n=n)
