"""Random-series generation: null-model ARMA plus the power-study alternatives.

Every generator takes an RngStream, a deterministic (master_seed, key)
handle on an independent substream, so replicates can run on any number of
workers and still produce identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

from .arma import ArmaSpec, poly_root_moduli, require_admissible

# Burn-in: long enough that start-up transients sit below numerical noise.
BURN_IN_FLOOR = 200
BURN_IN_TOL = 1e-10
BURN_IN_CAP = 100_000


@dataclass(frozen=True)
class RngStream:
    """Deterministic handle on one independent random substream.

    Streams are keyed by (master_seed, spawn path); distinct keys give
    statistically independent PCG64DXSM substreams.  `substream(j)` extends
    the path, which is how nested simulation (outer replicate, inner
    replicate, retry) stays deterministic under any scheduling.
    """

    master_seed: int
    stream_index: int = 0
    parent_key: tuple = ()

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    @property
    def key(self) -> tuple:
        return self.parent_key + (self.stream_index,)

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index, parent_key=self.key)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64DXSM(ss))


@dataclass(frozen=True)
class GarchSpec:
    """GARCH(r, s) parameters: variance intercept, ARCH and GARCH coefficients."""

    omega: float
    alpha: tuple = ()
    beta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(v) for v in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(float(v) for v in np.atleast_1d(self.beta)))
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive")
        if any(v < 0 for v in self.alpha) or any(v < 0 for v in self.beta):
            raise ValueError("alpha and beta coefficients must be nonnegative")
        if self.persistence >= 1.0:
            raise ValueError(
                f"sum(alpha) + sum(beta) = {self.persistence} must be < 1 "
                f"for covariance stationarity"
            )

    @property
    def persistence(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)


@dataclass(frozen=True)
class FractionalNoiseSpec:
    """Long-memory Gaussian noise with memory parameter d, |d| < 1/2."""

    d: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.d) and abs(self.d) < 0.5):
            raise ValueError(f"need |d| < 0.5, got d={self.d}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError("sigma2 must be positive")


def _geometric_burn_in(decay: float, floor_extra: int = 0) -> int:
    """Burn-in long enough that decay^M < BURN_IN_TOL, floored and capped."""
    if decay <= 0.0:
        m = 0
    else:
        m = int(math.ceil(math.log(BURN_IN_TOL) / math.log(decay)))
    return min(max(BURN_IN_FLOOR, m, floor_extra), BURN_IN_CAP)


def arma_burn_in(spec: ArmaSpec) -> int:
    if spec.p == 0:
        return _geometric_burn_in(0.0, floor_extra=spec.q + 1)
    r = float(np.min(poly_root_moduli(spec.ar)))
    return _geometric_burn_in(1.0 / r, floor_extra=spec.q + 1)


def simulate_arma(spec: ArmaSpec, n: int, rng: RngStream) -> np.ndarray:
    """Gaussian realization of the ARMA spec, length n, mean added.

    A stationary start is approximated by discarding a burn-in segment
    sized from the slowest AR root (transient below 1e-10).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    require_admissible(spec)
    burn = arma_burn_in(spec)
    a = rng.generator().standard_normal(n + burn) * math.sqrt(spec.sigma2)
    b = np.concatenate(([1.0], -np.asarray(spec.ma)))
    den = np.concatenate(([1.0], -np.asarray(spec.ar)))
    x = lfilter(b, den, a)
    return x[burn:] + spec.mean


def simulate_garch(spec: GarchSpec, n: int, rng: RngStream) -> np.ndarray:
    """GARCH recursion sigma2_t = omega + sum a_i e2_{t-i} + sum b_j s2_{t-j}.

    Presample squared shocks and variances start at the unconditional
    variance; burn-in length follows the persistence sum(alpha)+sum(beta).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    burn = _geometric_burn_in(spec.persistence)
    r, s = len(spec.alpha), len(spec.beta)
    alpha = np.asarray(spec.alpha)
    beta = np.asarray(spec.beta)
    total = n + burn
    z = rng.generator().standard_normal(total)
    if r == 0 and s == 0:
        return math.sqrt(spec.omega) * z[burn:]
    v0 = spec.unconditional_variance
    lead = max(r, s)
    eps2 = np.full(total + lead, v0)
    sig2 = np.full(total + lead, v0)
    eps = np.empty(total + lead)
    for t in range(lead, total + lead):
        v = spec.omega
        if r:
            v += np.dot(alpha, eps2[t - r : t][::-1])
        if s:
            v += np.dot(beta, sig2[t - s : t][::-1])
        sig2[t] = v
        eps[t] = math.sqrt(v) * z[t - lead]
        eps2[t] = eps[t] * eps[t]
    return eps[lead + burn :]


def fn_autocorrelation(d: float, k: int) -> float:
    """Autocorrelation rho(k) of the long-memory noise: rho(0)=1,
    rho(k) = rho(k-1) (k-1+d)/(k-d)."""
    if abs(d) >= 0.5:
        raise ValueError(f"need |d| < 0.5, got d={d}")
    if k < 0:
        raise ValueError("lag must be >= 0")
    rho = 1.0
    for j in range(1, k + 1):
        rho *= (j - 1 + d) / (j - d)
    return rho


def fn_autocorrelations(d: float, max_lag: int) -> np.ndarray:
    """rho(0..max_lag) via the ratio recursion (vectorized cumulative product)."""
    if abs(d) >= 0.5:
        raise ValueError(f"need |d| < 0.5, got d={d}")
    if max_lag == 0:
        return np.ones(1)
    j = np.arange(1, max_lag + 1)
    return np.concatenate(([1.0], np.cumprod((j - 1 + d) / (j - d))))


def fn_variance(spec: FractionalNoiseSpec) -> float:
    """Process variance sigma2 * Gamma(1-2d) / Gamma(1-d)^2."""
    d = spec.d
    return spec.sigma2 * math.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))


def simulate_fractional_noise(spec: FractionalNoiseSpec, n: int, rng: RngStream) -> np.ndarray:
    """Exact Gaussian sample by sequential conditional draws.

    The Durbin-Levinson recursion supplies the one-step prediction
    coefficients and innovation variances from the theoretical
    autocorrelations, so no burn-in is needed: x_t is drawn from its exact
    conditional law given x_1..x_{t-1}.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.generator().standard_normal(n)
    gamma0 = fn_variance(spec)
    if spec.d == 0.0:
        return math.sqrt(gamma0) * z
    rho = fn_autocorrelations(spec.d, n - 1) if n > 1 else np.ones(1)
    x = np.empty(n)
    x[0] = math.sqrt(gamma0) * z[0]
    if n == 1:
        return x
    phi = np.empty(n - 1)
    phi[0] = rho[1]
    v = 1.0 - rho[1] ** 2
    x[1] = phi[0] * x[0] + math.sqrt(gamma0 * v) * z[1]
    for t in range(2, n):
        # reflection coefficient at order t, then one-step coefficient update
        pk = (rho[t] - np.dot(phi[: t - 1], rho[t - 1 : 0 : -1])) / v
        phi[: t - 1] -= pk * phi[t - 2 :: -1]
        phi[t - 1] = pk
        v *= 1.0 - pk * pk
        mean = np.dot(phi[:t], x[t - 1 :: -1])
        x[t] = mean + math.sqrt(gamma0 * v) * z[t]
    return x
