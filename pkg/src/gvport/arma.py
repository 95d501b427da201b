"""ARMA model specification, admissibility checks, and linear-process algebra.

Sign convention used throughout the package: both lag polynomials carry
minus signs,

    (1 - phi_1 B - ... - phi_p B^p) (X_t - mu) = (1 - theta_1 B - ... - theta_q B^q) a_t,

so an MA(1) with theta_1 = 0.4 has lag-1 autocovariance -0.4 * sigma2.
Ecosystems differ on the MA sign; everything here (simulation, residual
recursions, autocovariances, asymptotic matrices) assumes this one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Margin on root moduli: |root| >= 1 + ROOT_MARGIN counts as admissible.
# Boundary-hugging polynomials degrade burn-in and the CSS recursion.
ROOT_MARGIN = 1e-8


class NotAdmissibleError(ValueError):
    """A coefficient polynomial has a root on or inside the unit circle."""


def _as_coeff_array(x) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.ndim != 1:
        raise ValueError("coefficient vector must be one-dimensional")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("coefficient vector must be finite")
    return a


@dataclass(frozen=True)
class ArmaSpec:
    """ARMA(p, q) parameter set: AR and MA coefficients, innovation variance, mean."""

    ar: tuple = ()
    ma: tuple = ()
    sigma2: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(v) for v in _as_coeff_array(self.ar)))
        object.__setattr__(self, "ma", tuple(float(v) for v in _as_coeff_array(self.ma)))
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not np.isfinite(self.mean):
            raise ValueError("mean must be finite")

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)

    @property
    def order(self) -> tuple[int, int]:
        return (self.p, self.q)


def poly_root_moduli(coeffs) -> np.ndarray:
    """Moduli of the roots of 1 - c1 z - ... - ck z^k.

    Degree 1 and 2 use closed forms; higher degrees use companion-matrix
    eigenvalues (trailing zero coefficients are trimmed first).
    """
    c = _as_coeff_array(coeffs)
    # trailing zeros lower the effective degree
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.array([])
    c = c[: nz[-1] + 1]
    k = c.size
    if k == 1:
        return np.array([abs(1.0 / c[0])])
    if k == 2:
        # roots of c2 z^2 + c1 z - 1 = 0; the cancellation-free form keeps the
        # large root accurate when c2 is tiny
        c1, c2 = c
        disc = c1 * c1 + 4.0 * c2
        if disc >= 0.0:
            sq = math.sqrt(disc)
            qq = -0.5 * (c1 + math.copysign(sq, c1) if c1 != 0.0 else sq)
            return np.abs(np.array([qq / c2, -1.0 / qq]))
        # complex pair: |root|^2 = |product of roots| = 1/|c2|
        mod = math.sqrt(1.0 / abs(c2))
        return np.array([mod, mod])
    # Companion-matrix eigenvalues of the REVERSED polynomial
    # w^k - c1 w^{k-1} - ... - ck, which is monic and therefore stable even
    # when the trailing coefficient ck is tiny (w = 1/z; w -> 0 is a root at
    # infinity).
    rev = np.concatenate(([1.0], -c))
    w = np.abs(np.roots(rev))
    with np.errstate(divide="ignore"):
        return np.where(w > 0.0, 1.0 / w, np.inf)


def is_admissible_poly(coeffs, margin: float = ROOT_MARGIN) -> bool:
    """True iff all roots of 1 - c1 z - ... - ck z^k have modulus >= 1 + margin."""
    moduli = poly_root_moduli(coeffs)
    if moduli.size == 0:
        return True
    return bool(np.min(moduli) >= 1.0 + margin)


def check_admissible(spec: ArmaSpec) -> bool:
    """True iff the spec is stationary (AR roots) and invertible (MA roots)."""
    return is_admissible_poly(spec.ar) and is_admissible_poly(spec.ma)


def require_admissible(spec: ArmaSpec) -> None:
    if not is_admissible_poly(spec.ar):
        raise NotAdmissibleError(f"AR polynomial is not stationary: phi={spec.ar}")
    if not is_admissible_poly(spec.ma):
        raise NotAdmissibleError(f"MA polynomial is not invertible: theta={spec.ma}")


def psi_weights_reciprocal(coeffs, count: int) -> np.ndarray:
    """First `count` series coefficients of 1 / (1 - c1 B - ... - ck B^k).

    psi_0 = 1, psi_j = sum_{i=1}^{min(j,k)} c_i psi_{j-i}.  The polynomial
    must have all roots outside the unit circle.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    c = _as_coeff_array(coeffs)
    if not is_admissible_poly(c):
        raise NotAdmissibleError(f"polynomial has a root inside/on the unit circle: {tuple(c)}")
    k = c.size
    psi = np.zeros(count)
    psi[0] = 1.0
    for j in range(1, count):
        i = min(j, k)
        psi[j] = np.dot(c[:i], psi[j - i : j][::-1])
    return psi


def arma_psi_weights(spec: ArmaSpec, count: int) -> np.ndarray:
    """MA(infinity) weights of the full transfer function theta(B)/phi(B)."""
    require_admissible(spec)
    if spec.p == 0:
        psi = np.zeros(count)
        psi[0] = 1.0
        eta = -np.asarray(spec.ma)
        upto = min(spec.q, count - 1)
        psi[1 : upto + 1] = eta[:upto]
        return psi
    psi_ar = psi_weights_reciprocal(spec.ar, count)
    if spec.q == 0:
        return psi_ar
    theta_poly = np.concatenate(([1.0], -np.asarray(spec.ma)))
    return np.convolve(psi_ar, theta_poly)[:count]


def theoretical_acvf(spec: ArmaSpec, max_lag: int) -> np.ndarray:
    """Autocovariances gamma(0..max_lag) of the stationary ARMA process.

    Solves the (p+1)-dimensional linear system tying gamma(0..p) to the
    transfer-function weights and sigma2, then extends by the AR recursion.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    require_admissible(spec)
    p, q, s2 = spec.p, spec.q, spec.sigma2
    phi = np.asarray(spec.ar)
    eta = np.concatenate(([1.0], -np.asarray(spec.ma)))  # eta_0..eta_q
    psi = arma_psi_weights(spec, q + 1)

    # b_k = sigma2 * sum_{j=k}^{q} eta_j psi_{j-k},  k = 0..q
    b = np.array([s2 * np.dot(eta[k:], psi[: q + 1 - k]) for k in range(q + 1)])

    # equations k = 0..p:  gamma(k) - sum_i phi_i gamma(|k-i|) = b_k (0 for k > q)
    A = np.zeros((p + 1, p + 1))
    rhs = np.zeros(p + 1)
    for k in range(p + 1):
        A[k, k] += 1.0
        for i in range(1, p + 1):
            A[k, abs(k - i)] -= phi[i - 1]
        rhs[k] = b[k] if k <= q else 0.0
    head = np.linalg.solve(A, rhs)

    gamma = np.zeros(max_lag + 1)
    upto = min(p, max_lag)
    gamma[: upto + 1] = head[: upto + 1]
    for k in range(p + 1, max_lag + 1):
        acc = b[k] if k <= q else 0.0
        if p:
            acc += np.dot(phi, gamma[k - p : k][::-1])
        gamma[k] = acc
    return gamma
