"""Standard normal primitives and the bridge covariance kernel.

The quantile uses Acklam's rational initializer polished by two Halley steps;
together with the erfc-based CDF this gives round-trips accurate to ~1e-15.
The compiled sampling kernel carries a C twin of `std_normal_quantile`; both
call libm erfc/exp/log/sqrt in the same order so results agree bit for bit.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import SpecError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)

# Acklam's minimax coefficients for the initial guess.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def std_normal_pdf(x):
    if isinstance(x, np.ndarray):
        return np.exp(-0.5 * x.astype(float) ** 2) / SQRT2PI
    return math.exp(-0.5 * x * x) / SQRT2PI


def std_normal_cdf(x):
    """Phi(x), absolute error at the 1e-16 level via erfc."""
    if isinstance(x, np.ndarray):
        from scipy.special import erfc
        return 0.5 * erfc(-x / SQRT2)
    return 0.5 * math.erfc(-x / SQRT2)


def log_std_normal_cdf(x: float) -> float:
    """log Phi(x), usable far into the left tail where Phi underflows."""
    if x >= -37.0:
        return math.log(0.5 * math.erfc(-x / SQRT2))
    # asymptotic expansion of the Mills ratio, x << 0
    r = 1.0 / (x * x)
    series = 1.0 - r + 3.0 * r * r - 15.0 * r ** 3
    return -0.5 * x * x - LOG_SQRT2PI - math.log(-x) + math.log(series)


def _acklam(p: float) -> float:
    # initial guess for p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def _quantile_half(p: float) -> float:
    # p in (0, 0.5]; two Halley steps against the erfc CDF
    x = _acklam(p)
    for _ in range(2):
        e = 0.5 * math.erfc(-x / SQRT2) - p
        u = e * SQRT2PI * math.exp(0.5 * x * x)
        x -= u / (1.0 + 0.5 * x * u)
    return x


def std_normal_quantile(p: float) -> float:
    """Inverse of std_normal_cdf on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise SpecError(f"quantile argument must lie strictly in (0, 1), got {p}")
    if p > 0.5:
        return -_quantile_half(1.0 - p)
    return _quantile_half(p)


def bridge_cov(n: float, sigma: float, s: float, t: float) -> float:
    """Covariance sigma^2 * s * (n - t) / n of a bridge pinned at 0 and n.

    Requires 0 <= s <= t <= n; the orientation is not symmetrized here.
    """
    if not 0 <= s <= t <= n:
        raise SpecError(f"need 0 <= s <= t <= n, got s={s}, t={t}, n={n}")
    return sigma * sigma * s * (n - t) / n
