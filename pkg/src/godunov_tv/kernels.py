"""Heat kernel, sawtooth functions and the binomial Green kernel of the lambda=1/2 step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

EXACT_BINOMIAL_MAX_N = 50


def heat_kernel(t, x, deriv: int = 0):
    """G(t, x) = exp(-x^2 / 4t) / (2 sqrt(pi t)) or its x-derivative of order ``deriv``."""
    if deriv not in (0, 1, 2, 3):
        raise ValueError(f"deriv must be 0..3, got {deriv}")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat kernel needs t > 0")
    g = np.exp(-(x * x) / (4.0 * t)) / (2.0 * np.sqrt(np.pi * t))
    if deriv == 1:
        g = -x / (2.0 * t) * g
    elif deriv == 2:
        g = (x * x / (4.0 * t * t) - 1.0 / (2.0 * t)) * g
    elif deriv == 3:
        g = (-(x**3) / (8.0 * t**3) + 3.0 * x / (4.0 * t * t)) * g
    return g if g.ndim else float(g)


def sawtooth(m: int, t):
    """Zero-mean 1-periodic h_1(t) = floor(t) - t + 1/2 and its antiderivative h_2."""
    t = np.asarray(t, dtype=float)
    s = t - np.floor(t)
    if m == 1:
        out = 0.5 - s
    elif m == 2:
        out = 0.5 * (s - s * s) - 1.0 / 12.0
    else:
        raise ValueError(f"sawtooth order must be 1 or 2, got {m}")
    return out if out.ndim else float(out)


def binomial_kernel(n, k):
    """K^n_k = 2^-n C(n, k); zero outside 0 <= k <= n.

    Exact integer arithmetic for n <= 50, otherwise scipy's saddle-point pmf.
    """
    if np.ndim(n) == 0 and np.ndim(k) == 0:
        n, k = int(n), int(k)
        if n < 0:
            raise ValueError("n must be nonnegative")
        if k < 0 or k > n:
            return 0.0
        if n <= EXACT_BINOMIAL_MAX_N:
            return math.comb(n, k) / 2**n
        return float(binom.pmf(k, n, 0.5))
    n = np.asarray(n, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    n, k = np.broadcast_arrays(n, k)
    out = np.asarray(binom.pmf(k, n, 0.5), dtype=float)
    out = np.where((k < 0) | (k > n), 0.0, out)
    small = (n <= EXACT_BINOMIAL_MAX_N) & (k >= 0) & (k <= n)
    if np.any(small):
        out = out.copy()
        for idx in zip(*np.nonzero(small)):
            out[idx] = math.comb(int(n[idx]), int(k[idx])) / 2 ** int(n[idx])
    return out


def log_binomial_kernel(n: int, k):
    """log K^n_k via log-gamma; -inf outside the support."""
    k = np.asarray(k, dtype=float)
    inside = (k >= 0) & (k <= n)
    kk = np.where(inside, k, 0.0)
    val = gammaln(n + 1.0) - gammaln(kk + 1.0) - gammaln(n - kk + 1.0) - n * math.log(2.0)
    return np.where(inside, val, -np.inf)


def binomial_diff_approx(n, k):
    """Heat-kernel approximation 4[G_x - G_xx](n/2, 2k - n) of K^n_k - K^n_{k-1}."""
    t = np.asarray(n, dtype=float) / 2.0
    x = 2.0 * np.asarray(k, dtype=float) - np.asarray(n, dtype=float)
    out = 4.0 * (heat_kernel(t, x, 1) - heat_kernel(t, x, 2))
    return out


@dataclass(frozen=True)
class StirlingExpansion:
    """Pieces of a_k(nu) = h * N(kh) * exp(eps1 - eps2)."""

    eps1: float
    eps2: float
    h: float
    normal_value: float

    @property
    def value(self) -> float:
        return self.h * self.normal_value * math.exp(self.eps1 - self.eps2)


def a_k_expansion(nu: int, k: int) -> StirlingExpansion:
    """Normal approximation of a_k(nu) = 4^-nu C(2nu, nu+k) with its two corrections.

    eps2 carries the sign that makes the k = 0 value exact: log(a_0 sqrt(pi nu))
    = -1/(8 nu) + 1/(192 nu^3) + O(nu^-5).
    """
    if nu <= 0:
        raise ValueError("nu must be a positive integer")
    if abs(k) > nu:
        raise ValueError(f"|k|={abs(k)} exceeds nu={nu}; the kernel vanishes there")
    r = k / nu
    eps1 = 0.5 * r**2 - (k**4 + k**2) / (6.0 * nu**3) + 0.25 * r**4
    eps2 = 1.0 / (8.0 * nu) - 1.0 / (192.0 * nu**3)
    h = math.sqrt(2.0 / nu)
    normal = math.exp(-0.5 * (k * h) ** 2) / math.sqrt(2.0 * math.pi)
    return StirlingExpansion(eps1, eps2, h, normal)


def diff_approx_error(n: int, delta: float = 0.05) -> float:
    """max |(K^n_k - K^n_{k-1}) - binomial_diff_approx(n, k)| over the band |2k - n| <= n^(1/2+delta)."""
    half = n ** (0.5 + delta)
    k = np.arange(int(math.ceil((n - half) / 2)), int(math.floor((n + half) / 2)) + 1)
    exact = np.exp(log_binomial_kernel(n, k)) - np.exp(log_binomial_kernel(n, k - 1))
    return float(np.max(np.abs(exact - binomial_diff_approx(n, k))))
