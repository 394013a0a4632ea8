"""Heat-equation resonance models: point sources on and off the line x = sigma t.

Phi(y) = sum_{n>=1} G(n, y + sigma n)          (sources exactly on the line)
Psi(y) = sum_{n>=1} G(n, y + floor(sigma n))   (sources snapped to the lattice)

For y < 0, Poisson summation gives Phi(y) - 1/sigma = 2 Re sum_{k>=1} fhat(k) with

    fhat(k) = exp(|y| sigma/2 (1 - r_k)) / (sigma r_k),   r_k = sqrt(1 + 8 pi i k / sigma^2),

so the difference decays exponentially in |y| and sits far below double precision
once |y| exceeds ~30.  ``phi_excess_mp`` evaluates it by direct summation in
extended precision; ``phi_excess_poisson`` is the closed form used to check it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from godunov_tv.kernels import heat_kernel
from godunov_tv.profile import Profile

# terms with exponent below -_TAIL_EXP are dropped (e^-40 ~ 4e-18)
_TAIL_EXP = 40.0
_CHUNK = 1 << 21


def _n_cutoff(sigma: float, y: float, log_tol: float = _TAIL_EXP) -> int:
    """Smallest n beyond which (y + sigma n)^2 / 4n exceeds log_tol for good."""
    b = 4.0 * log_tol - 2.0 * sigma * y
    disc = b * b - 4.0 * sigma * sigma * y * y
    if disc < 0:
        return 16
    return int(math.ceil((b + math.sqrt(disc)) / (2.0 * sigma * sigma))) + 16


def _as_fraction(sigma) -> Fraction:
    # decimal reading so that 1.05 means 21/20 and floor(1.05 * 20) = 21
    if isinstance(sigma, Fraction):
        return sigma
    if isinstance(sigma, int):
        return Fraction(sigma)
    return Fraction(repr(float(sigma)))


def _floor_multiples(sigma, n: np.ndarray) -> np.ndarray:
    fr = _as_fraction(sigma)
    return (n * fr.numerator) // fr.denominator


def _source_sum(sigma, y, snap: bool) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n_max = max(_n_cutoff(float(sigma), float(yi)) for yi in (y.min(), y.max()))
    n = np.arange(1, n_max + 1, dtype=np.int64)
    shift = _floor_multiples(sigma, n).astype(float) if snap else float(sigma) * n
    out = np.empty_like(y)
    step = max(1, _CHUNK // n.size)
    for i in range(0, y.size, step):
        yc = y[i:i + step, None]
        out[i:i + step] = heat_kernel(n[None, :].astype(float), yc + shift[None, :]).sum(axis=1)
    return out


def phi_profile(sigma: float, y, n_max: int | None = None):
    """Phi(y), truncated where the Gaussian tail drops below e^-40 of the peak term."""
    if n_max is not None:
        n = np.arange(1, n_max + 1, dtype=float)
        y = np.asarray(y, dtype=float)
        out = heat_kernel(n, y[..., None] + sigma * n).sum(axis=-1)
        return out if np.ndim(out) else float(out)
    out = _source_sum(sigma, y, snap=False)
    return out if np.ndim(y) else float(out[0])


def psi_profile(sigma, y):
    """Psi(y) with lattice-snapped sources; sigma read as an exact decimal."""
    out = _source_sum(sigma, y, snap=True)
    return out if np.ndim(y) else float(out[0])


def decay_rate(sigma: float) -> float:
    """r with |Phi(y) - 1/sigma| ~ e^{-r|y|} as y -> -infinity (first Poisson mode)."""
    root = complex(1.0, 8.0 * math.pi / sigma**2) ** 0.5
    return 0.5 * sigma * (root.real - 1.0)


def phi_excess_mp(sigma, y, dps: int | None = None):
    """Phi(y) - 1/sigma by direct summation in mpmath; returns an mpf."""
    y = float(y)
    if dps is None:
        dps = int(decay_rate(float(sigma)) * abs(y) / math.log(10)) + 30
    with mpmath.workdps(dps):
        sig = mpmath.mpf(sigma) if not isinstance(sigma, Fraction) else (
            mpmath.mpf(sigma.numerator) / sigma.denominator)
        yy = mpmath.mpf(y)
        n_max = _n_cutoff(float(sigma), y, log_tol=dps * math.log(10) + 10)
        total = mpmath.fsum(
            mpmath.exp(-(yy + sig * n) ** 2 / (4 * n)) / (2 * mpmath.sqrt(mpmath.pi * n))
            for n in range(1, n_max + 1))
        return +(total - 1 / sig)


def phi_excess_poisson(sigma, y, k_max: int = 4, dps: int | None = None):
    """Closed-form 2 Re sum_{k=1}^{k_max} fhat(k); valid for y < 0."""
    if y >= 0:
        raise ValueError("Poisson form is derived for y < 0")
    if dps is None:
        dps = int(decay_rate(float(sigma)) * abs(y) / math.log(10)) + 30
    with mpmath.workdps(dps):
        sig, ay = mpmath.mpf(sigma), mpmath.mpf(-y)
        total = mpmath.mpf(0)
        for k in range(1, k_max + 1):
            r = mpmath.sqrt(1 + 8j * mpmath.pi * k / sig**2)
            total += 2 * mpmath.re(mpmath.exp(ay * sig / 2 * (1 - r)) / (sig * r))
        return +total


def resonance_interval(epsilon: float) -> tuple[int, int]:
    """Integer endpoints of I_eps = [-eps^-2, -eps^-2 / 2]."""
    big = 1.0 / epsilon**2
    return int(math.ceil(-big - 1e-9)), int(math.floor(-big / 2 + 1e-9))


def resonance_tv(epsilon: float, kind: str = "psi", budget: int = 200_000) -> float:
    """TV of Psi (or Phi) at sigma = 1 + eps over the integers of I_eps."""
    if not 0 < epsilon <= 0.2:
        raise ValueError("epsilon must lie in (0, 0.2]")
    if 1.0 / epsilon**2 > budget:
        warnings.warn(f"eps^-2 = {1 / epsilon**2:.0f} exceeds the budget {budget}", stacklevel=2)
    lo, hi = resonance_interval(epsilon)
    y = np.arange(lo, hi + 1, dtype=float)
    sigma = 1 + _as_fraction(epsilon)
    if kind == "psi":
        vals = psi_profile(sigma, y)
    elif kind == "phi":
        vals = phi_profile(float(sigma), y)
    else:
        raise ValueError(f"kind must be 'psi' or 'phi', got {kind!r}")
    return Profile(lo, vals).tv(lo, hi)


def variable_sources(T: int) -> tuple[np.ndarray, np.ndarray]:
    """Source times n = 1..T - sqrt(T) and their floored positions floor(gamma(n))."""
    n = np.arange(1, int(math.floor(T - math.sqrt(T))) + 1, dtype=float)
    pos = np.floor((n - T) - 2.0 * np.sqrt(T - n))
    return n, pos


def variable_source_profile(T: int, y):
    """v(T, y) = sum_n G(T - n, y - floor(gamma(n))) for the decelerating source train."""
    if T < 1:
        raise ValueError("T must be a positive integer")
    n, pos = variable_sources(T)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(y_arr)
    tau = T - n
    step = max(1, _CHUNK // max(1, n.size))
    for i in range(0, y_arr.size, step):
        d = y_arr[i:i + step, None] - pos[None, :]
        out[i:i + step] = (np.exp(-d * d / (4.0 * tau)) / (2.0 * np.sqrt(np.pi * tau))).sum(axis=1)
    return out if np.ndim(y) else float(out[0])


@dataclass(frozen=True)
class DyadicRow:
    j: int
    y_lo: int
    y_hi: int
    tv: float


def dyadic_count(T: int) -> int:
    """Largest N with N <= (1/2) log2 T, in exact integer arithmetic."""
    return (int(T).bit_length() - 1) // 2


def dyadic_tv(T: int) -> list[DyadicRow]:
    """TV of v(T, .) on the integers of [y_j, y_j / 2], y_j = -2^j sqrt(T), j = 1..N."""
    if T < 16:
        raise ValueError("dyadic_tv needs T >= 16")
    N = dyadic_count(T)
    rt = math.sqrt(T)
    bounds = []
    for j in range(1, N + 1):
        y_j = -(2**j) * rt
        bounds.append((j, int(math.ceil(y_j - 1e-9)), int(math.floor(y_j / 2 + 1e-9))))
    lo = min(b[1] for b in bounds)
    hi = max(b[2] for b in bounds)
    prof = Profile(lo, variable_source_profile(T, np.arange(lo, hi + 1, dtype=float)))
    return [DyadicRow(j, a, b, prof.tv(a, b)) for j, a, b in bounds]
