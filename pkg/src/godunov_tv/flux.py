"""The flux f(u) = ln(nu + mu e^u), its Rankine-Hugoniot speed map and inverse."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import expit

DEFAULT_MU = 0.52
DEFAULT_LAMBDA0 = (3, 5)

_B_LO = 1e-12
_B_HI = 700.0


class ConfigError(ValueError):
    """Invalid parameters; ``violations`` lists every broken constraint."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class FluxParams:
    """Parameters fixing the system and the scheme.

    ``lambda0 = lambda0_p / lambda0_q`` is the rational target speed of the shock,
    ``lam`` the advection speed of v.
    """

    mu: float = DEFAULT_MU
    lambda0_p: int = DEFAULT_LAMBDA0[0]
    lambda0_q: int = DEFAULT_LAMBDA0[1]
    lam: float = 0.5

    def __post_init__(self):
        problems = []
        if not 0.5 < self.mu < 1.0:
            problems.append(f"mu={self.mu} must lie in (1/2, 1)")
        if self.lambda0_q <= 0:
            problems.append("lambda0_q must be positive")
        elif math.gcd(int(self.lambda0_p), int(self.lambda0_q)) != 1:
            problems.append(
                f"lambda0 = {self.lambda0_p}/{self.lambda0_q} must be in lowest terms"
            )
        if self.lambda0_q > 0 and not self.mu < self.lambda0_p / self.lambda0_q < 1.0:
            problems.append(
                f"lambda0={self.lambda0_p}/{self.lambda0_q} must lie in (mu, 1) = ({self.mu}, 1)"
            )
        if not 0.0 < self.lam < self.mu:
            problems.append(f"lam={self.lam} must lie in (0, mu)")
        if problems:
            raise ConfigError(problems)

    @property
    def nu(self) -> float:
        return 1.0 - self.mu

    @property
    def lambda0_frac(self) -> Fraction:
        return Fraction(self.lambda0_p, self.lambda0_q)

    @property
    def lambda0(self) -> float:
        return self.lambda0_p / self.lambda0_q

    @property
    def beta(self) -> float:
        """Drift of the shock relative to v-advection, lambda0 - 1/2."""
        return self.lambda0 - 0.5

    def min_horizon(self) -> int:
        """Smallest T whose constant-speed tail lambda0 + T^(-1/4) stays below 1."""
        return int(math.floor((1.0 / (1.0 - self.lambda0)) ** 4)) + 1


def f_eval(u, p: FluxParams):
    """f(u) = ln(nu + mu e^u), evaluated without overflow or cancellation."""
    u = np.asarray(u, dtype=float)
    small = u <= 1.0
    us = np.where(small, u, 0.0)
    ub = np.where(small, 1.0, u)
    # log1p form is exact near u = 0 where f(u) ~ mu*u
    out = np.where(
        small,
        np.log1p(p.mu * np.expm1(us)),
        ub + np.log(p.mu + p.nu * np.exp(-ub)),
    )
    return out if out.ndim else float(out)


def f_prime(u, p: FluxParams):
    out = expit(np.asarray(u, dtype=float) + math.log(p.mu / p.nu))
    return out if np.ndim(out) else float(out)


def f_second(u, p: FluxParams):
    fp = f_prime(u, p)
    return fp * (1.0 - fp)


def sigma_of_b(b, p: FluxParams):
    """Rankine-Hugoniot speed of the shock from b > 0 down to 0."""
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ValueError("sigma_of_b needs b > 0 (the b -> 0 limit is mu)")
    out = f_eval(b, p) / b
    return out if np.ndim(out) else float(out)


def sigma_prime(b, p: FluxParams):
    b = np.asarray(b, dtype=float)
    out = (f_prime(b, p) - sigma_of_b(b, p)) / b
    return out if np.ndim(out) else float(out)


def phi_of_sigma(sigma, p: FluxParams):
    """Unique positive root b of f(b)/b = sigma, for mu < sigma < 1.

    Bisection on [1e-12, 700] (sigma increases from mu to 1 there), then Newton.
    """
    sig = np.asarray(sigma, dtype=float)
    if np.any(sig <= p.mu) or np.any(sig >= 1.0):
        raise ValueError(f"sigma must lie in (mu, 1) = ({p.mu}, 1)")
    if np.any(sig >= sigma_of_b(_B_HI, p)):
        raise ValueError("sigma too close to 1: root exceeds the bracket [1e-12, 700]")
    lo = np.full(sig.shape, _B_LO)
    hi = np.full(sig.shape, _B_HI)
    # geometric bisection keeps relative precision for roots near 0
    for _ in range(90):
        mid = np.sqrt(lo * hi)
        above = sigma_of_b(mid, p) > sig
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    b = np.sqrt(lo * hi)
    for _ in range(3):
        resid = f_eval(b, p) - sig * b
        slope = f_prime(b, p) - sig
        b = b - resid / slope
    return b if b.ndim else float(b)


@dataclass(frozen=True)
class KappaExpansion:
    """phi(lambda0 + d) = kappa0 + kappa1 d + kappa2 d^2 + O(d^3)."""

    kappa0: float
    kappa1: float
    kappa2: float

    def __call__(self, delta):
        return self.kappa0 + self.kappa1 * delta + self.kappa2 * delta**2


def kappa_coeffs(p: FluxParams) -> KappaExpansion:
    """Taylor coefficients of phi at lambda0 by Richardson-extrapolated differences."""
    lam0 = p.lambda0
    h = min(1e-3, (lam0 - p.mu) / 4, (1 - lam0) / 4)
    k0 = phi_of_sigma(lam0, p)

    def d1(s):
        return (phi_of_sigma(lam0 + s, p) - phi_of_sigma(lam0 - s, p)) / (2 * s)

    def d2(s):
        return (phi_of_sigma(lam0 + s, p) - 2 * k0 + phi_of_sigma(lam0 - s, p)) / s**2

    k1 = (4 * d1(h / 2) - d1(h)) / 3
    k2 = (4 * d2(h / 2) - d2(h)) / 3 / 2
    return KappaExpansion(float(k0), float(k1), float(k2))
