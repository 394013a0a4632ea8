"""The linear recursion z^{n+1}_j = mu z^n_{j-1} + nu z^n_j and the discrete Cole-Hopf map."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from godunov_tv.flux import FluxParams, f_eval, sigma_of_b
from godunov_tv.scheme import godunov_update_u


@dataclass(frozen=True)
class LogRow:
    """log z^n_j for j = j_min, ..., j_min + len(values) - 1."""

    j_min: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "j_min", int(self.j_min))

    @property
    def j_max(self) -> int:
        return self.j_min + len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def shifted(self, k: int) -> "LogRow":
        return LogRow(self.j_min + k, self.values)


def _log_step(values: np.ndarray, log_mu: float, log_nu: float) -> np.ndarray:
    return np.logaddexp(log_mu + values[:-1], log_nu + values[1:])


def linear_step(row: LogRow, p: FluxParams) -> LogRow:
    """Advance one step; the left edge is consumed, so the window shrinks by one."""
    if len(row) < 2:
        raise ValueError("row needs at least 2 entries")
    return LogRow(row.j_min + 1, _log_step(row.values, math.log(p.mu), math.log(p.nu)))


def cole_hopf_u(row: LogRow) -> np.ndarray:
    """u_j = log z_{j-1} - log z_j for j = row.j_min + 1, ..., row.j_max."""
    if len(row) < 2:
        raise ValueError("row needs at least 2 entries")
    return row.values[:-1] - row.values[1:]


def verify_cole_hopf(row: LogRow, p: FluxParams) -> float:
    """Max gap between transforming-then-stepping and stepping-then-transforming."""
    if len(row) < 3:
        raise ValueError("row needs at least 3 entries")
    via_z = cole_hopf_u(linear_step(row, p))
    via_u = godunov_update_u(cole_hopf_u(row), p)
    return float(np.max(np.abs(via_z - via_u)))


def exponential_row(b: float, n: float, j_min: int, length: int, p: FluxParams,
                    x0: float = 0.0) -> LogRow:
    """Traveling wave z_j = exp(-b (j - x0 - sigma(b) n))."""
    j = np.arange(j_min, j_min + length, dtype=float)
    return LogRow(j_min, -b * (j - x0 - sigma_of_b(b, p) * n))


@dataclass(frozen=True)
class TwoWaveSpec:
    b1: float
    b2: float
    x1: float = 0.0
    x2: float = 0.0

    def __post_init__(self):
        if not 0 < self.b1 < self.b2:
            raise ValueError(f"need 0 < b1 < b2, got b1={self.b1}, b2={self.b2}")


def two_wave_log_z(t, x, spec: TwoWaveSpec, p: FluxParams):
    """log of exp(-b1(x - x1 - s1 t)) + exp(-b2(x - x2 - s2 t))."""
    s1, s2 = sigma_of_b(spec.b1, p), sigma_of_b(spec.b2, p)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.logaddexp(-spec.b1 * (x - spec.x1 - s1 * t),
                        -spec.b2 * (x - spec.x2 - s2 * t))


def two_wave_u(t, x, spec: TwoWaveSpec, p: FluxParams):
    return two_wave_log_z(t, np.asarray(x) - 1.0, spec, p) - two_wave_log_z(t, x, spec, p)


def two_wave_row(spec: TwoWaveSpec, n: float, j_min: int, length: int,
                 p: FluxParams) -> LogRow:
    j = np.arange(j_min, j_min + length, dtype=float)
    return LogRow(j_min, two_wave_log_z(n, j, spec, p))


def two_wave_props(spec: TwoWaveSpec, p: FluxParams):
    """(sigma_star, x_bar, center_value) of the traveling profile built from two waves."""
    b1, b2 = spec.b1, spec.b2
    sigma_star = (float(f_eval(b1, p)) - float(f_eval(b2, p))) / (b1 - b2)
    x_bar = (spec.x1 * b1 - spec.x2 * b2) / (b1 - b2)
    center = math.log((math.exp(b1) + math.exp(b2)) / 2.0)
    return sigma_star, x_bar, center
