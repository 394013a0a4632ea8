"""Discrete runs of the triangular 2x2 system from n = -2T to n = 1.

u is carried as log z through the exact linear recursion; v starts from zero and
is advanced by the upwind scheme with source -[g(u_j) - g(u_{j-1})].  The
measured profile is V(j) = v^1_{j+1}.

Row bookkeeping: every step consumes one cell on the left of each row, so the
initial z row is oversized by 2T + 2 cells and no boundary data is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import binom

from godunov_tv.flux import ConfigError, FluxParams
from godunov_tv.kernels import binomial_kernel
from godunov_tv.linear_wave import LogRow, cole_hopf_u, linear_step
from godunov_tv.profile import Profile
from godunov_tv.scheme import godunov_update_u, godunov_update_v
from godunov_tv.shock_solution import ExactSolution, QuadratureSpec

__all__ = [
    "SourceFn", "default_source", "RunConfig", "RunResult", "GridRun", "DriftError",
    "run", "tv", "godunov_update_u", "godunov_update_v", "v_from_sources",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    xs = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1.0 / (xs * xs - 1.0)), 0.0)


class SourceFn:
    """g with g'(u) = A exp(1 / ((u - u*)^2 / w^2 - 1)) on |u - u*| < w.

    g(u) = int_{u*-w}^u g', so g = 0 below the support and g = A * I above it.
    The default amplitude makes int g' = 1.
    """

    def __init__(self, u_star: float, width: float, amplitude: float | None = None,
                 panels: int = 400):
        if width <= 0:
            raise ConfigError([f"width={width} must be positive"])
        if u_star - width <= 0:
            raise ConfigError([f"support [{u_star - width}, {u_star + width}] must lie in u > 0"])
        self.u_star = float(u_star)
        self.width = float(width)
        self._edges = np.linspace(-1.0, 1.0, panels + 1)
        h = self._edges[1] - self._edges[0]
        x = self._edges[:-1, None] + 0.5 * h * (_GL_X[None, :] + 1.0)
        per_panel = 0.5 * h * (_bump(x) * _GL_W[None, :]).sum(axis=1)
        self._cum = np.concatenate([[0.0], np.cumsum(per_panel)])
        unit_mass = self._cum[-1] * self.width
        self.amplitude = 1.0 / unit_mass if amplitude is None else float(amplitude)
        self.mass = self.amplitude * unit_mass

    @property
    def support(self) -> tuple[float, float]:
        return self.u_star - self.width, self.u_star + self.width

    def g_prime(self, u):
        out = self.amplitude * _bump((np.asarray(u, dtype=float) - self.u_star) / self.width)
        return out if np.ndim(out) else float(out)

    def __call__(self, u):
        return self.g(u)

    def g(self, u):
        x = np.clip((np.asarray(u, dtype=float) - self.u_star) / self.width, -1.0, 1.0)
        i = np.clip(np.searchsorted(self._edges, x, side="right") - 1, 0, len(self._edges) - 2)
        a = self._edges[i]
        half = 0.5 * (x - a)
        nodes = a[..., None] + half[..., None] * (_GL_X + 1.0)
        partial = half * (_bump(nodes) * _GL_W).sum(axis=-1)
        out = self.amplitude * self.width * (self._cum[i] + partial)
        return out if np.ndim(out) else float(out)


def default_source(sol: ExactSolution) -> SourceFn:
    """Bump centred on a0 with w = min(a0, kappa0 - a0) / 4."""
    a0, k0 = sol.constants.a0, sol.kappa.kappa0
    return SourceFn(a0, min(a0, k0 - a0) / 4.0)


class DriftError(RuntimeError):
    """The stepped u row left the exact solution by more than the tolerance."""


@dataclass
class RunConfig:
    params: FluxParams = field(default_factory=FluxParams)
    T: int = 256
    source: SourceFn | None = None
    left_margin: int | None = None
    right_margin: int = 64
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    store_sources: bool = False
    check_drift: bool = True
    drift_factor: float = 10.0

    def resolved_left_margin(self) -> int:
        if self.left_margin is not None:
            return int(self.left_margin)
        return int(math.ceil(8.0 * math.sqrt(2.0 * self.T))) + 64


@dataclass
class RunResult:
    V: Profile
    u_final: Profile  # u at n = 0
    v_final: Profile  # v at n = 1
    checkpoints: dict = field(default_factory=dict)  # n -> (Profile, max error vs exact)
    sources: list = field(default_factory=list)  # (n, k_min, psi values) with psi nonzero
    solution: ExactSolution | None = None
    window: tuple[int, int] = (0, 0)


class GridRun:
    """Mutable state of one run; owned by a single caller."""

    def __init__(self, config: RunConfig, solution: ExactSolution | None = None):
        self.config = config
        p, T = config.params, config.T
        self.sol = solution or ExactSolution(p, T, config.quad)
        self.source = config.source or default_source(self.sol)
        self.J_lo = int(math.floor(self.sol.curve.gamma(-2 * T))) - config.resolved_left_margin()
        self.J_hi = int(config.right_margin)
        z_lo = self.J_lo - 2 * T - 2
        j = np.arange(z_lo, self.J_hi + 1, dtype=float)
        self.n = -2 * T
        t0 = np.full_like(j, self.n)
        if config.check_drift:
            # node doubling on the initial row; raises QuadratureError with the offending (t, x)
            lz, _ = self.sol.log_z(t0, j, with_error=True)
        else:
            lz = self.sol.log_z(t0, j)
        self.z = LogRow(z_lo, lz)
        self.u = cole_hopf_u(self.z)
        self.v = np.zeros_like(self.u)
        self.sources: list = []
        self._lo_src, self._hi_src = self.source.support

    @property
    def j_min(self) -> int:
        """Index of u[0] and v[0]."""
        return self.z.j_min + 1

    def u_profile(self) -> Profile:
        return Profile(self.j_min, self.u)

    def step(self):
        gu = np.zeros_like(self.u)
        hot = self.u > self._lo_src
        gu[hot] = self.source.g(self.u[hot])
        if self.config.store_sources:
            psi = -(gu[1:] - gu[:-1])
            nz = np.nonzero(psi)[0]
            if nz.size:
                self.sources.append((self.n, self.j_min + 1 + nz[0], psi[nz[0]:nz[-1] + 1].copy()))
        self.v = godunov_update_v(self.v, self.u, lambda _: gu, self.config.params)
        self.z = linear_step(self.z, self.config.params)
        self.u = cole_hopf_u(self.z)
        self.n += 1

    def drift(self, stride: int | None = None) -> float:
        """max |u stepped - u exact| on a strided sample plus the shock band."""
        prof = self.u_profile()
        idx = np.arange(0, len(prof), stride or max(1, len(prof) // 2000))
        gam = self.sol.curve.gamma(min(0.0, float(self.n)))
        band = np.arange(int(gam) - 64, int(gam) + 65) - prof.j_min
        idx = np.union1d(idx, band[(band >= 0) & (band < len(prof))])
        j = prof.j[idx].astype(float)
        exact = self.sol.u_exact(np.full_like(j, self.n), j)
        return float(np.max(np.abs(prof.values[idx] - exact)))


def checkpoint_times(T: int) -> list[int]:
    return [-2 * T, -T, -int(round(math.sqrt(T))), 0]


def run(config: RunConfig, solution: ExactSolution | None = None,
        on_step: Callable[[GridRun], None] | None = None) -> RunResult:
    """Step both rows 2T+1 times and return V(j) = v^1_{j+1} on the window."""
    grid = GridRun(config, solution)
    T = config.T
    stops = set(checkpoint_times(T))
    tol = config.drift_factor * config.quad.tol
    result = RunResult(V=Profile(0, np.zeros(1)), u_final=Profile(0, np.zeros(1)),
                       v_final=Profile(0, np.zeros(1)), solution=grid.sol)
    while grid.n <= 0:
        if grid.n in stops:
            err = grid.drift() if config.check_drift else float("nan")
            result.checkpoints[grid.n] = (grid.u_profile(), err)
            if config.check_drift and err > tol:
                raise DriftError(f"u row drifted by {err:.3e} > {tol:.1e} at n={grid.n}")
            if grid.n == 0:
                result.u_final = grid.u_profile()
        grid.step()
        if on_step is not None:
            on_step(grid)
    result.v_final = Profile(grid.j_min, grid.v)
    result.V = Profile(grid.j_min - 1, grid.v)
    result.sources = grid.sources
    result.window = (grid.J_lo, grid.J_hi)
    return result


def tv(profile: Profile, j_lo: int, j_hi: int) -> float:
    return profile.tv(j_lo, j_hi)


def v_from_sources(sources, j, lam: float = 0.5) -> np.ndarray:
    """V(j) = sum_n sum_k psi^{-n}_k K^n_{j-k+1} by direct convolution of stored sources."""
    j = np.atleast_1d(np.asarray(j, dtype=np.int64))
    out = np.zeros(j.shape, dtype=float)
    for m, k_min, psi in sources:
        n = -m  # steps from m+1 to 1
        k = k_min + np.arange(psi.size)
        idx = j[:, None] - k[None, :] + 1
        if lam == 0.5:
            ker = binomial_kernel(np.full(idx.shape, n), idx)
        else:
            ker = binom.pmf(idx, n, lam)
        out += ker @ psi
    return out
