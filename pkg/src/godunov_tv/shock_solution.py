"""Exact solution of the upwind scheme containing one slowly decelerating shock.

z(t, x) = 1 + int_{-2T}^0 exp{-u_-(tau) [x - gamma(tau) - gamma'(tau)(t - tau)]} (-tau)^(-3/4) dtau

solves z(t+1, x) = mu z(t, x-1) + nu z(t, x) for every real (t, x), so
u(t, x) = log z(t, x-1) - log z(t, x) solves the nonlinear scheme exactly.

The tau-integral splits at tau = -sqrt(T).  On [-sqrt(T), 0] the curve has
constant speed, the exponent does not depend on tau, and the integral of
(-tau)^(-3/4) is 4 T^(1/8) in closed form.  On [-2T, -sqrt(T)] we integrate in
r = log(-tau) with composite Gauss-Legendre panels, geometrically graded at both
ends, in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from godunov_tv.flux import ConfigError, FluxParams, KappaExpansion, kappa_coeffs, phi_of_sigma

_CHUNK = 512


class QuadratureError(RuntimeError):
    """Node doubling changed a result by more than the failure tolerance."""

    def __init__(self, msg, t=None, x=None):
        super().__init__(msg)
        self.t = t
        self.x = x


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 10
    panel_scale: float = 0.25
    max_panel: float = 0.05
    grading_levels: int = 40
    tol: float = 1e-8
    fail_tol: float = 1e-6


@dataclass(frozen=True)
class ShockCurve:
    """gamma(t) = lambda0 t - 2 sqrt(-t) on [-2T, -sqrt(T)), then constant speed to 0."""

    T: int
    params: FluxParams = field(default_factory=FluxParams)

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError([f"T={self.T} must be a positive integer"])
        if self.params.lambda0 + self.T ** -0.25 >= 1.0:
            raise ConfigError([
                f"T={self.T} too small: lambda0 + T^(-1/4) = "
                f"{self.params.lambda0 + self.T ** -0.25:.4f} >= 1; "
                f"minimum admissible T is {self.params.min_horizon()}"
            ])

    @property
    def sqrt_T(self) -> float:
        return math.sqrt(self.T)

    @property
    def tail_speed(self) -> float:
        return self.params.lambda0 + self.T ** -0.25

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -2 * self.T) or np.any(t > 0):
            raise ValueError(f"t must lie in [-2T, 0] = [{-2 * self.T}, 0]")
        return t

    def gamma(self, t):
        t = self._check(t)
        lam0, rt = self.params.lambda0, self.sqrt_T
        s = np.maximum(-t, rt)
        curved = lam0 * t - 2.0 * np.sqrt(s)
        g_join = -lam0 * rt - 2.0 * math.sqrt(rt)
        straight = g_join + self.tail_speed * (t + rt)
        out = np.where(-t >= rt, curved, straight)
        return out if out.ndim else float(out)

    def gamma_dot(self, t):
        t = self._check(t)
        s = np.maximum(-t, self.sqrt_T)
        out = np.where(-t >= self.sqrt_T, self.params.lambda0 + 1.0 / np.sqrt(s), self.tail_speed)
        return out if out.ndim else float(out)

    def u_minus(self, t):
        """Left state fixed by the Rankine-Hugoniot condition f(u)/u = gamma'(t)."""
        return phi_of_sigma(self.gamma_dot(t), self.params)


@dataclass(frozen=True)
class LevelConstants:
    c0: float
    a0: float


def level_constants(kappa: KappaExpansion) -> LevelConstants:
    k0 = kappa.kappa0
    c0 = 2.0 * math.sqrt(math.pi / k0)
    return LevelConstants(c0, math.log((1.0 + c0 * math.exp(k0)) / (1.0 + c0)))


@dataclass(frozen=True)
class _Nodes:
    s: np.ndarray
    sqrt_s: np.ndarray
    u: np.ndarray
    u_over_sqrt: np.ndarray
    offset: np.ndarray  # log weight - u * sqrt(s)


class ExactSolution:
    """Point evaluations of log z and u for one horizon T; immutable after construction."""

    def __init__(self, params: FluxParams | None = None, T: int = 256,
                 quad: QuadratureSpec | None = None):
        self.params = params or FluxParams()
        self.curve = ShockCurve(T, self.params)
        self.quad = quad or QuadratureSpec()
        self.kappa = kappa_coeffs(self.params)
        self.constants = level_constants(self.kappa)
        rt = self.curve.sqrt_T
        self._tail_u = float(phi_of_sigma(self.curve.tail_speed, self.params))
        self._tail_logw = math.log(4.0 * T ** 0.125)
        self._tail_x0 = float(self.curve.gamma(-rt))
        self._coarse = self._build_nodes(1)
        self._fine = None

    @property
    def T(self) -> int:
        return self.curve.T

    @property
    def u_sup(self) -> float:
        """Largest left state, attained on the constant-speed tail."""
        return self._tail_u

    def _panel_edges(self) -> np.ndarray:
        q = self.quad
        a = math.log(self.curve.sqrt_T)
        b = math.log(2.0 * self.T)
        h = min(q.max_panel, q.panel_scale * (2.0 * self.T) ** -0.25)
        npan = max(2, int(math.ceil((b - a) / h)))
        edges = np.linspace(a, b, npan + 1)
        d0 = edges[1] - edges[0]
        grade = d0 * 2.0 ** -np.arange(q.grading_levels, 0, -1)
        left = a + grade
        right = b - grade[::-1]
        return np.concatenate([[a], left, edges[1:-1], right, [b]])

    def _build_nodes(self, refine: int) -> _Nodes:
        edges = self._panel_edges()
        if refine > 1:
            fine = [np.linspace(lo, hi, refine + 1)[:-1] for lo, hi in zip(edges[:-1], edges[1:])]
            edges = np.concatenate(fine + [edges[-1:]])
        x, w = np.polynomial.legendre.leggauss(self.quad.order)
        lo, hi = edges[:-1, None], edges[1:, None]
        r = (0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)).ravel()
        wr = (0.5 * (hi - lo) * w[None, :]).ravel()
        s = np.exp(r)
        sq = np.sqrt(s)
        u = phi_of_sigma(self.params.lambda0 + 1.0 / sq, self.params)
        # ds = s dr and psi = s^(-3/4)
        logw = np.log(wr) + 0.25 * r
        return _Nodes(s, sq, u, u / sq, logw - u * sq)

    def _fine_nodes(self) -> _Nodes:
        if self._fine is None:
            self._fine = self._build_nodes(2)
        return self._fine

    def _log_z_flat(self, t: np.ndarray, x: np.ndarray, nodes: _Nodes) -> np.ndarray:
        lam0 = self.params.lambda0
        out = np.empty_like(x)
        for i in range(0, x.size, _CHUNK):
            tc, xc = t[i:i + _CHUNK], x[i:i + _CHUNK]
            expo = (np.outer(tc, nodes.u_over_sqrt) - np.outer(xc - lam0 * tc, nodes.u)
                    + nodes.offset[None, :])
            out[i:i + _CHUNK] = logsumexp(expo, axis=1)
        rt = self.curve.sqrt_T
        tail = self._tail_logw - self._tail_u * (x - self._tail_x0 - self.curve.tail_speed * (t + rt))
        return np.logaddexp(np.logaddexp(0.0, tail), out)

    def log_z(self, t, x, with_error: bool = False):
        """log z(t, x) >= 0; with ``with_error`` also the node-doubling error estimate."""
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        shape = t.shape
        tf, xf = t.ravel(), x.ravel()
        val = self._log_z_flat(tf, xf, self._coarse)
        if not with_error:
            return val.reshape(shape) if shape else float(val[0])
        err = np.abs(val - self._log_z_flat(tf, xf, self._fine_nodes()))
        rel = err
        bad = rel > self.quad.fail_tol
        if np.any(bad):
            i = int(np.argmax(rel))
            raise QuadratureError(
                f"quadrature did not converge at t={tf[i]}, x={xf[i]}: "
                f"doubling changed log z by {rel[i]:.3e}", t=tf[i], x=xf[i])
        if shape:
            return val.reshape(shape), err.reshape(shape)
        return float(val[0]), float(err[0])

    def u_exact(self, t, x, with_error: bool = False):
        """u(t, x) = log z(t, x-1) - log z(t, x)."""
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        if with_error:
            a, ea = self.log_z(t, x - 1.0, with_error=True)
            b, eb = self.log_z(t, x, with_error=True)
            return a - b, ea + eb
        return self.log_z(t, x - 1.0) - self.log_z(t, x)

    def u_row(self, t: float, j_lo: int, j_hi: int, with_error: bool = False):
        """u(t, j) for integers j_lo..j_hi from one batch of log z values."""
        j = np.arange(j_lo - 1, j_hi + 1, dtype=float)
        if with_error:
            lz, err = self.log_z(np.full_like(j, t), j, with_error=True)
            return lz[:-1] - lz[1:], err[:-1] + err[1:]
        lz = self.log_z(np.full_like(j, t), j)
        return lz[:-1] - lz[1:]

    def level_curve(self, t, a, tol: float = 1e-9):
        """x with u(t, x) = a, by bisection on the decreasing profile u(t, .)."""
        t, a = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(a, dtype=float))
        shape = t.shape
        tf, af = t.ravel().copy(), a.ravel().copy()
        if np.any(af <= 0) or np.any(af >= self.u_sup):
            raise ValueError(f"level a must lie in (0, {self.u_sup})")
        center = self.curve.gamma(np.clip(tf, -2 * self.T, 0.0))
        width = np.full_like(tf, 16.0)
        for _ in range(40):
            lo, hi = center - width, center + width
            ok = (self.u_exact(tf, lo) > af) & (self.u_exact(tf, hi) < af)
            if ok.all():
                break
            width = np.where(ok, width, 2.0 * width)
        else:
            raise ValueError("level outside the attained range of u(t, .)")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = self.u_exact(tf, mid) > af
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 4.0 * np.spacing(np.abs(mid) + 1.0)):
                break
        x = 0.5 * (lo + hi)
        resid = np.abs(self.u_exact(tf, x) - af)
        if np.any(resid > tol):
            raise ValueError(f"level-curve residual {resid.max():.2e} exceeds {tol}")
        return x.reshape(shape) if shape else float(x[0])

    def c_of_a(self, a, t_ref: float | None = None):
        """Offset c(a) = x(t*; a) - gamma(t*) at the reference time t* (default -T)."""
        t_ref = -float(self.T) if t_ref is None else float(t_ref)
        a = np.asarray(a, dtype=float)
        out = self.level_curve(np.full(a.shape, t_ref), a) - self.curve.gamma(t_ref)
        return out if np.ndim(out) else float(out)


def interior_horizon(s: float, params: FluxParams | None = None) -> int:
    """Horizon T that puts tau = -s in the middle of [-2T, -sqrt(T)] on a log scale.

    With T = s(1+d)/2 the left gap is s d and the right gap is s - sqrt(T); the
    two match when 2 s (1-d)^2 = 1 + d.
    """
    p = params or FluxParams()
    d = brentq(lambda d: 2.0 * s * (1.0 - d) ** 2 - (1.0 + d), 0.0, 1.0)
    return max(p.min_horizon(), int(round(s * (1.0 + d) / 2.0)))


def level_speed_defect(s: float, a: float | None = None, params: FluxParams | None = None,
                       quad: QuadratureSpec | None = None) -> float:
    """|d/dt (x(t; a) - gamma(t))| at t = -s by a centred difference.

    The horizon is chosen per sample with ``interior_horizon`` so that both
    ends of the variable-speed piece stay far from -s.
    """
    p = params or FluxParams()
    sol = ExactSolution(p, interior_horizon(s, p), quad)
    a = sol.constants.a0 if a is None else a
    T = sol.T
    h = min(0.02 * s, 0.45 * (2 * T - s), 0.45 * (s - math.sqrt(T)))
    if h <= 0:
        raise ValueError(f"s={s} leaves no room inside [-2T, -sqrt(T)]")

    def D(t):
        return sol.level_curve(t, a) - sol.curve.gamma(t)

    return abs((D(-s + h) - D(-s - h)) / (2.0 * h))
