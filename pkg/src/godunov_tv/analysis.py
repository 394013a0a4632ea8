"""Representation of V through level curves, the A/B split, kernel-sum
diagnostics, the resonance functional Pi(z) and the ln T growth sweep.

Source weights.  At time -n the floor of the level curve x(-n; xi) equals k-1
exactly when u(-n, k) < xi < u(-n, k-1), so the xi-integral of g' against
K^n_{j - floor(x)} splits at the lattice values of u and each piece carries the
weight g(u_{k-1}) - g(u_k).  ``ReprCache`` stores these weights with u taken from
direct quadrature of the exact solution, independent of the time stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.stats import linregress
from scipy.stats import t as student_t

from godunov_tv.coupled_sim import RunConfig, SourceFn, default_source, run
from godunov_tv.flux import FluxParams
from godunov_tv.kernels import heat_kernel, log_binomial_kernel
from godunov_tv.profile import Profile, total_variation
from godunov_tv.shock_solution import ExactSolution

I_EPS = 0.05


def frac(a):
    """((a)) = a - floor(a); exact for Fraction and int input."""
    if isinstance(a, (Fraction, int)):
        return a - math.floor(a)
    a = np.asarray(a, dtype=float)
    out = a - np.floor(a)
    return out if out.ndim else float(out)


def frac_part_sum(a, p: int, q: int):
    """Both sides of sum_{i=1}^q ((a - i p/q)) = ((q a)) + (q - 1)/2."""
    a = Fraction(a)
    n, d = a.numerator, a.denominator
    # a - ip/q = (nq - ipd) / (dq) and ((x / y)) = (x mod y) / y for y > 0
    den = d * q
    lhs = Fraction(sum((n * q - i * p * d) % den for i in range(1, q + 1)), den)
    rhs = frac(q * a) + Fraction(q - 1, 2)
    return lhs, rhs


def window_I(j, beta: float, eps: float = I_EPS, factor: float | None = None):
    """n-window around |j|/beta of half-width factor * |j|^(1/2+eps).

    ``factor=1`` is the bare asymptotic window; the default 4 / beta^(3/2) spans
    about eight standard deviations of the binomial kernel at every |j|.
    """
    if factor is None:
        factor = 4.0 / beta**1.5
    aj = np.abs(np.asarray(j, dtype=float))
    half = factor * aj ** (0.5 + eps)
    return aj / beta - half, aj / beta + half


@dataclass
class ReprCache:
    sol: ExactSolution
    source: SourceFn
    n: np.ndarray
    k_min: np.ndarray
    weights: list

    @property
    def beta(self) -> float:
        return self.sol.params.beta


def build_repr_cache(sol: ExactSolution, source: SourceFn | None = None) -> ReprCache:
    """Weights g(u(-n,k-1)) - g(u(-n,k)) for n = 0..2T over the cells the source touches."""
    source = source or default_source(sol)
    T = sol.T
    n = np.arange(0, 2 * T + 1)
    lo, hi = source.support
    x_top = sol.level_curve(-n.astype(float), np.full(n.shape, hi))
    x_bot = sol.level_curve(-n.astype(float), np.full(n.shape, lo))
    k_lo = np.floor(x_top).astype(np.int64)
    k_hi = np.ceil(x_bot).astype(np.int64) + 1
    counts = k_hi - k_lo + 2
    tt = np.repeat(-n.astype(float), counts)
    starts = np.repeat(k_lo - 1 - np.cumsum(np.r_[0, counts[:-1]]), counts)
    xx = (np.arange(counts.sum()) + starts).astype(float)
    lz = sol.log_z(tt, xx - 1.0) - sol.log_z(tt, xx)
    weights = []
    pos = 0
    for c in counts:
        u = lz[pos:pos + c]
        gu = np.where(u > lo, source.g(np.maximum(u, lo)), 0.0)
        weights.append(gu[:-1] - gu[1:])
        pos += c
    return ReprCache(sol, source, n, k_lo, weights)


def v_representation(cache: ReprCache, j_lo: int, j_hi: int, truncate: bool = False,
                     eps: float = I_EPS, factor: float | None = None) -> Profile:
    """V(j) = sum_n sum_k w^n_k K^n_{j-k+1}, optionally restricted to n in I(j)."""
    j = np.arange(j_lo, j_hi + 1)
    out = np.zeros(j.size)
    if truncate:
        n_lo, n_hi = window_I(j, cache.beta, eps, factor)
    for n, k0, w in zip(cache.n, cache.k_min, cache.weights):
        k = k0 + np.arange(w.size)
        ker = np.exp(log_binomial_kernel(int(n), j[:, None] - k[None, :] + 1))
        contrib = ker @ w
        if truncate:
            contrib = np.where((n >= n_lo) & (n <= n_hi), contrib, 0.0)
        out += contrib
    return Profile(j_lo, out)


def ab_split(cache: ReprCache, j, eps: float = I_EPS, factor: float | None = None):
    """A(j) = 4 sum w G_x(n/2, 2(j-k+1)-n) and B(j) the G_xx analogue, over n in I(j), n >= 1."""
    j = np.atleast_1d(np.asarray(j, dtype=np.int64))
    n_lo, n_hi = window_I(j, cache.beta, eps, factor)
    A = np.zeros(j.size)
    B = np.zeros(j.size)
    for n, k0, w in zip(cache.n, cache.k_min, cache.weights):
        if n == 0:
            continue
        active = (n >= n_lo) & (n <= n_hi)
        if not active.any():
            continue
        k = k0 + np.arange(w.size)
        x = 2.0 * (j[active, None] - k[None, :] + 1) - n
        A[active] += 4.0 * heat_kernel(n / 2.0, x, 1) @ w
        B[active] += 4.0 * heat_kernel(n / 2.0, x, 2) @ w
    return A, B


class LevelCurveCache:
    """x(-s; xi) for s in [0, 2T] as gamma(-s) + spline of the offset x - gamma."""

    def __init__(self, sol: ExactSolution, xi: float, nodes: int = 1200):
        self.sol = sol
        self.xi = float(xi)
        T = sol.T
        rt = math.sqrt(T)
        # dense on both sides of the speed junction at sqrt(T)
        s = np.unique(np.concatenate([
            np.linspace(0.0, rt, max(8, nodes // 6)),
            np.geomspace(rt, 2.0 * T, nodes),
        ]))
        d = sol.level_curve(-s, np.full(s.shape, self.xi)) - sol.curve.gamma(-s)
        self._lo = CubicSpline(s[s <= rt], d[s <= rt])
        self._hi = CubicSpline(s[s >= rt], d[s >= rt])
        self._rt = rt

    def x(self, s):
        s = np.asarray(s, dtype=float)
        d = np.where(s <= self._rt, self._lo(np.minimum(s, self._rt)), self._hi(np.maximum(s, self._rt)))
        return self.sol.curve.gamma(-s) + d


def kernel_sums(curve: LevelCurveCache, j: int, which: str, eps: float = I_EPS,
                factor: float | None = None, c_xi: float | None = None) -> float:
    """One of the diagnostic sums H, h, L, l, M, N at (j, xi)."""
    sol = curve.sol
    p = sol.params
    beta, q = p.beta, p.lambda0_q
    T2 = 2 * sol.T
    n_lo, n_hi = window_I(j, beta, eps, factor)
    if which in ("H", "M"):
        n = np.arange(max(1, math.ceil(n_lo)), min(T2, math.floor(n_hi)) + 1, dtype=float)
        x = 2.0 * (j - np.floor(curve.x(n))) - n
        return float(heat_kernel(n / 2.0, x, 2 if which == "H" else 1).sum())
    if which == "L":
        n = np.arange(1, T2 + 1, dtype=float)
        return float(heat_kernel(n / 2.0, 2.0 * (j - curve.x(n)) - n, 1).sum())
    if which in ("h", "l"):
        order = 2 if which == "h" else 1

        def f(t):
            return heat_kernel(t / 2.0, 2.0 * (j - curve.x(t)) - t, order)
        a, b = max(1e-6, n_lo), min(float(T2), n_hi)
        val, _ = quad(f, a, b, limit=400, points=[abs(j) / beta] if a < abs(j) / beta < b else None)
        return float(val)
    if which == "N":
        c = c_xi if c_xi is not None else sol.c_of_a(curve.xi)

        def f(s):
            tau = q * s
            g = heat_kernel(tau / 2.0, 2.0 * (j - curve.x(tau)) - tau, 2)
            return g * frac(q * c + 2.0 * q * math.sqrt(tau))
        a, b = max(1e-6, n_lo) / q, min(float(T2), n_hi) / q
        # integrate between the jumps of the fractional part
        jumps = np.arange(math.ceil(q * c + 2 * q * math.sqrt(q * a)),
                          math.floor(q * c + 2 * q * math.sqrt(q * b)) + 1)
        s_jump = ((jumps - q * c) / (2.0 * q)) ** 2 / q
        edges = np.concatenate([[a], s_jump[(s_jump > a) & (s_jump < b)], [b]])
        return float(sum(quad(f, lo, hi, limit=100)[0] for lo, hi in zip(edges[:-1], edges[1:])))
    raise ValueError(f"which must be one of H, h, L, l, M, N; got {which!r}")


@dataclass
class PiSpec:
    q: int
    beta: float
    xi: np.ndarray
    w: np.ndarray  # quadrature weight times g'(xi)
    c: np.ndarray
    w_coarse: np.ndarray
    c_coarse: np.ndarray
    c_tol: float = 1e-9

    @property
    def k(self) -> float:
        """Coefficient of sigma inside the fractional part, q / (sqrt(2) beta)."""
        return self.q / (math.sqrt(2.0) * self.beta)

    @property
    def shift(self) -> float:
        return 2.0 * self.q / self.beta


def _xi_rule(lo: float, hi: float, panels: int, order: int = 8):
    x, w = np.polynomial.legendre.leggauss(order)
    e = np.linspace(lo, hi, panels + 1)
    h = np.diff(e)[:, None]
    nodes = (e[:-1, None] + 0.5 * h * (x + 1.0)).ravel()
    return nodes, (0.5 * h * w).ravel()


def build_pi_spec(sol: ExactSolution, source: SourceFn | None = None, panels: int = 8,
                  q: int | None = None, beta: float | None = None) -> PiSpec:
    """c(xi) at reference time -T on a composite Gauss rule over supp g'.

    ``q`` and ``beta`` override the values implied by lambda0 (used to build
    specs whose Pi is large enough to cross-check in double precision).
    """
    source = source or default_source(sol)
    lo, hi = source.support
    xi, wq = _xi_rule(lo, hi, panels)
    xc, wc = _xi_rule(lo, hi, max(1, panels // 2))
    allx = np.concatenate([xi, xc])
    allc = sol.c_of_a(allx)
    return PiSpec(
        q=q if q is not None else sol.params.lambda0_q,
        beta=beta if beta is not None else sol.params.beta,
        xi=xi, w=wq * source.g_prime(xi), c=allc[:xi.size],
        w_coarse=wc * source.g_prime(xc), c_coarse=allc[xi.size:],
    )


def _mode_log_coef(spec: PiSpec, m: int) -> float:
    """log of sqrt(pi) omega^2 / (2 pi m) e^{-omega^2/4}, omega = 2 pi m k."""
    om = 2.0 * math.pi * m * spec.k
    return 0.5 * math.log(math.pi) + 2.0 * math.log(om) - math.log(2.0 * math.pi * m) - om * om / 4.0


def pi_shape(z, spec: PiSpec, coarse: bool = False, modes: int = 200):
    """Pi(z) divided by the first-mode coefficient; O(1) in double precision."""
    z = np.asarray(z, dtype=float)
    w, c = (spec.w_coarse, spec.c_coarse) if coarse else (spec.w, spec.c)
    base = _mode_log_coef(spec, 1)
    out = np.zeros(z.shape)
    for m in range(1, modes + 1):
        rel = math.exp(_mode_log_coef(spec, m) - base)
        if rel < 1e-20:
            break
        phase = 2.0 * math.pi * m * (spec.q * c[None, :] + (z.reshape(-1, 1) - spec.shift))
        out += rel * (np.sin(phase) @ w).reshape(z.shape)
    return out if out.ndim else float(out)


def pi_scale(spec: PiSpec):
    """First-mode coefficient as an mpf (it underflows double for realistic q, beta)."""
    return mpmath.exp(mpmath.mpf(_mode_log_coef(spec, 1)))


def pi_function(z, spec: PiSpec, method: str = "fourier"):
    """Pi(z) = int (2 s^2 - 1) e^{-s^2} pi(s; z) ds.

    ``fourier``: from ((a)) = 1/2 - sum_m sin(2 pi m a) / (pi m) the s-integral of
    each mode is closed-form, giving an mpf that keeps its relative accuracy.
    ``quadrature``: nested double-precision rule, s over [-8, 8] split at every
    jump of the fractional part, xi by the PiSpec Gauss rule.
    """
    if method == "fourier":
        scale = pi_scale(spec)
        shape = pi_shape(z, spec)
        if np.ndim(shape):
            return [scale * mpmath.mpf(float(v)) for v in np.ravel(shape)]
        return scale * mpmath.mpf(shape)
    if method == "quadrature":
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.array([_pi_nested(float(zz), spec) for zz in zs])
        return out if np.ndim(z) else float(out[0])
    raise ValueError(f"unknown method {method!r}")


_SX, _SW = np.polynomial.legendre.leggauss(8)


def _pi_nested(z: float, spec: PiSpec, s_max: float = 8.0, max_piece: float = 0.25) -> float:
    k = spec.k
    total = 0.0
    for wi, ci in zip(spec.w, spec.c):
        a = spec.q * ci + z - spec.shift
        m_lo = math.ceil(a - k * s_max)
        m_hi = math.floor(a + k * s_max)
        jumps = (np.arange(m_lo, m_hi + 1) - a) / k
        edges = np.concatenate([[-s_max], jumps[(jumps > -s_max) & (jumps < s_max)], [s_max]])
        # subdivide long pieces so the Gaussian factor is well resolved
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            cnt = max(1, math.ceil((hi - lo) / max_piece))
            pieces.append(np.linspace(lo, hi, cnt + 1))
        e = np.concatenate([pc[:-1] for pc in pieces] + [edges[-1:]])
        lo, hi = e[:-1, None], e[1:, None]
        s = 0.5 * (hi - lo) * _SX + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * _SW
        # midpoint fixes the floor on each piece, so no node sees a jump
        fl = np.floor(a + k * 0.5 * (lo + hi))
        val = (2 * s * s - 1) * np.exp(-s * s) * (a + k * s - fl)
        total += wi * float((val * wt).sum())
    return total


def pi_error_estimate(spec: PiSpec, z):
    """Bound on |Pi| error from xi-rule halving and level-curve tolerance, as an mpf."""
    z = np.asarray(z, dtype=float)
    d = np.max(np.abs(pi_shape(z, spec) - pi_shape(z, spec, coarse=True)))
    c_err = 2.0 * math.pi * spec.q * spec.c_tol * float(np.abs(spec.w).sum())
    return pi_scale(spec) * mpmath.mpf(float(d) + c_err)


def z_of_j(j, spec_q: int, beta: float):
    """z_j = 2 q sqrt(|j| / beta)."""
    return 2.0 * spec_q * np.sqrt(np.abs(np.asarray(j, dtype=float)) / beta)


@dataclass
class AuditReport:
    T: int
    ok: bool
    message: str
    level: float = 0.0
    a: float = 0.0
    b: float = 0.0
    n_audit: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    j_n: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    k_n: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    predicted_sum: float = 0.0  # in units of the first-mode coefficient
    pi_log10_scale: float = 0.0
    measured_tv: float | None = None


def _longest_run(mask: np.ndarray) -> tuple[int, int]:
    best, cur, start, best_start = 0, 0, 0, 0
    for i, v in enumerate(mask):
        if v:
            if cur == 0:
                start = i
            cur += 1
            if cur > best:
                best, best_start = cur, start
        else:
            cur = 0
    return best_start, best_start + best


def tv_lower_bound_audit(T: int, spec: PiSpec, measured_tv: float | None = None,
                         grid: int = 1024) -> AuditReport:
    """Predicted sum_{sqrt T <= j <= T} |Pi(z_j)| / j next to the measured TV."""
    zg = (np.arange(grid) + 0.5) / grid
    shape = np.abs(pi_shape(zg, spec))
    level = 0.5 * float(shape.max())
    scale_log10 = float(mpmath.log10(pi_scale(spec)))
    if not level > 0:
        return AuditReport(T, False, "Pi vanishes on the z grid for this g", pi_log10_scale=scale_log10,
                           measured_tv=measured_tv)
    i0, i1 = _longest_run(shape >= level)
    a, b = zg[i0] - 0.5 / grid, zg[i1 - 1] + 0.5 / grid
    c = spec.beta / (4.0 * spec.q**2)
    n_max = int(math.ceil(math.sqrt(T / c))) + 2
    n = np.arange(0, n_max + 1)
    j_n = np.ceil(c * (n + a) ** 2).astype(np.int64)
    k_n = np.floor(c * (n + b) ** 2).astype(np.int64)
    # small n give intervals J_n too short to hold an integer
    keep = (j_n >= math.sqrt(T)) & (k_n <= T) & (j_n <= k_n)
    j = np.arange(int(math.ceil(math.sqrt(T))), T + 1)
    pred = float((np.abs(pi_shape(z_of_j(j, spec.q, spec.beta), spec)) / j).sum())
    return AuditReport(T, True, "ok", level, a, b, n[keep], j_n[keep], k_n[keep], pred,
                       scale_log10, measured_tv)


@dataclass
class SweepRow:
    T: int
    tv_V: float
    tv_u: float
    tv_u_row: float
    l1_ratio: float


@dataclass
class SweepReport:
    rows: list
    slope: float
    intercept: float
    slope_ci: tuple
    increments: np.ndarray
    cv: float


def measure_run(result, T: int) -> SweepRow:
    """TVs on [-T, -sqrt T] and the unit-shift L1 ratio of one run."""
    j_hi = -int(math.ceil(math.sqrt(T)))
    tv_V = result.V.tv(-T, j_hi)
    tv_u = result.u_final.tv(-T, j_hi)
    u0 = result.checkpoints[-2 * T][0]
    # (u, v) and their copies shifted right by one cell
    dv = np.abs(result.v_final.values[1:] - result.v_final.values[:-1]).sum()
    du = np.abs(u0.values[1:] - u0.values[:-1]).sum()
    return SweepRow(T, tv_V, tv_u, total_variation(result.u_final.values), float(dv / du))


def tv_sweep(T_list, params: FluxParams | None = None, level: float = 0.95) -> SweepReport:
    """Run each T, fit TV(V) = alpha + slope ln T, and collect per-doubling increments."""
    T_list = sorted(int(t) for t in T_list)
    if len(T_list) < 4:
        raise ValueError("the ln T fit needs at least 4 horizons")
    params = params or FluxParams()
    rows = [measure_run(run(RunConfig(params=params, T=T)), T) for T in T_list]
    x = np.log([r.T for r in rows])
    y = np.array([r.tv_V for r in rows])
    fit = linregress(x, y)
    half = student_t.ppf(0.5 + level / 2, len(rows) - 2) * fit.stderr
    inc = np.diff(y) / np.diff(np.log2([r.T for r in rows]))
    cv = float(np.std(inc) / np.mean(inc)) if np.mean(inc) != 0 else float("inf")
    return SweepReport(rows, float(fit.slope), float(fit.intercept),
                       (float(fit.slope - half), float(fit.slope + half)), inc, cv)
