import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.stats import linregress

from godunov_tv import analysis as an
from godunov_tv.coupled_sim import RunConfig, SourceFn, run
from godunov_tv.flux import FluxParams
from godunov_tv.shock_solution import ExactSolution

P = FluxParams()


@pytest.fixture(scope="module")
def run64():
    res = run(RunConfig(P, T=64))
    return res, an.build_repr_cache(res.solution)


@pytest.fixture(scope="module")
def run256():
    res = run(RunConfig(P, T=256))
    return res, an.build_repr_cache(res.solution)


@pytest.fixture(scope="module")
def pi_default():
    return an.build_pi_spec(ExactSolution(P, 256))


@pytest.fixture(scope="module")
def pi_large():
    # q and beta chosen so that Pi is O(1e-2) and double-precision quadrature can see it
    return an.build_pi_spec(ExactSolution(P, 256), q=1, beta=3.0)


@pytest.mark.parametrize("a, expected", [
    (Fraction(7, 3), Fraction(1, 3)),
    (Fraction(-1, 4), Fraction(3, 4)),
    (-3, 0),
    (2.75, 0.75),
    (-0.3, 0.7),
])
def test_frac(a, expected):
    assert an.frac(a) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.fractions(min_value=-50, max_value=50, max_denominator=10**6),
       st.integers(1, 12), st.integers(-30, 30))
def test_frac_part_identity(a, q, p):
    assume(math.gcd(p, q) == 1)
    lhs, rhs = an.frac_part_sum(a, p, q)
    assert lhs == rhs


def test_window_literal_and_default():
    lo, hi = an.window_I(-400, 0.1, factor=1.0)
    assert (lo, hi) == pytest.approx((4000 - 400**0.55, 4000 + 400**0.55))
    lo2, hi2 = an.window_I(-400, 0.1)
    assert hi2 - lo2 == pytest.approx(2 * 4 / 0.1**1.5 * 400**0.55)


def test_representation_matches_stepping(run64):
    res, cache = run64
    rep = an.v_representation(cache, res.V.j_min, res.V.j_max)
    assert np.max(np.abs(rep.values - res.V.values)) <= 1e-10


def test_representation_T256(run256):
    res, cache = run256
    rep = an.v_representation(cache, -300, 0)
    assert np.max(np.abs(rep.values - res.V.window(-300, 0))) <= 5 * 2 * 1e-8


def test_representation_rejects_unreached_levels():
    sol = ExactSolution(P, 64)
    with pytest.raises(ValueError):
        an.build_repr_cache(sol, SourceFn(sol.u_sup + 0.5, 0.1))


def test_truncation_summable(run256):
    res, cache = run256
    full = an.v_representation(cache, -257, -16)
    tr = an.v_representation(cache, -257, -16, truncate=True)
    assert np.abs(full.values - tr.values).sum() < 1e-10


def test_ab_split_summable(run64, run256):
    sums = []
    for res, cache in (run64, run256):
        T = res.solution.T
        jh = -int(math.ceil(math.sqrt(T)))
        j = np.arange(-T, jh + 1)
        A, B = an.ab_split(cache, j)
        dV = res.V.window(-T, jh) - res.V.window(-T - 1, jh - 1)
        sums.append((np.abs(dV - (A - B)).sum(), np.abs(B).sum()))
    assert sums[1][0] < sums[0][0] < 0.2
    assert sums[1][1] < sums[0][1] < 1.0


def test_pi_periodic_and_mean(pi_default):
    z = np.linspace(0, 1, 257)[:-1]
    a = an.pi_shape(z, pi_default)
    b = an.pi_shape(z + 1.0, pi_default)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))
    assert abs(a.mean()) <= 1e-12 * np.max(np.abs(a))


def test_pi_fourier_vs_quadrature(pi_large):
    z = np.linspace(0, 1, 7)
    four = np.array([float(v) for v in an.pi_function(z, pi_large)])
    nested = an.pi_function(z, pi_large, method="quadrature")
    assert np.max(np.abs(four)) > 1e-3
    np.testing.assert_allclose(four, nested, atol=1e-7)
    with pytest.raises(ValueError):
        an.pi_function(0.0, pi_large, method="simpson")


def test_pi_nondegenerate_default(pi_default):
    z = (np.arange(512) + 0.5) / 512
    peak = max(abs(v) for v in an.pi_function(z, pi_default))
    err = an.pi_error_estimate(pi_default, z)
    assert peak > 10 * err
    assert peak > 0


def test_z_of_j_symmetric():
    j = np.array([-900, 900, -4])
    z = an.z_of_j(j, 5, 0.1)
    assert z[0] == z[1] == pytest.approx(2 * 5 * math.sqrt(9000))


def test_audit(pi_default):
    rep = an.tv_lower_bound_audit(256, pi_default, measured_tv=1.0)
    assert rep.ok and rep.a < rep.b
    assert np.all(rep.j_n <= rep.k_n)
    assert rep.pi_log10_scale < -1000
    big = an.tv_lower_bound_audit(1024, pi_default)
    ratio = big.predicted_sum / rep.predicted_sum
    assert ratio == pytest.approx(math.log(1024) / math.log(256), rel=0.2)


def test_tv_sweep_needs_four_points():
    with pytest.raises(ValueError):
        an.tv_sweep([64, 128, 256])


def test_measure_run(run64):
    res, _ = run64
    row = an.measure_run(res, 64)
    assert row.tv_V == pytest.approx(res.V.tv(-64, -8))
    assert row.tv_u < row.tv_u_row
    assert row.l1_ratio > 0


@pytest.fixture(scope="module")
def curve65536():
    sol = ExactSolution(P, 65536)
    return an.LevelCurveCache(sol, sol.constants.a0)


def test_level_curve_cache(curve65536):
    sol = curve65536.sol
    s = np.array([10.0, 300.0, 5000.0, 100000.0])
    exact = sol.level_curve(-s, np.full(4, curve65536.xi))
    np.testing.assert_allclose(curve65536.x(s), exact, atol=1e-6)


@pytest.mark.slow
def test_kernel_sum_decay(curve65536):
    js = -np.round(np.geomspace(1e2, 1e4, 7)).astype(int)
    vals = {w: np.array([an.kernel_sums(curve65536, int(j), w) for j in js]) for w in "HhlMN"}
    aj = np.log(np.abs(js))
    slope = lambda v: linregress(aj, np.log(np.abs(v))).slope
    assert slope(vals["H"] - vals["h"]) <= -1.3
    assert slope(vals["l"]) <= -1.3
    assert slope(vals["M"] - vals["N"]) < -1.0
    with pytest.raises(ValueError):
        an.kernel_sums(curve65536, -100, "Q")
