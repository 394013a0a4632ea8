import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from godunov_tv.flux import (
    ConfigError, FluxParams, f_eval, f_prime, f_second, kappa_coeffs, phi_of_sigma,
    sigma_of_b, sigma_prime,
)

P06 = FluxParams(mu=0.6, lambda0_p=3, lambda0_q=4)
# ln(0.4 + 0.6 e) at 50 digits, frozen
F1_MU06 = 0.7085130668623151


def test_frozen_value_matches_mpmath():
    with mpmath.workdps(50):
        ref = mpmath.log(mpmath.mpf("0.4") + mpmath.mpf("0.6") * mpmath.e)
    assert float(ref) == pytest.approx(F1_MU06, rel=2e-16)


def test_defaults():
    p = FluxParams()
    assert p.mu == 0.52 and p.lambda0 == 0.6 and p.lam == 0.5
    assert p.nu == pytest.approx(0.48, abs=0)
    assert p.beta == pytest.approx(0.1)
    assert p.min_horizon() == 40


@pytest.mark.parametrize("kw, fragment", [
    (dict(mu=0.4), "mu=0.4"),
    (dict(mu=1.0), "mu=1.0"),
    (dict(lambda0_p=6, lambda0_q=10), "lowest terms"),
    (dict(lambda0_p=1, lambda0_q=2), "(mu, 1)"),
    (dict(lambda0_p=1, lambda0_q=0), "positive"),
    (dict(lam=0.6), "lam=0.6"),
])
def test_params_rejected(kw, fragment):
    with pytest.raises(ConfigError) as exc:
        FluxParams(**kw)
    assert any(fragment in v for v in exc.value.violations)


def test_all_violations_reported():
    with pytest.raises(ConfigError) as exc:
        FluxParams(mu=0.4, lambda0_p=2, lambda0_q=4, lam=0.45)
    assert len(exc.value.violations) == 3


@pytest.mark.parametrize("u, mu, expected, tol", [
    (0.0, 0.6, 0.0, 0.0),
    (700.0, 0.75, 700.0 + math.log(0.75), 1e-12),
    (1.0, 0.6, F1_MU06, 1e-15),
    (-800.0, 0.6, math.log(0.4), 1e-15),
])
def test_f_eval(u, mu, expected, tol):
    p = FluxParams(mu=mu, lambda0_p=4, lambda0_q=5)
    assert abs(f_eval(u, p) - expected) <= tol + 1e-15 * abs(expected)


def test_f_eval_small_u_relative():
    # f(u) ~ mu u; log1p form keeps relative precision
    assert f_eval(1e-12, P06) == pytest.approx(0.6e-12, rel=1e-9)


def test_f_prime():
    assert f_prime(0.0, P06) == pytest.approx(0.6, abs=1e-15)
    h = 1e-5
    fd = (f_eval(1 + h, P06) - f_eval(1 - h, P06)) / (2 * h)
    assert abs(f_prime(1.0, P06) - fd) < 1e-8
    u = np.linspace(-30, 30, 2001)
    fp = f_prime(u, P06)
    assert np.all((fp > 0) & (fp < 1))
    assert np.all(np.diff(fp) >= 0)


def test_convexity_and_second_derivative():
    u = np.linspace(-10, 10, 401)
    h = 1e-4
    fd = (f_eval(u + h, P06) - 2 * f_eval(u, P06) + f_eval(u - h, P06)) / h**2
    assert np.all(fd > 0)
    np.testing.assert_allclose(f_second(u, P06), fd, atol=1e-6)
    closed = 0.6 * 0.4 * np.exp(u) / (0.4 + 0.6 * np.exp(u)) ** 2
    np.testing.assert_allclose(f_second(u, P06), closed, rtol=1e-10)


@pytest.mark.parametrize("b", [0.1, 1.0, 5.0])
def test_sigma_relation(b):
    s = sigma_of_b(b, P06)
    assert 0.6 < s < 1
    assert abs(0.4 + 0.6 * math.exp(b) - math.exp(b * s)) <= 1e-12 * math.exp(b * s)


def test_sigma_values_and_limit():
    assert sigma_of_b(1.0, P06) == pytest.approx(F1_MU06, abs=1e-15)
    assert sigma_of_b(1e-10, P06) == pytest.approx(0.6, abs=1e-9)
    b = np.geomspace(1e-6, 600, 500)
    assert np.all(np.diff(sigma_of_b(b, P06)) > 0)
    with pytest.raises(ValueError):
        sigma_of_b(0.0, P06)


def test_sigma_prime_fd():
    b, h = 2.0, 1e-5
    fd = (sigma_of_b(b + h, P06) - sigma_of_b(b - h, P06)) / (2 * h)
    assert sigma_prime(b, P06) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("b", [0.5, 1.0, 3.0])
def test_phi_roundtrip(b):
    assert abs(phi_of_sigma(sigma_of_b(b, P06), P06) - b) <= 1e-9


def test_phi_at_075_by_independent_bisection():
    b = phi_of_sigma(0.75, P06)
    assert abs(f_eval(b, P06) - 0.75 * b) < 1e-12
    ref = mpmath.findroot(lambda x: mpmath.log(0.4 + 0.6 * mpmath.exp(x)) - 0.75 * x,
                          (0.5, 20), solver="bisect")
    assert b == pytest.approx(float(ref), rel=1e-12)


def test_phi_degenerate_end_and_errors():
    assert phi_of_sigma(0.6 + 1e-9, P06) < 1e-7
    for bad in (0.6, 0.5, 1.0):
        with pytest.raises(ValueError):
            phi_of_sigma(bad, P06)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.6 + 1e-6, max_value=0.999))
def test_sigma_phi_identity(sigma):
    assert sigma_of_b(phi_of_sigma(sigma, P06), P06) == pytest.approx(sigma, abs=1e-10)


@pytest.mark.parametrize("p", [FluxParams(), P06])
def test_kappa(p):
    kap = kappa_coeffs(p)
    assert kap.kappa0 == phi_of_sigma(p.lambda0, p)
    assert kap.kappa0 > 0
    assert abs(kap.kappa1 - 1.0 / sigma_prime(kap.kappa0, p)) < 1e-6
    rem = [abs(phi_of_sigma(p.lambda0 + d, p) - kap(d)) for d in (1e-2, 5e-3)]
    assert 4 <= rem[0] / rem[1] <= 16


def test_default_kappa_frozen():
    kap = kappa_coeffs(FluxParams())
    assert (kap.kappa0, kap.kappa1, kap.kappa2) == pytest.approx((0.65805, 8.59315, 6.71303), abs=5e-5)
