import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lhylab.potentials import (LocalizationProfile, ParameterError, PotentialParams, RadialFunction,
                               chi_1d, chi_derivative_bounds, localization_profiles, nu_hat, potential,
                               radial_fourier_transform, v_hat_R)


def test_params_validation():
    with pytest.raises(ParameterError):
        PotentialParams(0.0, 1.0)
    with pytest.raises(ParameterError):
        PotentialParams(1.0, -1.0)
    p = PotentialParams(0.1, 1.0, rho=2.0)
    assert p.Y == 2.0 * 0.1 ** 3
    with pytest.raises(ParameterError):
        PotentialParams(2.0, 1.0).require_weak()


def test_from_scaling():
    p = PotentialParams.from_scaling(1e-6, 0.05)
    assert p.ratio == pytest.approx(1e-6 ** 0.45, rel=1e-14)
    assert p.Y == pytest.approx(1e-6, rel=1e-14)


def test_nu_hat_examples():
    p = PotentialParams(1.0, 1.0)
    assert nu_hat(0.0, p) == pytest.approx(8 * np.pi, rel=1e-15)
    assert nu_hat(1.0, p) == pytest.approx(2 * np.pi, rel=1e-15)
    assert nu_hat(10.0, p) * 1e4 / (8 * np.pi) == pytest.approx(1 / 1.01 ** 2, rel=1e-12)


def test_v_hat_examples(rng):
    assert v_hat_R(0.0, 1.0) == pytest.approx(8 * np.pi)
    R = 0.7
    assert v_hat_R(1 / R, R) == pytest.approx(2 * np.pi * R ** 3)
    p = PotentialParams(0.3, 2.0)
    k = rng.uniform(0, 10, 20)
    np.testing.assert_allclose(p.a0 / p.R0 ** 3 * v_hat_R(k, p.R0), nu_hat(k, p), rtol=1e-14)


def test_nu_hat_matches_radial_transform(rng):
    # independent route: the 3D radial Fourier transform of the position-space potential
    p = PotentialParams(0.2, 1.5)
    for k in np.concatenate([[0.0], rng.uniform(0.01, 20, 49)]):
        val, _ = radial_fourier_transform(lambda r: potential(r, p), k)
        assert val == pytest.approx(nu_hat(k, p), rel=1e-8)


def test_profile_examples(profile):
    lp = profile
    assert lp.chi1(0.0) == 1.0
    assert lp.chi1(0.46) == 0.0
    assert lp.h(np.zeros(3)) == pytest.approx(1.0, abs=1e-12)
    assert lp.h(np.array([1.0, 0, 0])) == 0.0
    assert lp.h(np.array([0.2, -1.3, 0.1])) == 0.0
    assert 1.0 <= lp.gamma <= 1.953125


@given(st.floats(0.02, 0.45), st.floats(-0.6, 0.6))
@settings(max_examples=60, deadline=None)
def test_chi_plateau_support_range(t, s):
    c = float(chi_1d(s, t))
    assert 0.0 <= c <= 1.0
    assert c == float(chi_1d(-s, t))
    if abs(s) <= (1 - 2 * t) / 2:
        assert c == 1.0
    if abs(s) >= (1 - t) / 2:
        assert c == 0.0


def test_h_even_and_quadratic_maximum(profile):
    lp = profile
    z = np.array([0.13, -0.4, 0.27])
    assert lp.h(z) == pytest.approx(lp.h(-z), abs=1e-14)
    e = 1e-3
    second = (lp.h(np.array([e, 0, 0])) - 2 * lp.h(np.zeros(3)) + lp.h(np.array([-e, 0, 0]))) / e ** 2
    assert second < 0


def test_gamma_quadrature_matches_analytic():
    for t in (0.05, 0.1, 0.3):
        lp = localization_profiles(t)
        assert lp.gamma == pytest.approx(lp.gamma_analytic(), rel=1e-10)


def test_localization_validation():
    with pytest.raises(ParameterError):
        localization_profiles(0.6)
    with pytest.raises(ParameterError):
        localization_profiles(0.1, -1.0)


def test_chi_derivative_bounds():
    t = 0.1
    bounds = chi_derivative_bounds(t, m_max=3)
    s = np.linspace(-0.5, 0.5, 20001)
    ds = s[1] - s[0]
    vals = chi_1d(s, t)
    for m in (1, 2):
        vals = np.gradient(vals, ds)
        assert np.max(np.abs(vals)) <= bounds[m] * t ** -m * 1.01


def test_radial_function_tail():
    k = np.geomspace(1e-2, 1e2, 200)
    rf = RadialFunction(k, 1 / (1 + k ** 2) ** 2)
    assert rf(1e3) == pytest.approx(1 / (1 + 1e6) ** 2, rel=1e-2)
    assert rf(3.0) == pytest.approx(1 / 100, rel=1e-5)
