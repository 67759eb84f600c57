from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lhylab.potentials import ParameterError, PotentialParams
from lhylab.scattering import (a1_closed_form, a1_quadrature, born_coefficients, born_series_coefficients,
                               scattering_length, scattering_length_closed_form,
                               scattering_length_shooting)


@pytest.mark.parametrize("ratio", [0.01, 0.1, 0.5])
def test_shooting_vs_bessel_oracle(ratio):
    p = PotentialParams(ratio, 1.0)
    a_ref = scattering_length_closed_form(p)
    a = scattering_length_shooting(p).a
    assert abs(a - a_ref) / a_ref <= 1e-8


def test_free_limit():
    p = PotentialParams(1e-8, 1.0)
    assert scattering_length(p).a / p.a0 == pytest.approx(1.0, abs=1e-6)


def test_value_at_point_one():
    # a0 = 0.1, R0 = 1: oracle value, and a0 + a1 within O(r^3) of it
    p = PotentialParams(0.1, 1.0)
    a = scattering_length(p).a
    assert a == pytest.approx(0.0969779312, rel=1e-8)
    a0, a1 = born_coefficients(p)
    assert abs(a - (a0 + a1)) <= 0.2 * p.ratio ** 3


@pytest.mark.xfail(strict=True, reason="the quoted 0.090365 uses the 5 pi/16 form; the solution gives 0.09698")
def test_quoted_value_at_point_one():
    p = PotentialParams(0.1, 1.0)
    assert scattering_length(p).a == pytest.approx(0.090365, rel=1e-3)


def test_literal_born_examples():
    assert a1_closed_form(PotentialParams(1.0, 1.0), literal=True) == pytest.approx(-5 * np.pi / 16, rel=1e-15)
    assert a1_closed_form(PotentialParams(1.0, 10.0), literal=True) == pytest.approx(-5 * np.pi / 160, rel=1e-15)
    for a0, R0 in [(1.0, 1.0), (0.3, 2.0), (0.01, 0.5)]:
        p = PotentialParams(a0, R0)
        val, _ = a1_quadrature(p, literal=True)
        assert abs(val / a1_closed_form(p, literal=True) - 1) <= 1e-9


def test_physical_a1_matches_ode():
    # physical a1 = -(5/16) a0^2/R0 from both quadrature and the exact series
    p = PotentialParams(0.02, 1.0)
    val, _ = a1_quadrature(p)
    assert val == pytest.approx(-5 / 16 * p.a0 ** 2 / p.R0, rel=1e-10)
    assert born_series_coefficients(3)[:3] == [Fraction(1), Fraction(-5, 16), Fraction(23, 216)]


def test_born_remainder_scaling():
    ratios = np.geomspace(1e-3, 1e-1, 5)
    K = []
    for r in ratios:
        p = PotentialParams(r, 1.0)
        a = scattering_length_closed_form(p)
        a0, a1 = born_coefficients(p)
        K.append(abs(a - (a0 + a1)) / a0 / r ** 2)
    K = np.array(K)
    assert K.max() / K.min() < 1.2 ** 2


@given(st.floats(1e-3, 0.9), st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_scaling_covariance_and_sign(ratio, lam):
    p = PotentialParams(ratio, 1.0)
    q = PotentialParams(ratio * lam, lam)
    a, b = scattering_length(p).a, scattering_length(q).a
    assert b == pytest.approx(lam * a, rel=1e-10)
    assert a < p.a0
    assert born_coefficients(p)[1] < 0


def test_born_method_and_validation():
    p = PotentialParams(0.05, 1.0)
    sol = scattering_length(p, method="born", born_order=4)
    assert sol.a == pytest.approx(scattering_length_closed_form(p), rel=1e-6)
    with pytest.raises(ParameterError):
        scattering_length(p, method="nonsense")
