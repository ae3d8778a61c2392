import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from dihedral.bessel import bessel_j, bessel_j_all


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    J = bessel_j_all(40, 0.0)
    assert J[0] == 1.0 and np.all(J[1:] == 0)


def test_first_zero_of_j0():
    # bisection on mpmath's J0 locates the zero independently
    x0 = float(mpmath.findroot(lambda x: mpmath.besselj(0, x), 2.4))
    assert abs(x0 - 2.40482555769577) < 1e-13
    assert abs(bessel_j(0, x0)) < 1e-12


def test_domain_errors():
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        bessel_j(-1, 1.0)
    with pytest.raises(ValueError):
        bessel_j(1.5, 1.0)
    with pytest.raises(ValueError):
        bessel_j_all(3, [1.0, np.inf])


def test_shape():
    x = np.linspace(0, 5, 12).reshape(3, 4)
    assert bessel_j_all(7, x).shape == (8, 3, 4)
    assert isinstance(bessel_j(2, 1.5), float)


@pytest.mark.parametrize("x", [1e-8, 0.3, 1.999, 2.001, 7.5, 24.9, 25.1, 60.0, 333.3, 2000.0, 9999.0])
def test_against_mpmath(x):
    J = bessel_j_all(60, x)
    for nu in (0, 1, 2, 5, 12, 30, 60):
        ref = float(mpmath.besselj(nu, mpmath.mpf(x)))
        assert abs(J[nu] - ref) < 1e-12


def test_against_scipy_on_grid():
    x = np.concatenate([np.linspace(0, 30, 3001), np.linspace(30, 1e4, 4001)])
    J = bessel_j_all(66, x)
    for nu in range(0, 67, 3):
        assert np.max(np.abs(J[nu] - jv(nu, x))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 500.0), st.integers(1, 60))
def test_recurrence(x, nu):
    J = bessel_j_all(nu + 1, x)
    assert abs(J[nu - 1] + J[nu + 1] - 2 * nu / x * J[nu]) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 500.0))
def test_sum_rule(x):
    J = bessel_j_all(int(x) + 60, x)
    assert abs(J[0] ** 2 + 2 * np.sum(J[1:] ** 2) - 1) < 1e-10


def test_large_argument_asymptotics():
    x = 5000.0
    for nu in (0, 6, 12):
        lead = math.sqrt(2 / (math.pi * x)) * math.cos(x - nu * math.pi / 2 - math.pi / 4)
        # first omitted term: (4 nu^2 - 1)/(8x) sqrt(2/(pi x))
        assert abs(bessel_j(nu, x) - lead) < 1.5 * (4 * nu * nu + 1) / (8 * x) * math.sqrt(2 / (math.pi * x))
