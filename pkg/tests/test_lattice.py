import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dihedral.lattice import LatticeConfig, MClass, c_m, cos_coeff, m_class


@pytest.mark.parametrize("m,k,expected", [(6, 5, 1), (2, 1, Fraction(-1, 2)), (3, 1, -1)])
def test_cos_coeff_examples(m, k, expected):
    assert cos_coeff(LatticeConfig(m, 1), k) == expected


@pytest.mark.parametrize("m,expected", [(6, 2), (4, -1), (5, 1), (3, -2), (2, -1), (12, 2)])
def test_c_m_case_table(m, expected):
    assert c_m(LatticeConfig(m, 1)) == expected


@pytest.mark.parametrize("m,cls", [(12, MClass.SIX), (9, MClass.ODD_THREE), (7, MClass.COPRIME),
                                   (4, MClass.EVEN_NOT_THREE)])
def test_m_class(m, cls):
    assert m_class(LatticeConfig(m, 2)) is cls


@pytest.mark.parametrize("m,N", [(0, 1), (3, 0), (-2, 1), (2.5, 1)])
def test_invalid_config(m, N):
    with pytest.raises(ValueError):
        LatticeConfig(m, N)


@given(st.integers(1, 60), st.integers(-50, 50))
def test_cos_coeff_matches_float_and_symmetries(m, k):
    cfg = LatticeConfig(m, 1)
    c = cos_coeff(cfg, k)
    assert math.isclose(float(c), math.cos(m * math.pi * k / 3), abs_tol=1e-12)
    assert c == cos_coeff(cfg, -k) == cos_coeff(cfg, k + 6)
    assert 2 * c in (-2, -1, 1, 2)


@given(st.integers(1, 60))
def test_c_2m_identity(m):
    assert c_m(LatticeConfig(2 * m, 1)) == (-1) ** m * c_m(LatticeConfig(m, 1))
    assert c_m(LatticeConfig(m, 1)) == 2 * cos_coeff(LatticeConfig(m, 1), 1)
