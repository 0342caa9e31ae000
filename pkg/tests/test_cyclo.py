"""Exact cyclotomic scalar arithmetic."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kachain.cyclo import (
    CycloScalar,
    cyclotomic_polynomial,
    format_scalar,
    parse_scalar,
    sqrt_integer_in_cyclotomic,
)
from kachain.errors import ScalarParseError


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(2) == (1, 1)
    assert cyclotomic_polynomial(4) == (1, 0, 1)
    assert cyclotomic_polynomial(8) == (1, 0, 0, 0, 1)
    assert cyclotomic_polynomial(12) == (1, 0, -1, 0, 1)


def test_sqrt_perfect_square_has_conductor_one():
    s = sqrt_integer_in_cyclotomic(4)
    assert s.conductor == 1
    assert s.as_fraction() == 2


def test_sqrt_two_is_zeta8_sum():
    s = sqrt_integer_in_cyclotomic(2)
    expected = CycloScalar.zeta_power(8, 1) + CycloScalar.zeta_power(8, 7)
    assert s == expected
    assert s * s == CycloScalar.rational(2, 8)


def test_sqrt_six_squares_exactly():
    s = sqrt_integer_in_cyclotomic(6)
    assert s.conductor == 24
    assert s * s == CycloScalar.rational(6, 24)
    assert s.to_complex().real > 0


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 8, 9, 12])
def test_sqrt_table(n):
    s = sqrt_integer_in_cyclotomic(n)
    assert s * s == n
    assert abs(s.to_complex() - n ** 0.5) < 1e-9


scalars = st.builds(
    lambda coeffs: sum(
        (CycloScalar.zeta_power(12, e) * Fraction(num, den)
         for e, (num, den) in enumerate(coeffs)),
        CycloScalar(12)),
    st.lists(st.tuples(st.integers(-9, 9), st.integers(1, 9)), min_size=1, max_size=4),
)


@settings(max_examples=60, deadline=None)
@given(scalars, scalars)
def test_field_axioms(a, b):
    assert (a + b) - b == a
    assert a * b == b * a
    if not b.is_zero():
        assert (a * b) / b == a
    assert (a * b).conj() == a.conj() * b.conj()
    assert a.conj().conj() == a


def test_conjugation_inverts_root():
    z = CycloScalar.zeta_power(12, 1)
    assert z.conj() == CycloScalar.zeta_power(12, 11)
    assert (z * z.conj()) == 1


def test_embedding_and_mixed_arithmetic():
    a = CycloScalar.zeta_power(4, 1)       # i
    b = CycloScalar.zeta_power(8, 1)
    assert a.embed(8) == CycloScalar.zeta_power(8, 2)
    assert (a * b) == CycloScalar.zeta_power(8, 3)


def test_parse_and_format_round_trip():
    s = parse_scalar("1/2*z^0 + -1/2*z^3", 8)
    expected = CycloScalar.rational(Fraction(1, 2), 8) - \
        CycloScalar.zeta_power(8, 3) * Fraction(1, 2)
    assert s == expected
    assert parse_scalar(format_scalar(s), 8) == s
    assert parse_scalar("0", 8).is_zero()
    assert parse_scalar("2", 8) == 2


def test_parse_rejects_garbage():
    with pytest.raises(ScalarParseError):
        parse_scalar("1/0*z^1", 8)
    with pytest.raises(ScalarParseError):
        parse_scalar("z^9", 8)
    with pytest.raises(ScalarParseError):
        parse_scalar("spam", 8)


def test_inverse_of_irrational():
    s = sqrt_integer_in_cyclotomic(2)
    assert s * s.inverse() == 1
    assert s.inverse() * 2 == s
