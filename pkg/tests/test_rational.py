from fractions import Fraction

import pytest

from lrqsim.rational import format_rational, rational


def test_accepts_plain_forms():
    assert rational(3) == Fraction(3)
    assert rational("3") == Fraction(3)
    assert rational("3/4") == Fraction(3, 4)
    assert rational("2.5") == Fraction(5, 2)
    assert rational(Fraction(7, 3)) == Fraction(7, 3)


def test_unit_suffixes():
    assert rational("8M") == Fraction(8_000_000)
    assert rational("8k") == Fraction(8_000)
    assert rational("1G") == Fraction(10**9)


def test_rejects_bool():
    with pytest.raises(TypeError):
        rational(True)


def test_format_shows_fraction_and_decimal():
    text = format_rational(Fraction(8, 5))
    assert "8/5" in text and "1.6" in text


def test_format_integer_is_plain():
    assert format_rational(Fraction(3)) == "3"
