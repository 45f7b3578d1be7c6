"""Exact rational time and rate arithmetic.

All timestamps, lengths and rates in the package are `fractions.Fraction`
values. Nothing in the simulator or the bound engine ever rounds, so
equalities such as "a shaper fed conformant traffic adds zero delay" can be
asserted exactly in tests.
"""

from __future__ import annotations

from fractions import Fraction

#: Multipliers accepted as a suffix on string values ("10M" = 10**7).
_SUFFIXES = {
    "k": 10**3,
    "K": 10**3,
    "M": 10**6,
    "G": 10**9,
}


def rational(value) -> Fraction:
    """Convert *value* to an exact Fraction.

    Accepts Fraction, int, and strings of the form "3", "2.5", "3/4" or
    "10M" (decimal suffixes k/K/M/G). Floats are converted through their
    decimal repr so that e.g. 0.1 means one tenth, not the nearest binary
    float.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational quantity")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        s = value.strip()
        mult = 1
        if s and s[-1] in _SUFFIXES:
            mult = _SUFFIXES[s[-1]]
            s = s[:-1]
        return Fraction(s) * mult
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def format_rational(x: Fraction, digits: int = 12) -> str:
    """Render *x* as ``fraction (decimal)`` with *digits* significant digits."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    approx = float(x)
    return f"{x.numerator}/{x.denominator} ({approx:.{digits}g})"
