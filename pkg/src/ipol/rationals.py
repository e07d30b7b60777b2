"""Exact rational parsing and formatting.

Every rate, time, and weight in the toolchain is a `fractions.Fraction` so
that derived quantities are exact and reports are byte-reproducible.  Text
fields accept decimal integers, decimal fractions with '.' as the only
separator, and an explicit 'numerator/denominator' form (needed so that
non-terminating rationals survive a serialize/parse round trip).
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from fractions import Fraction


def parse_rational(text: str) -> Fraction:
    """Parse an exact rational from decimal or 'n/d' notation.

    Raises ValueError for anything else (including locale-style ',' decimals).
    """
    s = text.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            return Fraction(int(num.strip(), 10), int(den.strip(), 10))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {text!r}") from exc
    try:
        return Fraction(Decimal(s))
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal number: {text!r}") from exc


def parse_int(text: str) -> int:
    """Parse a decimal integer; rejects fractions and non-numeric text."""
    return int(text.strip(), 10)


def rational_str(value: Fraction | int) -> str:
    """Canonical text form: plain integer when exact, else 'n/d'."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def decimal_str(value: Fraction | int, places: int = 3) -> str:
    """Fixed-point rendering, half-to-even, computed in exact integer math."""
    scale = 10**places
    f = Fraction(value) * scale
    q, r = divmod(f.numerator, f.denominator)
    if 2 * r > f.denominator or (2 * r == f.denominator and q % 2):
        q += 1
    sign = "-" if q < 0 else ""
    q = abs(q)
    if not places:
        return f"{sign}{q}"
    return f"{sign}{q // scale}.{q % scale:0{places}d}"


def round_half_away(value: Fraction | int) -> int:
    """Round to the nearest integer, halves away from zero."""
    f = Fraction(value)
    n, d = f.numerator, f.denominator
    q = (2 * abs(n) + d) // (2 * d)
    return q if n >= 0 else -q
