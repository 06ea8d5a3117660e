"""Numeric helpers shared across the package.

Two value modes coexist: plain floats for speed, and fractions.Fraction for
exact arithmetic. Every routine here is duck-typed so both modes pass through
unchanged; nothing calls math.* on scheduling values.
"""
from __future__ import annotations

from fractions import Fraction

REL_TOL = 1e-9

Number = (int, float, Fraction)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def coerce(x, exact: bool):
    """Normalize a JSON-ish number into the requested mode.

    >>> coerce(0.5, True)
    Fraction(1, 2)
    >>> coerce(3, False)
    3.0
    """
    if exact:
        return x if isinstance(x, Fraction) else Fraction(x)
    return float(x)


def close(a, b, rel: float = REL_TOL) -> bool:
    """Equality up to relative slack; exact compare if either side is exact."""
    if is_exact(a) and is_exact(b):
        return a == b
    fa, fb = float(a), float(b)
    scale = max(abs(fa), abs(fb), 1.0)
    return abs(fa - fb) <= rel * scale


def leq(a, b, rel: float = REL_TOL) -> bool:
    """a <= b up to relative slack; plain <= when both sides are exact."""
    if is_exact(a) and is_exact(b):
        return a <= b
    fa, fb = float(a), float(b)
    scale = max(abs(fa), abs(fb), 1.0)
    return fa <= fb + rel * scale


def geq(a, b, rel: float = REL_TOL) -> bool:
    return leq(b, a, rel)


def json_number(x):
    """Representation for JSON output that round-trips exact values."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return x.numerator
        return {"num": x.numerator, "den": x.denominator}
    return x


def from_json_number(x, exact: bool):
    if isinstance(x, dict):
        val = Fraction(x["num"], x["den"])
        return val if exact else float(val)
    return coerce(x, exact)
