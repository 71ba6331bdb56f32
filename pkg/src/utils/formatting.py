"""Rendering of exact rationals and tables for output files."""

from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Dict

import pandas as pd

SIGNIFICANT_DIGITS = 12


def decimal_string(value: Fraction) -> str:
    """Decimal rendering with 12 significant digits; the rational stays authoritative"""
    value = Fraction(value)
    if value == 0:
        return "0.0"
    with localcontext() as ctx:
        ctx.prec = SIGNIFICANT_DIGITS
        rendered = format(Decimal(value.numerator) / Decimal(value.denominator), "f")
    if "." in rendered:
        rendered = rendered.rstrip("0").rstrip(".")
    if "." not in rendered:
        rendered += ".0"
    return rendered


def rational_string(value: Fraction) -> str:
    return str(Fraction(value))


def with_decimal(value: Fraction) -> str:
    """"p/q (decimal)" as printed by the CLI"""
    return f"{rational_string(value)} ({decimal_string(value)})"


def rational_columns(name: str, value: Fraction) -> Dict[str, object]:
    """Split a rational into name_num, name_den and name_decimal columns"""
    value = Fraction(value)
    return {
        f"{name}_num": value.numerator,
        f"{name}_den": value.denominator,
        f"{name}_decimal": decimal_string(value),
    }


def frame_to_csv(frame: pd.DataFrame) -> str:
    """CSV text with a header row and LF line endings"""
    return frame.to_csv(index=False, lineterminator="\n")
