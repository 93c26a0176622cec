"""Locale-independent float formatting for bit-stable output files."""
import math


def fmt(x, digits=9):
    """Format with ``digits`` significant digits; '' for None, 'nan' for NaN."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return format(x, f".{digits}g")
