"""Deterministic rendering of report values: exact rationals -> fixed decimals, canonical CSV/JSON bytes.

Every report surface (CLI files and service responses) goes through these
helpers so identical inputs always produce identical bytes.
"""

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

_QUANTUM = Decimal("0.0001")


def dec4(value: Fraction) -> str:
    """Render an exact rational as a decimal string with 4 fractional digits."""
    d = Decimal(value.numerator) / Decimal(value.denominator)
    return str(d.quantize(_QUANTUM, rounding=ROUND_HALF_EVEN))


def json_bytes(obj) -> bytes:
    """Canonical JSON bytes: UTF-8, no ASCII escaping, compact, newline-terminated."""
    return (json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def csv_bytes(header, rows) -> bytes:
    """Canonical CSV bytes: UTF-8, RFC-4180 quoting and CRLF row endings.

    CRLF matters: with it, the csv writer quotes any field containing a bare
    CR, so arbitrary text survives the round trip.
    """
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")
