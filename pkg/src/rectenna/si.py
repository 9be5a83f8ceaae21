"""Numbers with SI suffixes, shared by the netlist and config grammars.

Suffixes follow SPICE conventions except that ``M`` means mega (case
sensitive) and ``m`` milli. ``meg`` is accepted as an alias of ``M``.
"""

import math
import re

SUFFIXES = {
    "T": 1e12,
    "G": 1e9,
    "M": 1e6,
    "meg": 1e6,
    "k": 1e3,
    "m": 1e-3,
    "u": 1e-6,
    "µ": 1e-6,
    "n": 1e-9,
    "p": 1e-12,
    "f": 1e-15,
}

_NUMBER = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(meg|[TGMkmuµnpf])?\s*([A-Za-zΩ]*)\s*$"
)


def parse_si(text):
    """Parse ``"2.2k"``, ``"100p"``, ``"1e-8"`` or ``"-40"`` into a float.

    Trailing unit letters after the suffix are ignored (``"100pF"``,
    ``"22kOhm"``). Raises ``ValueError`` on anything else.
    """
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s.lower() in ("inf", "+inf", "-inf", "nan"):
        raise ValueError(f"non-finite number not allowed: {text!r}")
    m = _NUMBER.match(s)
    if m is None:
        raise ValueError(f"not a number: {text!r}")
    value, suffix, _unit = m.groups()
    x = float(value)
    if suffix:
        x *= SUFFIXES[suffix]
    return x


def format_si(x, digits=None):
    """Format a float with an SI suffix so that ``parse_si`` round-trips it.

    Uses ``repr`` precision by default so serialization is lossless; pass a
    smaller ``digits`` for display.
    """
    x = float(x)
    if x == 0 or not math.isfinite(x):
        return repr(x)
    exp3 = int(math.floor(math.log10(abs(x)) / 3)) * 3
    exp3 = max(-15, min(12, exp3))
    suffix = {12: "T", 9: "G", 6: "M", 3: "k", 0: "", -3: "m", -6: "u", -9: "n", -12: "p", -15: "f"}[exp3]
    mantissa = x / 10.0**exp3
    if digits is None:
        text = repr(mantissa)
        if parse_si(text + suffix) != x:
            return repr(x)
    else:
        text = f"{mantissa:.{digits}g}"
    return text + suffix
