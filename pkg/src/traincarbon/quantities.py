"""Parsing of free-text numeric quantities found in model cards.

Handles shorthand suffixes (``2k``, ``1.2M``, ``7B``), scientific notation
(``5e21``, ``5×10^21``, ``5 x 10^{21}``, ``5×10²¹``), thousands separators and
a few trailing unit words (``FLOPs``, ``tokens``, ``params``).
"""

from __future__ import annotations

import math
import re

from .errors import UnparseableQuantity

SUFFIXES = {
    "k": 1e3,
    "m": 1e6,  # counts never use milli
    "b": 1e9,
    "g": 1e9,
    "t": 1e12,
}

WORDS = {
    "thousand": 1e3,
    "million": 1e6,
    "billion": 1e9,
    "trillion": 1e12,
}

UNIT_WORDS = (
    "flops", "flop", "tokens", "token", "params", "parameters", "parameter",
    "images", "steps", "hours", "hrs", "h",
)

_SUPERSCRIPTS = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹⁻⁺", "0123456789-+")

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)"
_SCI_TIMES = re.compile(
    rf"^(?P<mant>{_NUMBER})\s*(?:×|x|X|\*|·)\s*10\s*(?:\^|\*\*)\s*\{{?\s*(?P<exp>[+-]?\d+)\s*\}}?$"
)
_SCI_E = re.compile(rf"^(?P<mant>{_NUMBER})[eE](?P<exp>[+-]?\d+)$")
_PLAIN = re.compile(rf"^(?P<mant>{_NUMBER})$")
_SUFFIXED = re.compile(rf"^(?P<mant>{_NUMBER})\s*(?P<suf>[kKmMbBgGtT])$")
_WORDED = re.compile(rf"^(?P<mant>{_NUMBER})\s*(?P<word>[a-zA-Z]+)$")
_BARE_POWER = re.compile(r"^10\s*(?:\^|\*\*)\s*\{?\s*(?P<exp>[+-]?\d+)\s*\}?$")
_GROUPED = re.compile(r"^\d{1,3}(?:[,_\u00a0\u2009 ]\d{3})+(?:\.\d*)?(?![\d,_])")


def _strip_units(text: str) -> str:
    lowered = text.lower()
    for word in UNIT_WORDS:
        if lowered.endswith(word) and len(text) > len(word):
            head = text[: -len(word)].rstrip()
            # "2.5h" is a unit, but "1.2M" must keep its suffix
            if head and (head[-1].isdigit() or head[-1] in "kKmMbBgGtT}" or head[-1].isspace()):
                return head
    return text


def parse_quantity(text: str) -> float:
    """Parse a free-text quantity into a nonnegative float.

    Raises
    ------
    UnparseableQuantity
        If the text matches no grammar rule, is empty, negative or not finite.
        Callers treat the field as missing in that case, never as zero.
    """
    if text is None:
        raise UnparseableQuantity("empty quantity")
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
        if not math.isfinite(value) or value < 0:
            raise UnparseableQuantity(f"not a nonnegative finite number: {text!r}")
        return value

    raw = str(text)
    had_superscript = any(ch in raw for ch in "⁰¹²³⁴⁵⁶⁷⁸⁹")
    s = raw.strip().translate(_SUPERSCRIPTS).replace("~", "").replace("≈", "").strip()
    if not s:
        raise UnparseableQuantity("empty quantity")
    s = _strip_units(s).strip()
    if had_superscript:
        sup = re.match(rf"^({_NUMBER})\s*(?:×|x|X|\*|·)\s*10([+-]?\d+)$", s)
        if sup:
            s = f"{sup.group(1)}×10^{sup.group(2)}"
        sup = re.match(r"^10([+-]?\d+)$", s)
        if sup:
            s = f"10^{sup.group(1)}"
    grouped = _GROUPED.match(s)
    if grouped:
        s = re.sub(r"[,_\u00a0\u2009 ]", "", grouped.group(0)) + s[grouped.end():]
        s = s.strip()

    m = _PLAIN.match(s)
    if m:
        return float(m.group("mant"))
    m = _SCI_E.match(s)
    if m:
        value = float(s)
        if not math.isfinite(value):
            raise UnparseableQuantity(f"overflow: {text!r}")
        return value
    m = _SCI_TIMES.match(s)
    if m:
        return _finite(float(f"{m.group('mant')}e{int(m.group('exp'))}"), text)
    m = _BARE_POWER.match(s)
    if m:
        return _finite(float(f"1e{int(m.group('exp'))}"), text)
    m = _SUFFIXED.match(s)
    if m:
        return float(m.group("mant")) * SUFFIXES[m.group("suf").lower()]
    m = _WORDED.match(s)
    if m and m.group("word").lower() in WORDS:
        return float(m.group("mant")) * WORDS[m.group("word").lower()]
    raise UnparseableQuantity(f"cannot parse quantity: {text!r}")


def _finite(value: float, text) -> float:
    if not math.isfinite(value):
        raise UnparseableQuantity(f"overflow: {text!r}")
    return value


def try_parse_quantity(text) -> float | None:
    """Like :func:`parse_quantity` but returns ``None`` for missing or bad input."""
    if text is None or (isinstance(text, str) and not text.strip()):
        return None
    try:
        return parse_quantity(text)
    except UnparseableQuantity:
        return None
