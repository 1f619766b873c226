import math

import pytest
from hypothesis import given, strategies as st

from traincarbon.errors import UnparseableQuantity
from traincarbon.quantities import parse_quantity, try_parse_quantity


@pytest.mark.parametrize("text,expected", [
    ("2k", 2e3),
    ("1.2M", 1.2e6),
    ("7B", 7e9),
    ("1.5T", 1.5e12),
    ("3G", 3e9),
    ("5e21", 5e21),
    ("5E+21", 5e21),
    ("5×10^21", 5e21),
    ("5 x 10^{21}", 5e21),
    ("5*10**21", 5e21),
    ("5×10²¹", 5e21),
    ("10^18", 1e18),
    ("10¹⁸", 1e18),
    ("184,320", 184320.0),
    ("1 720 320", 1720320.0),
    ("1_000", 1000.0),
    ("3.14e21 FLOPs", 3.14e21),
    ("2T tokens", 2e12),
    ("7B params", 7e9),
    ("2.5h", 2.5),
    ("1.5 billion", 1.5e9),
    ("~300B", 3e11),
    ("0", 0.0),
    (".5", 0.5),
    (42, 42.0),
    (1.5e3, 1500.0),
])
def test_parse_forms(text, expected):
    assert parse_quantity(text) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("text", ["", "   ", "not stated", "-5", "abc7", "7 bananas", "1e999", None,
                                  float("nan"), float("inf"), -1.0, "5×10^999"])
def test_unparseable(text):
    with pytest.raises(UnparseableQuantity):
        parse_quantity(text)


@pytest.mark.parametrize("text", ["", None, "n/a", "  "])
def test_try_parse_missing(text):
    assert try_parse_quantity(text) is None


@given(st.floats(min_value=0, max_value=1e30, allow_nan=False, allow_infinity=False))
def test_repr_round_trip(x):
    assert parse_quantity(repr(x)) == x


@given(st.integers(min_value=0, max_value=10**15))
def test_grouped_integers(n):
    assert parse_quantity(f"{n:,}") == float(n)


@given(st.integers(min_value=0, max_value=999), st.sampled_from("kKmMbBtT"))
def test_suffix_scaling(m, suf):
    scale = {"k": 1e3, "m": 1e6, "b": 1e9, "t": 1e12}[suf.lower()]
    assert parse_quantity(f"{m}{suf}") == m * scale


@given(st.integers(min_value=1, max_value=9), st.integers(min_value=-10, max_value=30))
def test_times_ten_matches_e_notation(m, e):
    assert math.isclose(parse_quantity(f"{m}×10^{e}"), parse_quantity(f"{m}e{e}"), rel_tol=1e-15)
