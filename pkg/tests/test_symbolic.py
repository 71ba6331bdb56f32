"""
Unit tests for words, points and the sequence metric
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.dynamics.symbolic import (
    PLACEHOLDER,
    EventuallyPeriodicPoint,
    RecipePoint,
    ShiftSpace,
    block_alternator,
    constant,
    is_suffix,
    max_bad_depth,
    periodic,
    point_from_json,
    prepend,
    rho,
    subword_set,
    word_distance,
    word_from_string,
    word_to_string,
)
from src.utils.errors import AlphabetError, HorizonExceeded, InputError, PreconditionError


@pytest.mark.unit
class TestEventuallyPeriodicPoint:
    """Canonical form, windows and shifts"""

    def test_canonical_form_absorbs_preperiod(self):
        x = EventuallyPeriodicPoint([0, 1, 0, 1], [0, 1])
        assert x == periodic((0, 1))
        assert x.is_periodic

    def test_period_reduced_to_primitive_root(self):
        x = EventuallyPeriodicPoint([2], [0, 1, 0, 1])
        assert x.per == (0, 1)
        assert x.pre == (2,)
        assert x.period == 2

    def test_window_and_prefix(self):
        x = EventuallyPeriodicPoint([2], [0, 1])
        assert x.prefix(5) == (2, 0, 1, 0, 1)
        assert x.window(3, 3) == (0, 1, 0)

    def test_window_positions(self):
        x = EventuallyPeriodicPoint([2], [0, 1])
        assert x.window(0, 1) == (2,)
        assert x.window(0, 3) == (2, 0, 1)
        assert x.window(1, 3) == (0, 1, 0)
        assert x.window(2, 4) == (1, 0, 1, 0)
        y = EventuallyPeriodicPoint([3, 3], [0, 1, 2])
        assert y.window(1, 4) == (3, 0, 1, 2)
        assert y.window(2, 3) == (0, 1, 2)
        assert y.window(4, 5) == (2, 0, 1, 2, 0)
        assert y.window(9, 0) == ()

    def test_shift(self):
        x = EventuallyPeriodicPoint([2], [0, 1])
        assert x.shift(1) == periodic((0, 1))
        assert x.shift(2) == periodic((1, 0))
        assert x.shift(0) is x

    def test_empty_period_rejected(self):
        with pytest.raises(PreconditionError):
            EventuallyPeriodicPoint([0], [])

    def test_negative_symbol_rejected(self):
        with pytest.raises(AlphabetError):
            EventuallyPeriodicPoint([-1], [0])

    def test_prepend(self):
        assert prepend([1, 2], constant(0)) == EventuallyPeriodicPoint((1, 2), (0,))


@pytest.mark.unit
class TestMetric:
    """rho and the depth helpers"""

    def test_rho_first_disagreement(self):
        x = constant(0)
        y = EventuallyPeriodicPoint([0, 0, 1], [0])
        assert rho(x, y, 8) == Fraction(1, 4)
        assert rho(x, x, 8) == 0

    def test_rho_below_horizon_is_zero(self):
        x = constant(0)
        y = EventuallyPeriodicPoint([0, 0, 0, 0, 1], [0])
        assert rho(x, y, 4) == 0

    def test_word_distance(self):
        assert word_distance((1, 0), (0, 0)) == 1
        assert word_distance((1, 0, 1), (1, 0, 0)) == Fraction(1, 4)

    def test_max_bad_depth(self):
        assert max_bad_depth(Fraction(1, 4)) == 2
        assert max_bad_depth(Fraction(1, 3)) == 1
        assert max_bad_depth(Fraction(1)) == 0
        assert max_bad_depth(Fraction(3, 2)) == -1
        with pytest.raises(PreconditionError):
            max_bad_depth(Fraction(0))

    def test_horizon_must_be_positive(self):
        with pytest.raises(PreconditionError):
            rho(constant(0), constant(1), 0)


@pytest.mark.unit
class TestWords:
    """String codecs and word helpers"""

    def test_word_from_string_with_holes(self):
        assert word_from_string("0110xx") == (0, 1, 1, 0, PLACEHOLDER, PLACEHOLDER)
        assert word_to_string((0, 1, 1, 0, PLACEHOLDER)) == "0110x"

    def test_multi_digit_words_use_commas(self):
        assert word_from_string("2,3,11") == (2, 3, 11)
        assert word_to_string((2, 3, 11)) == "2,3,11"

    def test_bad_character(self):
        with pytest.raises(InputError):
            word_from_string("01a")

    def test_subword_set(self):
        assert subword_set("0110", 2) == {"01", "11", "10"}
        assert subword_set((0, 1), 3) == set()

    def test_is_suffix(self):
        assert is_suffix("10", "0110")
        assert not is_suffix("01", "0110")


@pytest.mark.unit
class TestRecipes:
    """Recipe points and JSON decoding"""

    def test_block_alternator(self):
        assert block_alternator(4).prefix(10) == (0, 1, 0, 0, 0, 0, 1, 1, 1, 1)

    def test_recipe_from_json(self):
        x = point_from_json({"kind": "recipe", "name": "blocks", "params": {"base": 4}})
        assert x.prefix(6) == (0, 1, 0, 0, 0, 0)

    def test_shift_recipe(self):
        document = {"kind": "recipe", "name": "shift",
                    "params": {"base": {"kind": "ep", "pre": [1, 1], "per": [0]}, "k": 1}}
        assert point_from_json(document).prefix(3) == (1, 0, 0)

    def test_shifted_recipe_point_is_lazy_view(self):
        x = block_alternator(4).shift(2)
        assert x.prefix(4) == (0, 0, 0, 0)
        assert x.to_json()["name"] == "shift"

    def test_short_generator_raises_horizon_exceeded(self):
        x = RecipePoint("short", {}, lambda n: (0,) * 3)
        with pytest.raises(HorizonExceeded):
            x.prefix(10)

    def test_unknown_kind_and_recipe(self):
        with pytest.raises(InputError):
            point_from_json({"kind": "nope"})
        with pytest.raises(InputError):
            point_from_json({"kind": "recipe", "name": "no-such-recipe"})
        with pytest.raises(InputError):
            point_from_json([0, 1])


@pytest.mark.unit
class TestShiftSpace:
    def test_full_shift_membership(self):
        space = ShiftSpace.full({0, 1})
        assert space.is_full
        assert space.contains_word((0, 1, 1))
        assert not space.contains_word((0, 2))

    def test_check_word_raises(self):
        with pytest.raises(AlphabetError):
            ShiftSpace.full({0, 1}).check_word((0, 2))

    def test_unrestricted_alphabet(self):
        assert ShiftSpace.full().contains_word((5, 17))


symbols = st.integers(min_value=0, max_value=2)
prepart = st.lists(symbols, max_size=5)
period = st.lists(symbols, min_size=1, max_size=4)


def _expand(pre, per, n):
    word = list(pre)
    while len(word) < n:
        word.extend(per)
    return tuple(word[:n])


@pytest.mark.unit
@settings(derandomize=True, max_examples=80, deadline=None)
@given(prepart, period)
def test_canonical_form_ignores_redundant_descriptions(pre, per):
    x = EventuallyPeriodicPoint(pre, per)
    assert x.prefix(24) == _expand(pre, per, 24)
    assert EventuallyPeriodicPoint(pre, per * 2) == x
    assert EventuallyPeriodicPoint(pre + per, per) == x
    assert len(x.pre) <= len(pre)


@pytest.mark.unit
@settings(derandomize=True, max_examples=80, deadline=None)
@given(prepart, period, st.integers(min_value=0, max_value=12))
def test_shift_drops_prefix(pre, per, k):
    x = EventuallyPeriodicPoint(pre, per)
    assert x.shift(k).prefix(10) == x.prefix(k + 10)[k:]


@pytest.mark.unit
@settings(derandomize=True, max_examples=100, deadline=None)
@given(st.lists(st.tuples(symbols, symbols, symbols), min_size=1, max_size=8))
def test_word_distance_is_ultrametric(columns):
    a, b, c = (tuple(column[i] for column in columns) for i in range(3))
    assert word_distance(a, c) <= max(word_distance(a, b), word_distance(b, c))
    assert word_distance(a, b) == word_distance(b, a)
    assert (word_distance(a, b) == 0) == (a == b)
