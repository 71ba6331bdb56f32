"""
Tests for the Oxtoby word machine, its language and the beta -> f(beta) reduction
"""
import random
import tempfile
from fractions import Fraction
from unittest.mock import patch

import pytest

from src.dynamics.birkhoff import LocalObservable, regularity_report
from src.dynamics.symbolic import point_from_json
from src.reductions.oxtoby import (
    REDUCE_COLUMNS,
    STATS_COLUMNS,
    OxtobyMachine,
    default_parameters,
    f_beta_exponents,
    f_beta_word,
    frequency,
    oxtoby_build,
    oxtoby_language,
    oxtoby_reduce,
)
from src.utils.errors import HorizonExceeded, PreconditionError

S = (4, 8, 16, 32, 64)


@pytest.mark.unit
class TestOxtobyWords:
    def setup_method(self):
        self.machine = OxtobyMachine(S, 4)

    def test_small_words(self):
        machine = OxtobyMachine((3, 4), 2)
        assert machine.W == ("x", "0xx", "0110xx0xx0xx")
        assert machine.zero[1] == "000"
        assert machine.one[1] == "011"

    def test_default_parameters(self):
        assert default_parameters(5) == S

    @pytest.mark.acceptance
    def test_lengths_and_frequencies(self):
        assert self.machine.lengths == (1, 4, 32, 512, 16384)
        assert self.machine.m_zero == (0, 0, Fraction(3, 32), Fraction(3, 32), Fraction(1851, 16384))
        assert self.machine.m_one[1:4] == (Fraction(3, 4), Fraction(3, 4), Fraction(363, 512))

    def test_product_identity_and_fill(self):
        for n in range(self.machine.depth + 1):
            assert self.machine.product_identity_holds(n)
            assert self.machine.fill_holds(n)
        assert self.machine.product(1) == Fraction(3, 4)

    def test_a_interval(self):
        low, high = self.machine.a_interval
        assert low == self.machine.a_estimate
        assert low < high

    def test_y_word(self):
        assert self.machine.y_word(1) == self.machine.one[1]
        assert self.machine.y_word(2) == self.machine.zero[2]
        word = self.machine.y_word()
        assert word == self.machine.zero[4]
        assert self.machine.y_point().prefix(40) == tuple(int(symbol) for symbol in word[:40])

    def test_frequency(self):
        assert frequency("0110") == Fraction(1, 2)
        with pytest.raises(PreconditionError):
            frequency("")

    def test_parameter_validation(self):
        with pytest.raises(PreconditionError):
            OxtobyMachine((2, 8), 1)
        with pytest.raises(PreconditionError):
            OxtobyMachine((3, 3, 3), 2)
        with pytest.raises(PreconditionError):
            OxtobyMachine((4, 8), 3)

    def test_stats_frame(self):
        frame = self.machine.stats_frame()
        assert list(frame.columns) == STATS_COLUMNS
        assert frame["identity"].all()
        assert list(frame["l_n"]) == [1, 4, 32, 512, 16384]

    def test_to_json_omits_long_words(self):
        document = self.machine.to_json(max_word_length=32)
        assert document["words"]["W"][2] is not None
        assert document["words"]["W"][3] is None
        assert document["m_zero"][2] == "3/32"


@pytest.mark.acceptance
@pytest.mark.slow
def test_depth_five_frequencies():
    machine = OxtobyMachine(S, 5)
    assert machine.lengths[5] == 1048576
    assert machine.m_zero[5] == Fraction(1851, 16384)
    assert all(machine.product_identity_holds(n) for n in range(6))


@pytest.mark.unit
class TestCache:
    def test_words_round_trip_through_cache(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            first = oxtoby_build(S, 3, cache_dir=temp_dir)
            with patch.object(OxtobyMachine, "_build") as rebuild:
                second = oxtoby_build(S, 3, cache_dir=temp_dir)
                rebuild.assert_not_called()
            assert second.W == first.W
            assert second.m_one == first.m_one


@pytest.mark.unit
class TestLanguage:
    def test_counts_within_bound(self):
        machine = OxtobyMachine(S, 3)
        for level in (1, 2, 3):
            report = oxtoby_language(machine, machine.lengths[level], level)
            assert report.within_bound
            assert report.bound == 4 * machine.lengths[level] + 4

    def test_short_words(self):
        report = OxtobyMachine(S, 2).language(1, 2)
        assert report.words == frozenset({"0", "1"})

    def test_length_range(self):
        with pytest.raises(PreconditionError):
            oxtoby_language(OxtobyMachine(S, 2), 33, 2)

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_suffix_fact(self, k):
        machine = OxtobyMachine(S, 4)
        for js in machine.fact_tuples(k):
            assert machine.fact_suffix_check(js), js

    @pytest.mark.slow
    def test_suffix_fact_sampled_at_level_five(self):
        machine = OxtobyMachine(S, 5)
        rng = random.Random(11)
        tops = [machine.s[i] - 2 for i in range(5)]
        samples = [tuple([0] * 5), tuple(tops)]
        samples += [tuple(rng.randint(0, top) for top in tops) for _ in range(40)]
        for js in samples:
            assert machine.fact_suffix_check(js), js

    def test_suffix_fact_rejects_large_exponent(self):
        with pytest.raises(PreconditionError):
            OxtobyMachine(S, 3).fact_suffix_check((3,))


@pytest.mark.integration
class TestReduction:
    def setup_method(self):
        self.machine = OxtobyMachine(S, 3)

    def test_exponents_and_word(self):
        assert f_beta_exponents(self.machine, [0, 0]) == (1, 1)
        assert f_beta_exponents(self.machine, [40, 0]) == (6, 1)
        word = f_beta_word(self.machine, [0, 0])
        assert word == self.machine.zero[1] + self.machine.zero[3]

    def test_needs_depth(self):
        with pytest.raises(PreconditionError):
            f_beta_exponents(OxtobyMachine(S, 2), [0, 0])

    def test_windows_and_sweeps(self):
        result = oxtoby_reduce(self.machine, [0, 0])
        assert result.length == 4 + 512
        window = result.windows[0]
        assert window.length == 8
        assert window.bound == Fraction(1, 3)
        assert window.frequency == Fraction(3, 8)
        assert window.holds
        assert all(sweep.holds for sweep in result.sweeps)
        assert result.frequency_at(8) == Fraction(3, 8)
        assert result.to_csv().splitlines()[0] == ",".join(REDUCE_COLUMNS)

    def test_horizon(self):
        assert oxtoby_reduce(self.machine, [0, 0], horizon=8).length == 8
        with pytest.raises(HorizonExceeded):
            oxtoby_reduce(self.machine, [0, 0], horizon=10_000)

    def test_recipe_points(self):
        point = point_from_json({"kind": "recipe", "name": "f-beta",
                                 "params": {"s": list(S), "depth": 3, "beta": [0, 0]}})
        assert point.prefix(8) == (0, 0, 0, 0, 0, 1, 1, 1)

    def test_excess_over_depth_frequency(self):
        result = oxtoby_reduce(self.machine, [0, 0])
        window = result.windows[0]
        assert window.a == Fraction(3, 32)
        assert window.excess == Fraction(9, 32)
        frame = result.to_frame()
        first = frame.iloc[0]
        assert (first["excess_num"], first["excess_den"]) == (9, 32)
        for sweep in result.sweeps:
            assert sweep.excess == sweep.largest - Fraction(3, 32)
            assert sweep.excess <= Fraction(3, sweep.j_prev)


@pytest.mark.acceptance
@pytest.mark.slow
class TestReductionSixParameters:
    def setup_method(self):
        self.machine = OxtobyMachine(default_parameters(6), 5)
        self.a = Fraction(1851, 16384)

    def test_constant_beta_windows_stay_above_depth_frequency(self):
        result = oxtoby_reduce(self.machine, [0, 0, 0])
        assert self.machine.s == (4, 8, 16, 32, 64, 128)
        assert self.machine.a_estimate == self.a
        assert [w.length for w in result.windows] == [8, 1028]
        assert [w.frequency for w in result.windows] == [Fraction(3, 8), Fraction(411, 1028)]
        assert [w.bound for w in result.windows] == [Fraction(1, 3), Fraction(411, 1056)]
        assert result.windows[0].excess == Fraction(4293, 16384)
        for window in result.windows:
            assert window.holds
            assert window.excess == window.frequency - self.a
            assert window.excess >= window.bound - self.a > 0
        for sweep in result.sweeps:
            assert sweep.holds
            assert sweep.excess <= Fraction(3, sweep.j_prev)

    def test_identity_beta_sweeps(self):
        result = oxtoby_reduce(self.machine, [0, 1, 2])
        assert result.js == (1, 2, 3)
        assert result.length == 4 + 2 * 512 + 3 * 1048576
        assert [w.frequency for w in result.windows] == [Fraction(3, 8), Fraction(459, 1540)]
        assert [w.bound for w in result.windows] == [Fraction(1, 3), Fraction(459, 1568)]
        assert all(window.holds for window in result.windows)
        assert [sweep.bound for sweep in result.sweeps] == [3 + self.a, Fraction(3, 2) + self.a]
        assert all(sweep.holds for sweep in result.sweeps)

    def test_identity_beta_is_regular_near_depth_frequency(self):
        result = oxtoby_reduce(self.machine, [0, 1, 2])
        phi = LocalObservable.indicator(1)
        verdict = regularity_report(phi, result.point, result.length,
                                    tolerance=Fraction(1, 100), running=result.running)
        assert verdict.kind == "regular"
        assert abs(verdict.alpha - self.a) < Fraction(1, 100)
        assert verdict.limsup_est <= result.sweeps[-1].bound
