"""
Tests for tracing verifiers, segment bounds and the generic-point builders
"""
import random
from fractions import Fraction

import pytest

from src.dynamics.measure import DiscreteMeasure, emp_measure, periodic_mixture, prohorov
from src.dynamics.symbolic import EventuallyPeriodicPoint, ShiftSpace, constant, periodic
from src.dynamics.tracing import (
    CERTIFICATE_COLUMNS,
    Specification,
    bowen_ball_member,
    bowen_distance,
    build_generic_point,
    close_segments_bound_check,
    close_segments_report,
    decompose_periodic,
    full_shift_contains,
    protogeneric,
    saps_gap,
    trace_full_shift,
    verify_trace,
)
from src.utils.errors import AlphabetError, BudgetExceeded, PreconditionError


def _random_point(rng: random.Random, alphabet=(0, 1), max_head=6, max_period=3) -> EventuallyPeriodicPoint:
    head = [rng.choice(alphabet) for _ in range(rng.randint(0, max_head))]
    per = [rng.choice(alphabet) for _ in range(rng.randint(1, max_period))]
    return EventuallyPeriodicPoint(head, per)


def _random_specification(rng: random.Random) -> Specification:
    return Specification.of((_random_point(rng), rng.randint(1, 12)) for _ in range(rng.randint(1, 6)))


@pytest.mark.unit
class TestSpecification:
    def test_lengths(self):
        xi = Specification.of([(constant(0), 3), (constant(1), 2)])
        assert xi.lengths == (3, 2)
        assert xi.total_length == 5
        assert len(xi) == 2

    def test_rejects_empty_and_zero_length(self):
        with pytest.raises(PreconditionError):
            Specification.of([])
        with pytest.raises(PreconditionError):
            Specification.of([(constant(0), 0)])


@pytest.mark.unit
class TestBowen:
    def test_bowen_distance(self):
        y = EventuallyPeriodicPoint([0, 0, 0, 1], [0])
        assert bowen_distance(constant(0), y, [0, 1, 2], 8) == Fraction(1, 2)
        assert bowen_distance(constant(0), y, [0], 8) == Fraction(1, 8)

    def test_ball_is_open(self):
        y = EventuallyPeriodicPoint([0, 0, 0, 1], [0])
        assert not bowen_ball_member(y, constant(0), [0, 1, 2], Fraction(1, 2), 8)
        assert bowen_ball_member(y, constant(0), [0, 1, 2], Fraction(3, 4), 8)

    def test_empty_indices(self):
        with pytest.raises(PreconditionError):
            bowen_distance(constant(0), constant(0), [], 4)

    def test_saps_gap(self):
        assert saps_gap(Fraction(1, 4)) == 2
        assert saps_gap(Fraction(2)) == 0


@pytest.mark.unit
class TestTraceFullShift:
    def test_concatenation(self):
        xi = Specification.of([(constant(0), 3), (constant(1), 2)])
        y = trace_full_shift(xi)
        assert y.prefix(6) == (0, 0, 0, 1, 1, 1)

    def test_padding(self):
        xi = Specification.of([(constant(0), 3), (constant(1), 2)])
        assert trace_full_shift(xi, pad=2).prefix(9) == (0, 0, 0, 0, 0, 1, 1, 1, 1)

    def test_alphabet_checked(self):
        xi = Specification.of([(constant(2), 3)])
        with pytest.raises(AlphabetError):
            trace_full_shift(xi, ShiftSpace.full({0, 1}))
        assert not full_shift_contains(xi, {0, 1})
        assert full_shift_contains(xi, {0, 1, 2})

    def test_restricted_space_rejected(self):
        space = ShiftSpace(alphabet=frozenset({0, 1}), language=lambda word: 2 not in word, name="golden")
        with pytest.raises(PreconditionError):
            trace_full_shift(Specification.of([(constant(0), 2)]), space)


@pytest.mark.unit
class TestVerifyTrace:
    def setup_method(self):
        self.xi = Specification.of([(constant(0), 3), (constant(1), 2)])

    def test_concatenation_traces_exactly(self):
        report = verify_trace(trace_full_shift(self.xi), self.xi, Fraction(1, 4))
        assert report.verdict
        assert report.gaps == (0,)
        assert report.error_counts == (0, 0)
        assert report.total_length == 5
        assert report.to_dict()["verdict"] is True

    def test_global_metric_needs_continuation(self):
        y = trace_full_shift(self.xi)
        report = verify_trace(y, self.xi, Fraction(1, 4), horizon=8)
        assert not report.verdict
        assert report.failed_segment == 1
        assert report.errors[0] == (1, 2)

    def test_global_metric_with_padding_and_gaps(self):
        gap = saps_gap(Fraction(1, 4))
        y = trace_full_shift(self.xi, pad=gap)
        report = verify_trace(y, self.xi, Fraction(1, 4), delta2=1, horizon=8)
        assert report.verdict
        assert report.gaps == (gap,)

    def test_mutation_in_first_segment_fails(self):
        y = EventuallyPeriodicPoint([0, 1, 0], [1])
        report = verify_trace(y, self.xi, Fraction(1, 4))
        assert not report.verdict
        assert report.errors[0] == (0, 1)

    def test_error_fraction(self):
        xi = Specification.of([(constant(0), 2), (constant(1), 4)])
        y = EventuallyPeriodicPoint([0, 0, 1, 1, 1, 0], [1])
        assert not verify_trace(y, xi, Fraction(1)).verdict
        report = verify_trace(y, xi, Fraction(1), delta1=Fraction(1, 2))
        assert report.verdict
        assert report.errors[1] == (3,)
        assert report.lambda_sizes == (2, 3)

    def test_bad_parameters(self):
        y = trace_full_shift(self.xi)
        with pytest.raises(PreconditionError):
            verify_trace(y, self.xi, Fraction(0))
        with pytest.raises(PreconditionError):
            verify_trace(y, self.xi, Fraction(1, 4), delta1=2)

    @pytest.mark.acceptance
    def test_seeded_specifications(self):
        rng = random.Random(5)
        for _ in range(20):
            xi = _random_specification(rng)
            report = verify_trace(trace_full_shift(xi), xi, Fraction(1, 4))
            assert report.verdict
            assert report.total_length == xi.total_length
            assert set(report.gaps) <= {0}

            word = [symbol for point, n in xi.segments for symbol in point.prefix(n)]
            flipped = rng.randrange(len(word))
            word[flipped] = 1 - word[flipped]
            mutated = EventuallyPeriodicPoint(word, (0,))
            assert not verify_trace(mutated, xi, Fraction(1, 4)).verdict


@pytest.mark.unit
class TestCloseSegments:
    def test_bound(self):
        xbar = [constant(0)] * 4
        ybar = [constant(0)] * 4 + [constant(1)]
        report = close_segments_report(xbar, ybar, [(i, i) for i in range(4)],
                                       0, Fraction(1, 4), Fraction(1, 2), 4)
        assert report.distance == Fraction(1, 5)
        assert report.bound == Fraction(3, 4)
        assert report.holds

    def test_hypotheses_enforced(self):
        xbar = [constant(0)] * 4
        ybar = [constant(0)] * 4 + [constant(1)]
        with pytest.raises(PreconditionError):
            close_segments_report(xbar, ybar, [(0, 4)], 1, Fraction(1, 4), Fraction(1, 2), 4)
        with pytest.raises(PreconditionError):
            close_segments_report(xbar, ybar, [(1, 1), (0, 0)], 1, Fraction(1, 4), Fraction(1, 2), 4)
        with pytest.raises(PreconditionError):
            close_segments_report(xbar, ybar, [(0, 0)], 0, Fraction(1, 4), Fraction(1, 2), 4)
        with pytest.raises(PreconditionError):
            close_segments_report(xbar, ybar, [(i, i) for i in range(4)], 0, 0, Fraction(1, 2), 4)

    @pytest.mark.acceptance
    def test_random_instances(self):
        rng = random.Random(11)
        eps = Fraction(1, 4)
        for _ in range(200):
            k = rng.randint(4, 10)
            xbar = [_random_point(rng) for _ in range(k)]
            ybar, matching = [], []
            for i, x in enumerate(xbar):
                if rng.random() < 0.75:
                    # agrees with x on three symbols, so rho < eps
                    ybar.append(EventuallyPeriodicPoint(x.prefix(3), (rng.randint(0, 1),)))
                    matching.append((i, i))
                else:
                    ybar.append(_random_point(rng))
            extra = rng.randint(0, k // 2)
            ybar.extend(_random_point(rng) for _ in range(extra))
            gamma = Fraction(k - len(matching), k)
            delta = Fraction(extra, k)
            assert close_segments_bound_check(xbar, ybar, matching, gamma, delta, eps, 6)


@pytest.mark.unit
class TestProtogeneric:
    def test_decompose_periodic(self):
        mu = periodic_mixture([(Fraction(1, 3), constant(0)), (Fraction(2, 3), periodic((1, 0)))], 4)
        components = decompose_periodic(mu)
        assert components == [(Fraction(1, 3), constant(0)), (Fraction(2, 3), periodic((0, 1)))]

    def test_decompose_rejects_non_periodic_support(self):
        mu = DiscreteMeasure.from_points([EventuallyPeriodicPoint([1], [0])], [1], 4)
        with pytest.raises(PreconditionError):
            decompose_periodic(mu)

    def test_overlapping_orbit_prefixes(self):
        slow = periodic((0, 1, 1))
        fast = periodic((0, 1, 1, 1))
        mu = periodic_mixture([(Fraction(1, 2), slow), (Fraction(1, 2), fast)], 3)
        assert decompose_periodic(mu) == [(Fraction(1, 2), slow), (Fraction(1, 2), fast)]
        assert decompose_periodic(mu.at_horizon(2)) == [(Fraction(1, 2), slow), (Fraction(1, 2), fast)]
        result = protogeneric(mu, Fraction(1, 4), 1, 3)
        assert prohorov(mu, emp_measure(result.point, result.block, 3)) < Fraction(1, 4)

    def test_decompose_solves_shared_atoms(self):
        slow = periodic((0, 1, 1))
        fast = periodic((0, 1, 1, 1))
        points = [slow.shift(i) for i in range(3)] + [fast.shift(i) for i in range(4)]
        weights = [Fraction(1, 6)] * 3 + [Fraction(1, 8)] * 4
        mu = DiscreteMeasure.from_points(points, weights, 3)
        assert mu.components is None
        assert decompose_periodic(mu) == [(Fraction(1, 2), slow), (Fraction(1, 2), fast)]

    def test_decompose_rejects_non_mixture(self):
        mu = DiscreteMeasure.from_points([constant(0), periodic((0, 1))], [Fraction(1, 2), Fraction(1, 2)], 3)
        with pytest.raises(PreconditionError):
            decompose_periodic(mu)

    def test_two_point_block(self):
        mu = periodic_mixture([(Fraction(1, 2), constant(0)), (Fraction(1, 2), constant(1))], 4)
        result = protogeneric(mu, Fraction(1, 8))
        assert result.weight_denominator == 2
        assert result.block == 2 * result.segment_length
        assert result.distance < Fraction(1, 8)

    def test_budget(self):
        mu = periodic_mixture([(Fraction(1, 2), constant(0)), (Fraction(1, 2), constant(1))], 4)
        with pytest.raises(BudgetExceeded):
            protogeneric(mu, Fraction(1, 1024), length_cap=64)

    @pytest.mark.acceptance
    @pytest.mark.slow
    def test_random_mixtures(self):
        rng = random.Random(3)
        horizon = 4
        for _ in range(20):
            count = rng.randint(1, 3)
            raw = [rng.randint(1, 4) for _ in range(count)]
            components = [(Fraction(r, sum(raw)), periodic([rng.randint(0, 1) for _ in range(rng.randint(1, 4))]))
                          for r in raw]
            mu = periodic_mixture(components, horizon)
            for eps in (Fraction(1, 4), Fraction(1, 8)):
                for n in (1, 2, 3):
                    result = protogeneric(mu, eps, n, horizon)
                    assert result.block == result.weight_denominator * result.segment_length
                    assert prohorov(mu, emp_measure(result.point, n * result.block, horizon)) < eps


@pytest.mark.integration
@pytest.mark.slow
class TestGenericBuild:
    def setup_method(self):
        self.mu = DiscreteMeasure.from_points([constant(0), constant(1)],
                                              [Fraction(1, 2), Fraction(1, 2)], 4)

    def test_five_stage_certificate(self):
        build = build_generic_point([self.mu], Fraction(1, 8), 5, horizon=4)
        assert build.all_pass
        assert build.state.check_invariants()
        assert [row.stage for row in build.certificate] == [1, 2, 3, 4, 5]
        lengths = [row.length for row in build.certificate]
        assert lengths == sorted(set(lengths))
        assert all(row.terms_hold for row in build.certificate)
        assert build.certificate[-1].bound == Fraction(1, 5) + 7 * Fraction(1, 8) / 64
        assert len(build.prefix) == build.length
        assert build.to_csv().splitlines()[0] == ",".join(CERTIFICATE_COLUMNS)

    def test_changing_targets(self):
        other = DiscreteMeasure.from_points([constant(0)], [1], 4)
        build = build_generic_point([self.mu, other], Fraction(1, 4), 3, horizon=4, with_terms=False)
        assert build.all_pass
        last = build.certificate[-1]
        emp = emp_measure(build.point, last.length, 4)
        assert prohorov(emp, other) == last.achieved

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            build_generic_point([self.mu], Fraction(1, 8), 5, horizon=4, length_cap=1000)
