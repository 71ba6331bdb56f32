"""
Tests for psi schedules and the psi and phi reductions
"""
from fractions import Fraction

import pytest

from src.dynamics.birkhoff import LocalObservable
from src.dynamics.measure import dirac
from src.dynamics.symbolic import constant
from src.reductions.psi import PSI_COLUMNS, PsiSchedule, phi_reduction, psi_reduction
from src.utils.errors import PreconditionError

HORIZON = 4
BREAKPOINTS = [1, 2, 3, 4, 5]


@pytest.mark.unit
class TestPsiSchedule:
    def test_for_beta(self):
        schedule = PsiSchedule.for_beta(BREAKPOINTS, [8, 9, 10, 11, 12])
        assert schedule.psi(1) == Fraction(1, 9)
        assert schedule.psi(5) == Fraction(1, 13)
        assert schedule.psi(40) == Fraction(1, 13)

    def test_linear_between_breakpoints(self):
        schedule = PsiSchedule.for_beta([1, 3], [0, 1])
        assert schedule.psi(2) == Fraction(3, 4)

    def test_alternating(self):
        schedule = PsiSchedule.alternating(BREAKPOINTS, [1, 1, 1])
        assert [schedule.psi(j) for j in range(1, 6)] == [
            Fraction(1, 2), 0, Fraction(1, 2), 0, Fraction(1, 2)]

    def test_validation(self):
        with pytest.raises(PreconditionError):
            PsiSchedule.for_beta([2, 1], [0, 0])
        with pytest.raises(PreconditionError):
            PsiSchedule.for_beta([1, 3, 4], [0, 0, 0])
        with pytest.raises(PreconditionError):
            PsiSchedule.for_beta([0, 1], [0, 0])
        with pytest.raises(PreconditionError):
            PsiSchedule.for_beta([1, 2], [0, -2])
        with pytest.raises(PreconditionError):
            PsiSchedule.for_beta([1, 2], [])

    def test_mixture(self):
        schedule = PsiSchedule.for_beta([1], [3])
        mixed = schedule.mixture(1, dirac(constant(1), 2), dirac(constant(0), 2))
        assert mixed.weight_of((1, 1)) == Fraction(1, 4)


@pytest.mark.integration
@pytest.mark.slow
class TestPsiReduction:
    def setup_method(self):
        self.nu = dirac(constant(1), HORIZON)
        self.mubar = dirac(constant(0), HORIZON)

    @pytest.mark.acceptance
    def test_divergent_beta_approaches_limit(self):
        result = psi_reduction([8, 9, 10, 11, 12], self.nu, [self.mubar], BREAKPOINTS, 5,
                               Fraction(1, 8), HORIZON)
        assert result.build.all_pass
        terminal = result.terminal
        assert terminal.psi == Fraction(1, 13)
        assert terminal.to_limit <= terminal.bound + Fraction(1, 13)
        assert result.to_csv().splitlines()[0] == ",".join(PSI_COLUMNS)

    def test_bounded_beta_tracks_mixture(self):
        result = psi_reduction([1, 1, 1], self.nu, [self.mubar], BREAKPOINTS, 4,
                               Fraction(1, 8), HORIZON)
        for row in result.diagnostics:
            assert row.psi == Fraction(1, 2)
            assert row.to_mixture <= row.bound

    def test_prefix_depends_on_early_beta_only(self):
        short = psi_reduction([3, 3, 3], self.nu, [self.mubar], BREAKPOINTS, 3, Fraction(1, 8), HORIZON)
        long = psi_reduction([3, 3, 3, 7, 9], self.nu, [self.mubar], BREAKPOINTS, 3, Fraction(1, 8), HORIZON)
        L_2 = short.build.state.L[2]
        assert long.build.state.L[2] == L_2
        assert short.build.point.prefix(L_2) == long.build.point.prefix(L_2)

    def test_indistinguishable_nu_rejected(self):
        with pytest.raises(PreconditionError):
            psi_reduction([1], self.mubar, [self.mubar], [1], 1, Fraction(1, 8), HORIZON)


@pytest.mark.integration
@pytest.mark.slow
class TestPhiReduction:
    def setup_method(self):
        self.nu = dirac(constant(1), HORIZON)
        self.mubar = dirac(constant(0), HORIZON)
        self.phi = LocalObservable.indicator(1, (0, 1))

    @pytest.mark.acceptance
    def test_bounded_beta_oscillates(self):
        result = phi_reduction([1, 1, 1], self.nu, self.mubar, self.phi, BREAKPOINTS, 5,
                               Fraction(1, 8), HORIZON)
        assert result.alpha == 0
        assert result.nu_integral == 1
        assert max(result.amplitudes()) >= Fraction(1, 4)
        assert result.expected_at(1) == Fraction(1, 2)
        assert result.expected_at(2) == 0
        assert result.verdict.kind in ("regular", "irregular", "undecided")
        frame = result.to_frame()
        assert list(frame["stage"]) == [1, 2, 3, 4, 5]
        assert "expected_decimal" in frame.columns

    def test_first_checkpoint_is_balanced(self):
        result = phi_reduction([1, 1], self.nu, self.mubar, self.phi, [1, 2, 3], 2,
                               Fraction(1, 8), HORIZON)
        assert result.series.values[0][1] == Fraction(1, 2)

    def test_observable_must_separate(self):
        constant_phi = LocalObservable.constant(1, (0, 1))
        with pytest.raises(PreconditionError):
            phi_reduction([1], self.nu, self.mubar, constant_phi, [1], 1, Fraction(1, 8), HORIZON)
