"""
Reductions from integer sequences to generic and irregular points.

A schedule places breakpoints n_0 < n_1 < ... on the stage axis and assigns
each a mixing weight; psi interpolates linearly in between. Stage j of the
generic-point builder then targets psi(j) nu + (1 - psi(j)) mu_j.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from src.dynamics.birkhoff import (
    AverageSeries,
    LocalObservable,
    RegularityVerdict,
    average_series,
    integrate,
    regularity_report,
)
from src.dynamics.measure import DiscreteMeasure, convex_combine, emp_measures_at, prohorov
from src.dynamics.tracing import GenericBuild, build_generic_point
from src.utils.config import config
from src.utils.errors import PreconditionError
from src.utils.formatting import frame_to_csv, rational_columns
from src.utils.logger import LogTimer, log_stage

PSI_COLUMNS = [
    "stage", "L_n", "psi_num", "psi_den", "psi_decimal",
    "achieved_num", "achieved_den", "achieved_decimal",
    "bound_num", "bound_den", "bound_decimal",
    "to_limit_num", "to_limit_den", "to_limit_decimal",
    "to_mixture_num", "to_mixture_den", "to_mixture_decimal",
]


@dataclass(frozen=True)
class PsiSchedule:
    """Breakpoints with their weights; linear in between, last value held"""

    breakpoints: Tuple[int, ...]
    values: Tuple[Fraction, ...]
    beta: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.breakpoints:
            raise PreconditionError("a schedule needs at least one breakpoint covered by beta")
        if len(self.breakpoints) != len(self.values):
            raise PreconditionError("one value per breakpoint is required")
        if self.breakpoints[0] < 1:
            raise PreconditionError("breakpoints are stage indices starting at 1")
        gaps = [b - a for a, b in zip(self.breakpoints, self.breakpoints[1:])]
        if any(gap < 1 for gap in gaps):
            raise PreconditionError("breakpoints must be strictly increasing")
        if any(later < earlier for earlier, later in zip(gaps, gaps[1:])):
            raise PreconditionError("breakpoint gaps must be nondecreasing")
        if any(not 0 <= value <= 1 for value in self.values):
            raise PreconditionError("schedule values must lie in [0, 1]")
        if any(b < 0 for b in self.beta):
            raise PreconditionError("beta takes values in the natural numbers")

    @classmethod
    def for_beta(cls, breakpoints: Sequence[int], beta: Sequence[int]) -> "PsiSchedule":
        """psi(n_k) = 1/(beta(k)+1)"""
        covered = min(len(breakpoints), len(beta))
        return cls(
            breakpoints=tuple(breakpoints[:covered]),
            values=tuple(Fraction(1, b + 1) for b in beta[:covered]),
            beta=tuple(beta),
        )

    @classmethod
    def alternating(cls, breakpoints: Sequence[int], beta: Sequence[int]) -> "PsiSchedule":
        """psi(n_2k) = 1/(beta(k)+1) and psi(n_2k+1) = 0"""
        covered = min(len(breakpoints), 2 * len(beta))
        values = tuple(Fraction(1, beta[k // 2] + 1) if k % 2 == 0 else Fraction(0)
                       for k in range(covered))
        return cls(breakpoints=tuple(breakpoints[:covered]), values=values, beta=tuple(beta))

    def psi(self, j: int) -> Fraction:
        if j <= self.breakpoints[0]:
            return self.values[0]
        if j >= self.breakpoints[-1]:
            return self.values[-1]
        for k in range(len(self.breakpoints) - 1):
            lo, hi = self.breakpoints[k], self.breakpoints[k + 1]
            if lo <= j <= hi:
                t = Fraction(j - lo, hi - lo)
                return (1 - t) * self.values[k] + t * self.values[k + 1]
        raise AssertionError("unreachable")

    def mixture(self, j: int, nu: DiscreteMeasure, mu: DiscreteMeasure) -> DiscreteMeasure:
        weight = self.psi(j)
        return convex_combine([weight, 1 - weight], [nu, mu])


@dataclass(frozen=True)
class PsiDiagnostic:
    stage: int
    length: int
    psi: Fraction
    achieved: Fraction
    bound: Fraction
    to_limit: Fraction
    to_mixture: Fraction


@dataclass(frozen=True)
class PsiReduction:
    build: GenericBuild
    schedule: PsiSchedule
    measures: Tuple[DiscreteMeasure, ...]
    diagnostics: Tuple[PsiDiagnostic, ...]

    @property
    def prefix(self):
        return self.build.prefix

    @property
    def terminal(self) -> PsiDiagnostic:
        return self.diagnostics[-1]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for row in self.diagnostics:
            rows.append({
                "stage": row.stage,
                "L_n": row.length,
                **rational_columns("psi", row.psi),
                **rational_columns("achieved", row.achieved),
                **rational_columns("bound", row.bound),
                **rational_columns("to_limit", row.to_limit),
                **rational_columns("to_mixture", row.to_mixture),
            })
        return pd.DataFrame(rows, columns=PSI_COLUMNS)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def _check_separated(nu: DiscreteMeasure, mubar: DiscreteMeasure, horizon: int) -> None:
    if prohorov(nu, mubar, horizon) == 0:
        raise PreconditionError("nu must be distinguishable from the limit target")


def psi_reduction(beta: Sequence[int], nu: DiscreteMeasure, mus: Sequence[DiscreteMeasure],
                  breakpoints: Sequence[int], stages: int, eps=Fraction(1, 8),
                  horizon: Optional[int] = None, length_cap: Optional[int] = None) -> PsiReduction:
    """Build a point whose stage-j target is psi(j) nu + (1 - psi(j)) mu_j

    mus is extended by its last entry, which plays the role of the limit
    measure mubar. Every checkpoint reports the distance to mubar and to the
    mixture psi(n) nu + (1 - psi(n)) mubar.
    """
    horizon = horizon or config.horizon
    if not mus:
        raise PreconditionError("at least one target measure is required")
    mubar = mus[-1]
    _check_separated(nu, mubar, horizon)
    schedule = PsiSchedule.for_beta(breakpoints, beta)

    def mu(j: int) -> DiscreteMeasure:
        return mus[min(j, len(mus)) - 1]

    measures = tuple(schedule.mixture(j, nu, mu(j)) for j in range(1, stages + 2))
    with LogTimer("psi_reduction", stages=stages):
        build = build_generic_point(measures, eps, stages, horizon, length_cap)
        diagnostics = _diagnose(build, schedule, nu, mubar, horizon)
    return PsiReduction(build=build, schedule=schedule, measures=measures, diagnostics=diagnostics)


def _diagnose(build: GenericBuild, schedule: PsiSchedule, nu: DiscreteMeasure,
              mubar: DiscreteMeasure, horizon: int) -> Tuple[PsiDiagnostic, ...]:
    checkpoints = [row.length for row in build.certificate]
    emps = emp_measures_at(build.point, checkpoints, horizon)
    rows = []
    for row, emp in zip(build.certificate, emps):
        weight = schedule.psi(row.stage)
        diagnostic = PsiDiagnostic(
            stage=row.stage,
            length=row.length,
            psi=weight,
            achieved=row.achieved,
            bound=row.bound,
            to_limit=prohorov(emp, mubar, horizon),
            to_mixture=prohorov(emp, schedule.mixture(row.stage, nu, mubar), horizon),
        )
        log_stage(row.stage, "psi", "diagnosed", psi=weight, to_limit=diagnostic.to_limit)
        rows.append(diagnostic)
    return tuple(rows)


@dataclass(frozen=True)
class PhiReduction:
    build: GenericBuild
    schedule: PsiSchedule
    series: AverageSeries
    verdict: RegularityVerdict
    alpha: Fraction
    nu_integral: Fraction

    @property
    def prefix(self):
        return self.build.prefix

    def amplitudes(self) -> List[Fraction]:
        """|A_{L_{n+1}} - A_{L_n}| between consecutive checkpoints"""
        values = [value for _, value in self.series.values]
        return [abs(b - a) for a, b in zip(values, values[1:])]

    def expected_at(self, stage: int) -> Fraction:
        weight = self.schedule.psi(stage)
        return weight * self.nu_integral + (1 - weight) * self.alpha

    def to_frame(self) -> pd.DataFrame:
        frame = self.series.to_frame()
        frame.insert(0, "stage", list(range(1, len(frame) + 1)))
        expected = pd.DataFrame([rational_columns("expected", self.expected_at(stage))
                                 for stage in frame["stage"]])
        return pd.concat([frame, expected], axis=1)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def phi_reduction(beta: Sequence[int], nu: DiscreteMeasure, mubar: DiscreteMeasure,
                  phi: LocalObservable, breakpoints: Sequence[int], stages: int,
                  eps=Fraction(1, 8), horizon: Optional[int] = None,
                  length_cap: Optional[int] = None,
                  tolerance=Fraction(1, 20)) -> PhiReduction:
    """Irregular point for phi unless beta diverges

    Even breakpoints mix in nu with weight 1/(beta(k)+1), odd breakpoints
    return to mubar, so A_k phi oscillates between the two integrals whenever
    beta has a bounded subsequence.
    """
    horizon = horizon or config.horizon
    alpha, nu_integral = integrate(phi, mubar), integrate(phi, nu)
    if alpha == nu_integral:
        raise PreconditionError(
            "observable does not separate nu from the limit target",
            {"integral": str(alpha)})
    schedule = PsiSchedule.alternating(breakpoints, beta)
    measures = [schedule.mixture(j, nu, mubar) for j in range(1, stages + 2)]

    with LogTimer("phi_reduction", stages=stages):
        build = build_generic_point(measures, eps, stages, horizon, length_cap)
        checkpoints = [row.length for row in build.certificate]
        series = average_series(phi, build.point, checkpoints)
        verdict = regularity_report(phi, build.point, max(10, checkpoints[-1]),
                                    tolerance=Fraction(tolerance))
    for stage, (k, value) in enumerate(series.values, start=1):
        log_stage(stage, "phi", "average", k=k, average=value)
    return PhiReduction(build=build, schedule=schedule, series=series, verdict=verdict,
                        alpha=alpha, nu_integral=nu_integral)
