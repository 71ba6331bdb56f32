"""
Specifications, Bowen balls, tracing verifiers and the constructive builders
for generic points on full shifts.

Orbit segments are compared in one of two ways. By default a segment is
treated as a finite word: at index t of a segment of length n the comparison
covers the n - t symbols that remain in the segment, and exact concatenation
traces every specification with no gaps and no errors. With an explicit
horizon the global metric is used instead; then each segment must be
followed by saps_gap(eps) symbols of its own continuation to trace exactly.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
from sympy import Matrix, Rational

from src.dynamics.measure import (
    DiscreteMeasure,
    convex_combine,
    emp_measure,
    emp_measures_at,
    emp_of_points,
    orbit_measure,
    prohorov,
)
from src.dynamics.symbolic import (
    EventuallyPeriodicPoint,
    Point,
    ShiftSpace,
    max_bad_depth,
    rho,
    word_distance,
)
from src.utils.config import config
from src.utils.errors import BudgetExceeded, PreconditionError
from src.utils.formatting import frame_to_csv, rational_columns
from src.utils.logger import LogTimer, log_stage, logger

CERTIFICATE_COLUMNS = [
    "stage", "L_n", "bound_num", "bound_den", "bound_decimal",
    "achieved_num", "achieved_den", "achieved_decimal", "pass",
]


@dataclass(frozen=True)
class Specification:
    """Finite sequence of orbit segments (x_j, n_j)"""

    segments: Tuple[Tuple[Point, int], ...]

    def __post_init__(self):
        if not self.segments:
            raise PreconditionError("a specification needs at least one orbit segment")
        for _, length in self.segments:
            if length < 1:
                raise PreconditionError(f"segment lengths must be positive, got {length}")

    @classmethod
    def of(cls, pairs: Iterable[Tuple[Point, int]]) -> "Specification":
        return cls(tuple((point, int(length)) for point, length in pairs))

    @property
    def lengths(self) -> Tuple[int, ...]:
        return tuple(length for _, length in self.segments)

    @property
    def total_length(self) -> int:
        return sum(self.lengths)

    def __len__(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class TraceReport:
    gaps: Tuple[int, ...]
    errors: Tuple[Tuple[int, ...], ...]  # indices of each segment outside Lambda_j
    lambda_sizes: Tuple[int, ...]
    total_length: int
    verdict: bool
    failed_segment: Optional[int] = None

    @property
    def error_counts(self) -> Tuple[int, ...]:
        return tuple(len(errors) for errors in self.errors)

    def to_dict(self) -> Dict[str, object]:
        return {
            "verdict": self.verdict,
            "gaps": list(self.gaps),
            "error_counts": list(self.error_counts),
            "errors": [list(errors) for errors in self.errors],
            "lambda_sizes": list(self.lambda_sizes),
            "total_length": self.total_length,
            "failed_segment": self.failed_segment,
        }


def bowen_distance(x: Point, y: Point, indices: Iterable[int], horizon: int) -> Fraction:
    """max over j in indices of rho(T^j x, T^j y)"""
    indices = sorted(set(indices))
    if not indices:
        raise PreconditionError("Bowen distance needs a nonempty index set")
    if indices[0] < 0:
        raise PreconditionError("Bowen indices must be nonnegative")
    return max(word_distance(x.window(j, horizon), y.window(j, horizon)) for j in indices)


def bowen_ball_member(y: Point, x: Point, indices: Iterable[int], eps: Fraction, horizon: int) -> bool:
    return bowen_distance(x, y, indices, horizon) < Fraction(eps)


def saps_gap(eps: Fraction) -> int:
    """Continuation length after each segment that makes concatenation eps-exact"""
    return max(0, max_bad_depth(Fraction(eps)))


def trace_full_shift(xi: Specification, space: Optional[ShiftSpace] = None, pad: int = 0) -> EventuallyPeriodicPoint:
    """Concatenation of the segments, extended periodically by the last one

    With pad > 0 every segment is followed by pad symbols of its own
    continuation, so consecutive segments are separated by gaps of length pad.
    """
    if pad < 0:
        raise PreconditionError(f"pad must be nonnegative, got {pad}")
    space = space or ShiftSpace.full()
    if not space.is_full:
        raise PreconditionError(f"exact concatenation needs a full shift, got {space.name!r}")
    pieces = []
    for point, length in xi.segments:
        piece = point.prefix(length + pad)
        space.check_word(piece)
        pieces.append(piece)
    head: List[int] = []
    for piece in pieces[:-1]:
        head.extend(piece)
    return EventuallyPeriodicPoint(head, pieces[-1])


def full_shift_contains(xi: Specification, alphabet: Iterable[int]) -> bool:
    """Whether every segment of xi is a word over alphabet"""
    space = ShiftSpace.full(alphabet)
    return all(space.contains_word(point.prefix(length)) for point, length in xi.segments)


def _error_positions(y: Point, offset: int, x: Point, n: int, depth: int,
                     horizon: Optional[int]) -> Tuple[int, ...]:
    """Indices t < n where T^(offset+t) y is not eps-close to T^t x"""
    if depth < 0:
        return ()
    if horizon is None:
        reach, span = depth, n
    else:
        reach = min(depth, horizon - 1)
        span = n + reach
    traced = y.window(offset, span)
    target = x.prefix(span)
    errors = []
    next_mismatch = None
    for i in range(span - 1, -1, -1):
        if traced[i] != target[i]:
            next_mismatch = i
        if i < n and next_mismatch is not None and next_mismatch - i <= reach:
            errors.append(i)
    errors.reverse()
    return tuple(errors)


def verify_trace(y: Point, xi: Specification, eps, delta1=0, delta2=0,
                 horizon: Optional[int] = None) -> TraceReport:
    """Search gaps smallest-first for a witness that y (eps, delta1, delta2)-traces xi"""
    eps, delta1, delta2 = Fraction(eps), Fraction(delta1), Fraction(delta2)
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if not (0 <= delta1 <= 1 and 0 <= delta2 <= 1):
        raise PreconditionError("error and gap fractions must lie in [0, 1]")
    if horizon is not None and horizon < 1:
        raise PreconditionError(f"horizon must be positive, got {horizon}")
    depth = max_bad_depth(eps)

    (x1, n1), *rest = xi.segments
    first_errors = _error_positions(y, 0, x1, n1, depth, horizon)
    gaps: List[int] = []
    errors: List[Tuple[int, ...]] = [first_errors]
    if first_errors:
        return TraceReport(tuple(gaps), tuple(errors), (n1 - len(first_errors),), n1, False, 1)

    offset = n1
    for index, (x, n) in enumerate(rest, start=2):
        witness = None
        for gap in range(math.floor(delta2 * n) + 1):
            found = _error_positions(y, offset + gap, x, n, depth, horizon)
            if n - len(found) >= (1 - delta1) * n:
                witness = (gap, found)
                break
        if witness is None:
            sizes = tuple(n_j - len(e) for (_, n_j), e in zip(xi.segments, errors))
            return TraceReport(tuple(gaps), tuple(errors), sizes, offset, False, index)
        gap, found = witness
        gaps.append(gap)
        errors.append(found)
        offset += gap + n

    sizes = tuple(n_j - len(e) for (_, n_j), e in zip(xi.segments, errors))
    return TraceReport(tuple(gaps), tuple(errors), sizes, offset, True, None)


@dataclass(frozen=True)
class CloseSegmentsReport:
    distance: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.distance <= self.bound


def close_segments_report(xbar: Sequence[Point], ybar: Sequence[Point],
                          matching: Sequence[Tuple[int, int]], gamma, delta, eps,
                          horizon: int) -> CloseSegmentsReport:
    """Both sides of D(Emp(xbar), Emp(ybar)) <= 2 gamma + delta + eps"""
    gamma, delta, eps = Fraction(gamma), Fraction(delta), Fraction(eps)
    k, l = len(xbar), len(ybar)
    if k == 0:
        raise PreconditionError("xbar must be nonempty")
    if gamma < 0 or delta < 0 or eps <= 0:
        raise PreconditionError("need gamma >= 0, delta >= 0 and eps > 0")
    if not k <= l <= (1 + delta) * k:
        raise PreconditionError(f"lengths violate k <= l <= (1+delta)k: k={k}, l={l}")
    pairs = list(matching)
    for (a0, b0), (a1, b1) in zip(pairs, pairs[1:]):
        if not (a0 < a1 and b0 < b1):
            raise PreconditionError("matching must be strictly increasing in both coordinates")
    for a, b in pairs:
        if not (0 <= a < k and 0 <= b < l):
            raise PreconditionError(f"matched pair ({a}, {b}) out of range")
        if rho(xbar[a], ybar[b], horizon) >= eps:
            raise PreconditionError(f"matched pair ({a}, {b}) is not eps-close")
    if len(pairs) < (1 - gamma) * k:
        raise PreconditionError(f"only {len(pairs)} of {k} points matched")

    distance = prohorov(emp_of_points(xbar, horizon), emp_of_points(ybar, horizon), horizon)
    return CloseSegmentsReport(distance=distance, bound=2 * gamma + delta + eps)


def close_segments_bound_check(xbar, ybar, matching, gamma, delta, eps, horizon: int) -> bool:
    return close_segments_report(xbar, ybar, matching, gamma, delta, eps, horizon).holds


@dataclass(frozen=True)
class ProtogenericResult:
    point: EventuallyPeriodicPoint
    block: int  # certified length Q * K
    weight_denominator: int  # Q
    segment_length: int  # K
    components: Tuple[Tuple[Fraction, EventuallyPeriodicPoint], ...]
    distance: Fraction
    eps: Fraction


def _minimal_rotation(per: Tuple[int, ...]) -> Tuple[int, ...]:
    return min(per[i:] + per[:i] for i in range(len(per)))


def _merge_orbits(pairs: Iterable[Tuple[Fraction, Point]]) -> List[Tuple[Fraction, EventuallyPeriodicPoint]]:
    orbits: Dict[Tuple[int, ...], Fraction] = {}
    for weight, point in pairs:
        if not isinstance(point, EventuallyPeriodicPoint) or not point.is_periodic:
            raise PreconditionError("support points must be periodic")
        rep = _minimal_rotation(point.per)
        orbits[rep] = orbits.get(rep, Fraction(0)) + weight
    return [(weight, EventuallyPeriodicPoint((), rep)) for rep, weight in sorted(orbits.items()) if weight > 0]


def _rational(value: Fraction) -> Rational:
    return Rational(value.numerator, value.denominator)


def _solve_orbit_weights(mu: DiscreteMeasure,
                         candidates: Sequence[EventuallyPeriodicPoint]) -> Optional[List[Fraction]]:
    """Nonnegative weights q with sum q_i * orbit(z_i) = mu, or None"""
    columns = [orbit_measure(z, mu.horizon) for z in candidates]
    keys = sorted(set(mu.keys).union(*(column.keys for column in columns)))
    matrix = Matrix([[_rational(column.weight_of(key)) for column in columns] for key in keys])
    rhs = Matrix([_rational(mu.weight_of(key)) for key in keys])
    try:
        solution, params = matrix.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    solution = solution.subs({param: 0 for param in params})
    weights = [Fraction(int(value.p), int(value.q)) for value in solution]
    if any(weight < 0 for weight in weights):
        return None
    return weights


def decompose_periodic(mu: DiscreteMeasure) -> List[Tuple[Fraction, EventuallyPeriodicPoint]]:
    """Write mu as sum of q_i times the orbit measure of a periodic point z_i

    Mixtures built from orbit measures carry their components. Otherwise the
    orbits of the support representatives are the candidates and their
    weights are solved for exactly, since an atom shared by several orbits
    keeps a single representative.
    """
    if mu.components is not None:
        return _merge_orbits(mu.components)

    candidates = [z for _, z in _merge_orbits((weight, point) for weight, point in zip(mu.weights, mu.points))]
    weights = _solve_orbit_weights(mu, candidates)
    if weights is None:
        raise PreconditionError("measure is not a combination of periodic orbit measures")
    components = [(q, z) for q, z in zip(weights, candidates) if q > 0]
    rebuilt = convex_combine([q for q, _ in components],
                             [orbit_measure(z, mu.horizon) for _, z in components])
    if rebuilt != mu:
        raise PreconditionError("measure is not a combination of periodic orbit measures")
    return components


def protogeneric(mu: Union[DiscreteMeasure, Sequence[Tuple[Fraction, EventuallyPeriodicPoint]]],
                 eps, n: int = 1, horizon: Optional[int] = None,
                 length_cap: Optional[int] = None) -> ProtogenericResult:
    """A point x with D(mu, Emp(x, n*block)) < eps for a rational periodic mixture mu

    Each z_i is repeated n*p_i times in segments of length K, K running through
    doublings of the common period until the certificate passes.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if isinstance(mu, DiscreteMeasure):
        horizon = horizon or mu.horizon
        components = decompose_periodic(mu.at_horizon(min(horizon, mu.horizon)))
    else:
        horizon = horizon or config.horizon
        components = [(Fraction(q), z) for q, z in mu]
    length_cap = length_cap or config.length_cap

    for q, z in components:
        if not isinstance(z, EventuallyPeriodicPoint) or not z.is_periodic:
            raise PreconditionError("components must be periodic points")
        if q < 0:
            raise PreconditionError("component weights must be nonnegative")
    components = [(q, z) for q, z in components if q > 0]
    if sum(q for q, _ in components) != 1:
        raise PreconditionError("component weights must sum to 1")

    Q = reduce(math.lcm, (q.denominator for q, _ in components), 1)
    period = reduce(math.lcm, (z.period for _, z in components), 1)
    target = convex_combine([q for q, _ in components],
                            [orbit_measure(z, horizon) for _, z in components])

    K = period
    while True:
        length = n * Q * K
        if length > length_cap:
            raise BudgetExceeded(
                f"protogeneric block {length} exceeds the length cap {length_cap}",
                {"eps": eps, "n": n, "K": K})
        segments = []
        for q, z in components:
            segments.extend([(z, K)] * (n * int(q * Q)))
        x = trace_full_shift(Specification.of(segments))
        distance = prohorov(target, emp_measure(x, length, horizon), horizon)
        if distance < eps:
            logger.debug(f"protogeneric: Q={Q} K={K} distance={distance} < {eps}")
            return ProtogenericResult(point=x, block=Q * K, weight_denominator=Q,
                                      segment_length=K, components=tuple(components),
                                      distance=distance, eps=eps)
        K *= 2


@dataclass(frozen=True)
class CertificateRow:
    stage: int
    length: int
    bound: Fraction
    achieved: Fraction
    terms: Tuple[Tuple[str, Fraction, Fraction], ...] = ()

    @property
    def passed(self) -> bool:
        return self.achieved <= self.bound

    @property
    def terms_hold(self) -> bool:
        return all(value <= bound for _, value, bound in self.terms)


@dataclass
class GenericBuildState:
    """Parameters of the inductive construction, index n = stage"""

    stage: int = 0
    K: Dict[int, int] = field(default_factory=dict)
    ell: Dict[int, int] = field(default_factory=dict)
    L: Dict[int, int] = field(default_factory=dict)
    anchors: Dict[int, ProtogenericResult] = field(default_factory=dict)
    point: Optional[EventuallyPeriodicPoint] = None

    def check_invariants(self) -> bool:
        """L_{n-1} >= n K_n, ell_n K_n >= (n+1) K_{n+1} and ell_n K_n >= n L_{n-1}"""
        for n in range(1, self.stage + 1):
            if self.L[n - 1] < n * self.K[n]:
                return False
            if self.ell[n] * self.K[n] < (n + 1) * self.K[n + 1]:
                return False
            if self.ell[n] * self.K[n] < n * self.L[n - 1]:
                return False
        return True


@dataclass(frozen=True)
class GenericBuild:
    point: EventuallyPeriodicPoint
    state: GenericBuildState
    certificate: Tuple[CertificateRow, ...]
    horizon: int

    @property
    def length(self) -> int:
        return self.state.L[self.state.stage]

    @property
    def prefix(self):
        return self.point.prefix(self.length)

    @property
    def all_pass(self) -> bool:
        return all(row.passed for row in self.certificate)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for row in self.certificate:
            rows.append({
                "stage": row.stage,
                "L_n": row.length,
                **rational_columns("bound", row.bound),
                **rational_columns("achieved", row.achieved),
                "pass": row.passed,
            })
        return pd.DataFrame(rows, columns=CERTIFICATE_COLUMNS)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def _emp_of_repeated(parts: Sequence[Tuple[Point, int, int]], horizon: int) -> DiscreteMeasure:
    """Empirical measure of a specification given as (point, length, repetitions)"""
    total = sum(length * reps for _, length, reps in parts)
    return convex_combine([Fraction(length * reps, total) for _, length, reps in parts],
                          [emp_measure(point, length, horizon) for point, length, _ in parts])


def build_generic_point(mus: Sequence[DiscreteMeasure], eps, stages: int,
                        horizon: Optional[int] = None, length_cap: Optional[int] = None,
                        y0: Optional[Point] = None, with_terms: bool = True) -> GenericBuild:
    """Run the stage-by-stage construction of a point generic for the limit of mus

    mus[n-1] is the stage-n target; the list is extended by its last entry.
    Stage n appends ell_n copies of the anchor block (x_n, K_n) to the prefix of
    length L_{n-1}. Every certificate row is checked with prohorov.
    """
    eps = Fraction(eps)
    horizon = horizon or config.horizon
    length_cap = length_cap or config.length_cap
    if not mus:
        raise PreconditionError("at least one target measure is required")
    if stages < 1:
        raise PreconditionError(f"stages must be positive, got {stages}")
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")

    def target(n: int) -> DiscreteMeasure:
        return mus[min(n, len(mus)) - 1]

    state = GenericBuildState()
    with LogTimer("build_generic_point", stages=stages):
        for n in range(1, stages + 2):
            anchor = protogeneric(target(n), eps / 2 ** (n + 1), 1, horizon, length_cap)
            state.anchors[n] = anchor
            state.K[n] = anchor.block
        for n in range(1, stages + 1):
            distance = prohorov(target(n), target(n + 1), horizon)
            log_stage(n, "targets", "recorded", distance_to_next=distance)

        y_prev: Point = y0 if y0 is not None else state.anchors[1].point
        state.L[0] = state.K[1]
        stage_points: Dict[int, Point] = {0: y_prev}
        for n in range(1, stages + 1):
            K_n, K_next, L_prev = state.K[n], state.K[n + 1], state.L[n - 1]
            ell = max(1, -(-(n + 1) * K_next // K_n), -(-n * L_prev // K_n))
            L_n = L_prev + ell * K_n
            if L_n > length_cap:
                raise BudgetExceeded(
                    f"stage {n} needs a prefix of length {L_n} > cap {length_cap}",
                    {"stage": n, "L_n": L_n})
            xi = Specification.of([(y_prev, L_prev)] + [(state.anchors[n].point, K_n)] * ell)
            y_prev = trace_full_shift(xi)
            stage_points[n] = y_prev
            state.ell[n], state.L[n], state.stage = ell, L_n, n
            log_stage(n, "generic", "built", K=K_n, ell=ell, L=L_n)

        y = stage_points[stages]
        state.point = y
        if not state.check_invariants():
            raise PreconditionError("stage parameters violate the construction invariants")

        checkpoints = [state.L[n] for n in range(1, stages + 1)]
        emps = emp_measures_at(y, checkpoints, horizon)
        rows = []
        for n, emp in zip(range(1, stages + 1), emps):
            achieved = prohorov(emp, target(n), horizon)
            bound = Fraction(1, n) + 7 * eps / 2 ** (n + 1)
            terms: Tuple[Tuple[str, Fraction, Fraction], ...] = ()
            if with_terms:
                terms = _stage_terms(n, y, stage_points, state, target(n), eps, horizon, emp)
                for name, value, term_bound in terms:
                    log_stage(n, f"term:{name}", "ok" if value <= term_bound else "exceeded",
                              value=value, bound=term_bound)
            row = CertificateRow(stage=n, length=state.L[n], bound=bound, achieved=achieved, terms=terms)
            log_stage(n, "certificate", "pass" if row.passed else "FAIL",
                      achieved=achieved, bound=bound)
            rows.append(row)

    return GenericBuild(point=y, state=state, certificate=tuple(rows), horizon=horizon)


def _stage_terms(n: int, y: Point, stage_points: Dict[int, Point],
                 state: GenericBuildState, mu_n: DiscreteMeasure, eps: Fraction,
                 horizon: int, emp_y: DiscreteMeasure) -> Tuple[Tuple[str, Fraction, Fraction], ...]:
    """Decomposition of the stage-n bound into tail, tracing, mixture and anchor terms"""
    L_n, L_prev, K_n, ell = state.L[n], state.L[n - 1], state.K[n], state.ell[n]
    y_n = stage_points[n]
    anchor = state.anchors[n].point

    emp_y_n = emp_measure(y_n, L_n, horizon)
    emp_xi = _emp_of_repeated([(stage_points[n - 1], L_prev, 1), (anchor, K_n, ell)], horizon)
    emp_anchor = emp_measure(anchor, K_n, horizon)

    scale = eps / 2 ** (n + 1)
    return (
        ("tail", prohorov(emp_y, emp_y_n, horizon), 2 * scale),
        ("tracing", prohorov(emp_y_n, emp_xi, horizon), 4 * scale),
        ("mixture", prohorov(emp_xi, emp_anchor, horizon), Fraction(1, n)),
        ("anchor", prohorov(emp_anchor, mu_n, horizon), scale),
    )
