"""
Ergodic averages of local observables and finite-horizon classifiers.

Observables depend on a fixed window of coordinates and take exact rational
values. Dense average series are computed from integer prefix sums over a
common denominator, so every reported average is exact.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.dynamics.measure import DiscreteMeasure, emp_measures_at, prohorov
from src.dynamics.symbolic import Point, Word
from src.utils.errors import AlphabetError, PreconditionError
from src.utils.formatting import frame_to_csv, rational_columns
from src.utils.performance import parallel_map

VSET_COLUMNS = ["n", "target_id", "distance_num", "distance_den", "distance_decimal"]


@dataclass(frozen=True)
class LocalObservable:
    """Function of the first `window` coordinates, tabulated over alphabet^window"""

    window: int
    table: Mapping[Word, Fraction]
    alphabet: FrozenSet[int]
    name: str = "phi"

    def __post_init__(self):
        if self.window < 1:
            raise PreconditionError(f"observable window must be positive, got {self.window}")
        expected = set(itertools.product(sorted(self.alphabet), repeat=self.window))
        if set(self.table) != expected:
            raise PreconditionError(
                f"observable {self.name!r} must be tabulated on all of alphabet^{self.window}")

    @classmethod
    def from_function(cls, window: int, alphabet: Iterable[int],
                      func: Callable[[Word], Fraction], name: str = "phi") -> "LocalObservable":
        alphabet = frozenset(alphabet)
        table = {word: Fraction(func(word))
                 for word in itertools.product(sorted(alphabet), repeat=window)}
        return cls(window=window, table=table, alphabet=alphabet, name=name)

    @classmethod
    def indicator(cls, symbol: int = 1, alphabet: Iterable[int] = (0, 1)) -> "LocalObservable":
        """Indicator of the cylinder {x : x_0 = symbol}"""
        return cls.from_function(1, alphabet, lambda word: 1 if word[0] == symbol else 0,
                                 name=f"chi[x0={symbol}]")

    @classmethod
    def constant(cls, value, alphabet: Iterable[int] = (0, 1)) -> "LocalObservable":
        return cls.from_function(1, alphabet, lambda word: value, name=f"const[{value}]")

    @property
    def bound(self) -> Fraction:
        return max(abs(value) for value in self.table.values())

    def __call__(self, word: Sequence[int]) -> Fraction:
        key = tuple(word[:self.window])
        try:
            return self.table[key]
        except KeyError:
            raise AlphabetError(f"observable {self.name!r} is undefined on {key}") from None

    def integer_table(self) -> Tuple[Dict[Word, int], int]:
        """Values rescaled to integers over their common denominator"""
        denominator = 1
        for value in self.table.values():
            denominator = denominator * value.denominator // math.gcd(denominator, value.denominator)
        return {word: int(value * denominator) for word, value in self.table.items()}, denominator


def birkhoff_average(phi: LocalObservable, x: Point, k: int) -> Fraction:
    """A_k phi(x) = (1/k) * sum of phi over the shifts 0..k-1 of x"""
    if k < 1:
        raise PreconditionError(f"k must be positive, got {k}")
    word = x.prefix(k + phi.window - 1)
    total = sum((phi(word[j:j + phi.window]) for j in range(k)), Fraction(0))
    return total / k


def integrate(phi: LocalObservable, mu: DiscreteMeasure) -> Fraction:
    if mu.horizon < phi.window:
        raise PreconditionError(
            f"measure horizon {mu.horizon} is shorter than the observable window {phi.window}")
    return sum((weight * phi(key) for key, weight in zip(mu.keys, mu.weights)), Fraction(0))


# Partial sums stay in int64 below this magnitude and fall back to Python ints above it
INT64_SUM_LIMIT = 2 ** 62


class RunningAverage:
    """Exact A_k for every k <= K from integer prefix sums"""

    def __init__(self, numerators: Sequence[int], denominator: int):
        values = np.asarray(numerators)
        exact = values.dtype == object or values.size * int(np.abs(values).max(initial=0)) >= INT64_SUM_LIMIT
        if exact:
            sums = np.cumsum(np.array([int(value) for value in values.tolist()], dtype=object))
        else:
            sums = np.cumsum(values, dtype=np.int64)
        self.sums = np.concatenate((np.zeros(1, dtype=sums.dtype), sums))
        self.denominator = denominator

    @classmethod
    def of(cls, phi: LocalObservable, x: Point, length: int) -> "RunningAverage":
        if length < 1:
            raise PreconditionError(f"series length must be positive, got {length}")
        table, denominator = phi.integer_table()
        peak = max(abs(value) for value in table.values())
        dtype = np.int64 if peak * length < INT64_SUM_LIMIT else object
        word = x.prefix(length + phi.window - 1)
        m = phi.window
        try:
            numerators = np.fromiter((table[word[j:j + m]] for j in range(length)),
                                     dtype=dtype, count=length)
        except KeyError as e:
            raise AlphabetError(f"observable {phi.name!r} is undefined on {e.args[0]}") from None
        return cls(numerators, denominator)

    def __len__(self) -> int:
        return len(self.sums) - 1

    def at(self, k: int) -> Fraction:
        if not 1 <= k <= len(self):
            raise PreconditionError(f"k={k} outside 1..{len(self)}")
        return Fraction(int(self.sums[k]), self.denominator * k)

    def floats(self, start: int, stop: int) -> np.ndarray:
        ks = np.arange(start, stop + 1)
        return self.sums[start:stop + 1].astype(np.float64) / (ks * float(self.denominator))

    def _exact_best(self, candidates: np.ndarray, largest: bool) -> int:
        best = int(candidates[0])
        for k in candidates[1:]:
            k = int(k)
            # sums[k]/k vs sums[best]/best by cross-multiplication
            lhs = int(self.sums[k]) * best
            rhs = int(self.sums[best]) * k
            if (lhs > rhs) if largest else (lhs < rhs):
                best = k
        return best

    def extremes(self, start: int, stop: int) -> Tuple[int, int]:
        """(argmin, argmax) of A_k over start <= k <= stop, decided exactly"""
        values = self.floats(start, stop)
        ks = np.arange(start, stop + 1)
        slack = 1e-9
        k_min = self._exact_best(ks[values <= values.min() + slack], largest=False)
        k_max = self._exact_best(ks[values >= values.max() - slack], largest=True)
        return k_min, k_max

    def largest_moves(self, start: int, stop: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        """Witness pairs (k, l), k < l, for the largest rise and the largest fall"""
        values = self.floats(start, stop)
        ks = np.arange(start, stop + 1)
        rise_end = int(np.argmax(values - np.minimum.accumulate(values)))
        rise_start = int(np.argmin(values[:rise_end + 1]))
        fall_end = int(np.argmax(np.maximum.accumulate(values) - values))
        fall_start = int(np.argmax(values[:fall_end + 1]))
        return ((int(ks[rise_start]), int(ks[rise_end])),
                (int(ks[fall_start]), int(ks[fall_end])))


@dataclass(frozen=True)
class AverageSeries:
    """Averages A_k phi(x) at selected k plus tail extremes"""

    values: Tuple[Tuple[int, Fraction], ...]
    liminf_est: Fraction
    limsup_est: Fraction

    def __post_init__(self):
        ks = [k for k, _ in self.values]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise PreconditionError("series indices must be strictly increasing")

    def to_frame(self) -> pd.DataFrame:
        rows = [{"k": k, **rational_columns("average", value)} for k, value in self.values]
        return pd.DataFrame(rows, columns=["k", "average_num", "average_den", "average_decimal"])


def average_series(phi: LocalObservable, x: Point, checkpoints: Sequence[int],
                   tail_fraction: Fraction = Fraction(1, 2)) -> AverageSeries:
    """Averages at the checkpoints; extremes estimated over [tau*K, K], K the last checkpoint"""
    checkpoints = list(checkpoints)
    if not checkpoints or checkpoints[0] < 1:
        raise PreconditionError("checkpoints must be positive")
    running = RunningAverage.of(phi, x, checkpoints[-1])
    K = checkpoints[-1]
    start = max(1, math.ceil(Fraction(tail_fraction) * K))
    k_min, k_max = running.extremes(start, K)
    return AverageSeries(
        values=tuple((k, running.at(k)) for k in checkpoints),
        liminf_est=running.at(k_min),
        limsup_est=running.at(k_max),
    )


@dataclass(frozen=True)
class RegularityVerdict:
    kind: str  # "regular" | "irregular" | "undecided"
    alpha: Optional[Fraction]
    gap: Fraction
    liminf_est: Fraction
    limsup_est: Fraction
    k_min: int
    k_max: int
    rise: Fraction
    fall: Fraction

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "alpha": str(self.alpha) if self.alpha is not None else None,
            "gap": str(self.gap),
            "liminf_est": str(self.liminf_est),
            "limsup_est": str(self.limsup_est),
            "k_min": self.k_min,
            "k_max": self.k_max,
            "rise": str(self.rise),
            "fall": str(self.fall),
        }


def regularity_report(phi: LocalObservable, x: Point, horizon: int,
                      tail_fraction: Fraction = Fraction(1, 2),
                      tolerance: Fraction = Fraction(1, 20),
                      running: Optional[RunningAverage] = None) -> RegularityVerdict:
    """Three-valued finite-horizon verdict on convergence of A_k phi(x)

    regular(alpha) when the tail spread is below the tolerance; irregular when
    the spread exceeds twice the tolerance and the tail both rises and falls by
    more than the tolerance; undecided otherwise.
    """
    K = horizon
    tail_fraction = Fraction(tail_fraction)
    tolerance = Fraction(tolerance)
    if K < 10:
        raise PreconditionError(f"horizon must be at least 10, got {K}")
    if not 0 < tail_fraction < 1:
        raise PreconditionError(f"tail fraction must lie in (0, 1), got {tail_fraction}")
    if tolerance <= 0:
        raise PreconditionError(f"tolerance must be positive, got {tolerance}")

    if running is None:
        running = RunningAverage.of(phi, x, K)
    elif len(running) < K:
        raise PreconditionError(f"running average covers {len(running)} < {K} terms")
    start = max(1, math.ceil(tail_fraction * K))
    k_min, k_max = running.extremes(start, K)
    low, high = running.at(k_min), running.at(k_max)
    spread = high - low
    (r0, r1), (f0, f1) = running.largest_moves(start, K)
    rise = running.at(r1) - running.at(r0)
    fall = running.at(f0) - running.at(f1)

    if spread < tolerance:
        kind, alpha = "regular", (low + high) / 2
    elif spread > 2 * tolerance and rise > tolerance and fall > tolerance:
        kind, alpha = "irregular", None
    else:
        kind, alpha = "undecided", None
    return RegularityVerdict(kind=kind, alpha=alpha, gap=spread, liminf_est=low,
                             limsup_est=high, k_min=k_min, k_max=k_max, rise=rise, fall=fall)


@dataclass(frozen=True)
class VSetTable:
    """Distances from empirical measures at checkpoints to a family of targets"""

    checkpoints: Tuple[int, ...]
    distances: Tuple[Tuple[Fraction, ...], ...]  # [checkpoint][target]
    cauchy: Tuple[Fraction, ...]  # D(Emp(x, n_i), Emp(x, n_{i+1}))

    def min_trajectory(self) -> List[Tuple[int, int, Fraction]]:
        """Per checkpoint: (n, nearest target id, distance)"""
        trajectory = []
        for n, row in zip(self.checkpoints, self.distances):
            target = min(range(len(row)), key=lambda index: (row[index], index))
            trajectory.append((n, target, row[target]))
        return trajectory

    def target_trajectory(self, target_id: int) -> List[Fraction]:
        return [row[target_id] for row in self.distances]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for n, row in zip(self.checkpoints, self.distances):
            for target_id, distance in enumerate(row):
                rows.append({"n": n, "target_id": target_id, **rational_columns("distance", distance)})
        return pd.DataFrame(rows, columns=VSET_COLUMNS)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def vset_diagnostics(x: Point, targets: Sequence[DiscreteMeasure], checkpoints: Sequence[int],
                     horizon: int, workers: int = 1) -> VSetTable:
    """Distance table D(Emp(x, n), target) with Cauchy diagnostics between checkpoints"""
    if not targets:
        raise PreconditionError("at least one target measure is required")
    checkpoints = list(checkpoints)
    emps = emp_measures_at(x, checkpoints, horizon)
    pairs = [(i, j) for i in range(len(emps)) for j in range(len(targets))]
    flat = parallel_map(lambda pair: prohorov(emps[pair[0]], targets[pair[1]], horizon),
                        pairs, workers)
    distances = tuple(tuple(flat[i * len(targets):(i + 1) * len(targets)]) for i in range(len(emps)))
    cauchy = tuple(parallel_map(lambda i: prohorov(emps[i], emps[i + 1], horizon),
                                range(len(emps) - 1), workers))
    return VSetTable(checkpoints=tuple(checkpoints), distances=distances, cauchy=cauchy)
