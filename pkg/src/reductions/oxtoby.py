"""
Oxtoby's two-measure Toeplitz system and the reduction beta -> f(beta).

Words are strings over "01x"; "x" is a hole filled at a later level. For
odd n the words are

    W_n = Z_{n-1} W_{n-1}^(s_n - 1),  Z_n = Z_{n-1}^s_n,  O_n = Z_{n-1} O_{n-1}^(s_n - 1)

and for even n

    W_n = O_{n-1} W_{n-1}^(s_n - 1),  Z_n = O_{n-1} Z_{n-1}^(s_n - 1),  O_n = O_{n-1}^s_n

starting from W_0 = "x", Z_0 = "0", O_0 = "1". Frequencies m(u) are exact.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.dynamics.birkhoff import RunningAverage
from src.dynamics.symbolic import Point, RecipePoint, concat_power, is_suffix, register_recipe, subword_set
from src.utils.config import config
from src.utils.errors import HorizonExceeded, PreconditionError
from src.utils.formatting import frame_to_csv, rational_columns
from src.utils.logger import LogTimer, log_stage, logger
from src.utils.performance import WordCache

HOLE = "x"

STATS_COLUMNS = [
    "n", "s_n", "l_n",
    "m_zero_num", "m_zero_den", "m_zero_decimal",
    "m_one_num", "m_one_den", "m_one_decimal",
    "product_num", "product_den", "product_decimal",
    "identity", "fill",
]
REDUCE_COLUMNS = [
    "kind", "i", "length", "j",
    "m_num", "m_den", "m_decimal",
    "bound_num", "bound_den", "bound_decimal",
    "excess_num", "excess_den", "excess_decimal",
    "holds",
]


def default_parameters(count: int) -> Tuple[int, ...]:
    """s_j = 2^(j+1): 4, 8, 16, ..."""
    return tuple(2 ** (j + 1) for j in range(1, count + 1))


def frequency(word: str) -> Fraction:
    """m(u) = c(u) / |u|"""
    if not word:
        raise PreconditionError("frequency of the empty word")
    return Fraction(word.count("1"), len(word))


class OxtobyMachine:
    """Words W_n, Z_n, O_n for n <= depth with their exact frequency tables"""

    def __init__(self, s: Sequence[int], depth: int, cache_dir: Optional[Path] = None):
        s = tuple(int(value) for value in s)
        if depth < 0:
            raise PreconditionError(f"depth must be nonnegative, got {depth}")
        if depth > len(s):
            raise PreconditionError(f"depth {depth} needs {depth} parameters, got {len(s)}")
        if any(value < 3 for value in s):
            raise PreconditionError(f"every s_j must be at least 3, got {list(s)}")
        if sum(Fraction(1, value) for value in s) >= 1:
            raise PreconditionError(f"sum of 1/s_j must stay below 1 for s = {list(s)}")
        self.s = s
        self.depth = depth
        self.cache = WordCache(cache_dir) if cache_dir else None

        words = self._load()
        if words is None:
            words = self._build()
            self._store(words)
        self.W: Tuple[str, ...] = tuple(words["W"])
        self.zero: Tuple[str, ...] = tuple(words["zero"])
        self.one: Tuple[str, ...] = tuple(words["one"])
        self.lengths: Tuple[int, ...] = tuple(len(word) for word in self.W)
        self.m_zero: Tuple[Fraction, ...] = tuple(frequency(word) for word in self.zero)
        self.m_one: Tuple[Fraction, ...] = tuple(frequency(word) for word in self.one)

    @property
    def _cache_params(self) -> Dict[str, Any]:
        return {"s": list(self.s[:self.depth]), "depth": self.depth}

    def _load(self) -> Optional[Dict[str, List[str]]]:
        if self.cache is None:
            return None
        words = self.cache.get("oxtoby", self._cache_params)
        if words is not None:
            logger.debug(f"oxtoby words loaded from cache for {self._cache_params}")
        return words

    def _store(self, words: Dict[str, List[str]]) -> None:
        if self.cache is not None:
            self.cache.set("oxtoby", self._cache_params, words)

    def _build(self) -> Dict[str, List[str]]:
        W, zero, one = [HOLE], ["0"], ["1"]
        with LogTimer("oxtoby_build", depth=self.depth):
            for n in range(1, self.depth + 1):
                s_n = self.s[n - 1]
                if n % 2 == 1:
                    W.append(zero[-1] + W[-1] * (s_n - 1))
                    one.append(zero[-1] + one[-1] * (s_n - 1))
                    zero.append(zero[-1] * s_n)
                else:
                    W.append(one[-1] + W[-1] * (s_n - 1))
                    zero.append(one[-1] + zero[-1] * (s_n - 1))
                    one.append(one[-1] * s_n)
                log_stage(n, "oxtoby", "built", s_n=s_n, l_n=len(W[-1]))
        return {"W": W, "zero": zero, "one": one}

    def _check_level(self, n: int) -> None:
        if not 0 <= n <= self.depth:
            raise PreconditionError(f"level {n} outside 0..{self.depth}")

    def product(self, n: int) -> Fraction:
        """prod over j <= n of (1 - 1/s_j)"""
        self._check_level(n)
        return math.prod((1 - Fraction(1, value) for value in self.s[:n]), start=Fraction(1))

    def product_identity_holds(self, n: int) -> bool:
        return self.m_one[n] - self.m_zero[n] == self.product(n)

    def fill_holds(self, n: int) -> bool:
        """Filling the holes of W_n with 0 (resp. 1) gives Z_n (resp. O_n)"""
        self._check_level(n)
        return (self.W[n].replace(HOLE, "0") == self.zero[n]
                and self.W[n].replace(HOLE, "1") == self.one[n])

    @property
    def a_interval(self) -> Tuple[Fraction, Fraction]:
        """[m(Z_depth), m(O_depth)] contains the lower ergodic frequency a"""
        return self.m_zero[self.depth], self.m_one[self.depth]

    @property
    def a_estimate(self) -> Fraction:
        return self.m_zero[self.depth]

    def y_word(self, n: Optional[int] = None) -> str:
        """Prefix of y: Z_n for even n, O_n for odd n"""
        n = self.depth if n is None else n
        self._check_level(n)
        return self.zero[n] if n % 2 == 0 else self.one[n]

    def y_point(self) -> RecipePoint:
        word = tuple(int(symbol) for symbol in self.y_word())
        return RecipePoint("oxtoby-y", {"s": list(self.s), "depth": self.depth}, lambda n: word)

    def language(self, length: int, level: int) -> "LanguageReport":
        return oxtoby_language(self, length, level)

    def fact_suffix_check(self, js: Sequence[int]) -> bool:
        """Z_0^j_0 Z_1^j_1 ... Z_k^j_k is a suffix of Z_(k+1) for 0 <= j_i <= s_(i+1) - 2"""
        k = len(js) - 1
        if k < 0:
            raise PreconditionError("need at least one exponent")
        self._check_level(k + 1)
        for i, j in enumerate(js):
            if not 0 <= j <= self.s[i] - 2:
                raise PreconditionError(f"exponent j_{i}={j} outside 0..{self.s[i] - 2}")
        word = "".join(concat_power(self.zero[i], j) for i, j in enumerate(js))
        return is_suffix(word, self.zero[k + 1])

    def fact_tuples(self, k: int) -> Iterator[Tuple[int, ...]]:
        """All admissible (j_0, ..., j_k)"""
        return itertools.product(*(range(self.s[i] - 1) for i in range(k + 1)))

    def stats_frame(self) -> pd.DataFrame:
        rows = []
        for n in range(self.depth + 1):
            rows.append({
                "n": n,
                "s_n": self.s[n - 1] if n else "",
                "l_n": self.lengths[n],
                **rational_columns("m_zero", self.m_zero[n]),
                **rational_columns("m_one", self.m_one[n]),
                **rational_columns("product", self.product(n)),
                "identity": self.product_identity_holds(n),
                "fill": self.fill_holds(n),
            })
        return pd.DataFrame(rows, columns=STATS_COLUMNS)

    def to_json(self, max_word_length: Optional[int] = None) -> Dict[str, Any]:
        """Machine state; words longer than max_word_length are omitted"""
        def keep(word: str) -> Optional[str]:
            return word if max_word_length is None or len(word) <= max_word_length else None

        low, high = self.a_interval
        return {
            "s": list(self.s),
            "depth": self.depth,
            "lengths": list(self.lengths),
            "words": {
                "W": [keep(word) for word in self.W],
                "zero": [keep(word) for word in self.zero],
                "one": [keep(word) for word in self.one],
            },
            "m_zero": [str(value) for value in self.m_zero],
            "m_one": [str(value) for value in self.m_one],
            "a_interval": [str(low), str(high)],
        }


def oxtoby_build(s: Sequence[int], depth: int, cache_dir: Optional[Path] = None) -> OxtobyMachine:
    return OxtobyMachine(s, depth, cache_dir if cache_dir is not None else config.cache_dir)


@dataclass(frozen=True)
class LanguageReport:
    length: int
    level: int
    words: FrozenSet[str]
    bound: int

    @property
    def count(self) -> int:
        return len(self.words)

    @property
    def within_bound(self) -> bool:
        return self.count <= self.bound


def oxtoby_language(machine: OxtobyMachine, length: int, level: int) -> LanguageReport:
    """Length-`length` words of X, read off Z_n Z_n, Z_n O_n, O_n Z_n and O_n O_n

    The bound 4 l_n + 4 applies when length = l_n.
    """
    machine._check_level(level)
    l_n = machine.lengths[level]
    if not 1 <= length <= l_n:
        raise PreconditionError(f"length {length} outside 1..{l_n}")
    blocks = (machine.zero[level], machine.one[level])
    words = set()
    for left, right in itertools.product(blocks, repeat=2):
        words.update(subword_set(left + right, length))
    return LanguageReport(length=length, level=level, words=frozenset(words), bound=4 * l_n + 4)


def f_beta_exponents(machine: OxtobyMachine, beta: Sequence[int]) -> Tuple[int, ...]:
    """j_i = min(beta(i) + 1, s_(2i+2) - 2)"""
    if not beta:
        raise PreconditionError("beta must be nonempty")
    if any(b < 0 for b in beta):
        raise PreconditionError("beta takes values in the natural numbers")
    if len(machine.s) < 2 * len(beta):
        raise PreconditionError(
            f"beta of length {len(beta)} needs {2 * len(beta)} parameters, got {len(machine.s)}")
    if machine.depth < 2 * len(beta) - 1:
        raise PreconditionError(
            f"beta of length {len(beta)} needs depth {2 * len(beta) - 1}, got {machine.depth}")
    return tuple(min(b + 1, machine.s[2 * i + 1] - 2) for i, b in enumerate(beta))


def f_beta_word(machine: OxtobyMachine, beta: Sequence[int]) -> str:
    """Z_1^j_0 Z_3^j_1 ... Z_(2i+1)^j_i"""
    js = f_beta_exponents(machine, beta)
    return "".join(machine.zero[2 * i + 1] * j for i, j in enumerate(js))


@dataclass(frozen=True)
class WindowStat:
    """m(w) for w ending one O_(2i+1) past the block Z_(2i+1)^j_i"""

    i: int
    length: int
    k: int
    frequency: Fraction
    bound: Fraction
    a: Fraction

    @property
    def holds(self) -> bool:
        return self.frequency >= self.bound

    @property
    def excess(self) -> Fraction:
        """How far m(w) sits above m(Z_depth)"""
        return self.frequency - self.a


@dataclass(frozen=True)
class StageSweep:
    """Largest m(w) over prefixes ending inside the block of index i"""

    i: int
    start: int
    stop: int
    j_prev: int
    largest: Fraction
    argmax: int
    bound: Fraction
    a: Fraction

    @property
    def holds(self) -> bool:
        return self.largest <= self.bound

    @property
    def excess(self) -> Fraction:
        return self.largest - self.a


@dataclass(frozen=True)
class OxtobyReduction:
    machine: OxtobyMachine
    beta: Tuple[int, ...]
    js: Tuple[int, ...]
    point: Point
    length: int
    running: RunningAverage
    windows: Tuple[WindowStat, ...]
    sweeps: Tuple[StageSweep, ...]

    def frequency_at(self, length: int) -> Fraction:
        return self.running.at(length)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for window in self.windows:
            rows.append({"kind": "window", "i": window.i, "length": window.length, "j": window.k,
                         **rational_columns("m", window.frequency),
                         **rational_columns("bound", window.bound),
                         **rational_columns("excess", window.excess), "holds": window.holds})
        for sweep in self.sweeps:
            rows.append({"kind": "sweep", "i": sweep.i, "length": sweep.argmax, "j": sweep.j_prev,
                         **rational_columns("m", sweep.largest),
                         **rational_columns("bound", sweep.bound),
                         **rational_columns("excess", sweep.excess), "holds": sweep.holds})
        return pd.DataFrame(rows, columns=REDUCE_COLUMNS)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def f_beta_point(machine: OxtobyMachine, beta: Sequence[int]) -> RecipePoint:
    word = tuple(int(symbol) for symbol in f_beta_word(machine, beta))
    params = {"s": list(machine.s), "depth": machine.depth, "beta": list(beta)}
    return RecipePoint("f-beta", params, lambda n: word)


def oxtoby_reduce(machine: OxtobyMachine, beta: Sequence[int],
                  horizon: Optional[int] = None) -> OxtobyReduction:
    """Prefix of f(beta) with its running frequencies and both case analyses

    Windows bound m(w) from below by (k m(Z) + m(O)) / (k + 1 + 1/s_(2i+1)) for
    each block followed by another; sweeps bound every prefix in block i >= 1
    from above by 3/j_(i-1) + m(Z_depth).
    """
    beta = tuple(int(b) for b in beta)
    js = f_beta_exponents(machine, beta)
    word = f_beta_word(machine, beta)
    length = len(word) if horizon is None else horizon
    if length > len(word):
        raise HorizonExceeded(f"horizon {length} exceeds the built prefix of length {len(word)}",
                              {"built": len(word)})
    if length < 1:
        raise PreconditionError(f"horizon must be positive, got {length}")

    ones = np.frombuffer(word[:length].encode("ascii"), dtype=np.uint8) == ord("1")
    running = RunningAverage(ones.astype(np.int64), 1)

    ends = list(itertools.accumulate(j * machine.lengths[2 * i + 1] for i, j in enumerate(js)))
    starts = [0] + ends[:-1]

    a = machine.a_estimate
    windows = []
    for i, k in enumerate(js[:-1]):
        n = 2 * i + 1
        window_length = ends[i] + machine.lengths[n]
        if window_length > length:
            break
        bound = (k * machine.m_zero[n] + machine.m_one[n]) / (k + 1 + Fraction(1, machine.s[n - 1]))
        windows.append(WindowStat(i=i, length=window_length, k=k,
                                  frequency=running.at(window_length), bound=bound, a=a))

    sweeps = []
    for i in range(1, len(js)):
        lo, hi = max(1, starts[i]), min(ends[i], length)
        if lo > hi:
            break
        _, k_max = running.extremes(lo, hi)
        sweeps.append(StageSweep(i=i, start=lo, stop=hi, j_prev=js[i - 1],
                                 largest=running.at(k_max), argmax=k_max,
                                 bound=Fraction(3, js[i - 1]) + a, a=a))

    for window in windows:
        log_stage(window.i, "oxtoby-window", "ok" if window.holds else "FAIL",
                  m=window.frequency, bound=window.bound, excess=window.excess)
    for sweep in sweeps:
        log_stage(sweep.i, "oxtoby-sweep", "ok" if sweep.holds else "FAIL",
                  m=sweep.largest, bound=sweep.bound)

    return OxtobyReduction(machine=machine, beta=beta, js=js, point=f_beta_point(machine, beta),
                           length=length, running=running, windows=tuple(windows),
                           sweeps=tuple(sweeps))


@register_recipe("oxtoby-y")
def _oxtoby_y_recipe(params: Dict[str, Any]) -> Point:
    return oxtoby_build(params["s"], int(params["depth"])).y_point()


@register_recipe("f-beta")
def _f_beta_recipe(params: Dict[str, Any]) -> Point:
    machine = oxtoby_build(params["s"], int(params["depth"]))
    return f_beta_point(machine, params["beta"])
