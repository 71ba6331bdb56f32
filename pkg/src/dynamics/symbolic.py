"""
Words, points of the shift space, the shift map and the sequence metric.

Words are tuples of nonnegative integers. Points are infinite sequences with a
finite description: eventually periodic points, recipe points backed by a
deterministic generator with a memoised prefix, and lazy shifted views. Every
inspection of a point goes through an explicit horizon.
"""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, Iterable, Optional, Sequence, Set, Tuple

from src.utils.errors import AlphabetError, HorizonExceeded, InputError, PreconditionError

Word = Tuple[int, ...]

# Placeholder letter of the Oxtoby recurrences; never part of a Point.
PLACEHOLDER = -1

# Shifting an eventually periodic point copies its remaining preperiod only up
# to this many symbols; longer tails become lazy views.
SHIFT_COPY_LIMIT = 4096


def as_word(symbols: Iterable[int]) -> Word:
    """Validate and freeze a symbol sequence"""
    word = tuple(int(symbol) for symbol in symbols)
    for symbol in word:
        if symbol < 0:
            raise AlphabetError(f"negative symbol {symbol} in word")
    return word


def word_from_string(text: str) -> Word:
    """Parse "0110" style words, "x" standing for the placeholder, or "2,3,5" lists"""
    text = text.strip()
    if "," in text:
        return tuple(int(part) for part in text.split(",") if part.strip())
    symbols = []
    for char in text:
        if char == "x":
            symbols.append(PLACEHOLDER)
        elif char.isdigit():
            symbols.append(int(char))
        elif not char.isspace():
            raise InputError(f"unexpected character {char!r} in word {text!r}")
    return tuple(symbols)


def word_to_string(word: Sequence[int]) -> str:
    if all(symbol == PLACEHOLDER or 0 <= symbol <= 9 for symbol in word):
        return "".join("x" if symbol == PLACEHOLDER else str(symbol) for symbol in word)
    return ",".join(str(symbol) for symbol in word)


def concat_power(u, k: int):
    """u repeated k times; works for tuples and strings alike"""
    if k < 0:
        raise PreconditionError(f"negative power {k}")
    return u * k


def subword_set(w, length: int) -> Set:
    """All distinct factors of w of the given length"""
    if length < 1:
        raise PreconditionError(f"factor length must be positive, got {length}")
    if length > len(w):
        return set()
    return {w[i:i + length] for i in range(len(w) - length + 1)}


def is_suffix(u, v) -> bool:
    return len(u) <= len(v) and v[len(v) - len(u):] == u


def first_disagreement(a: Sequence[int], b: Sequence[int]) -> int:
    """Index of the first differing symbol, or min(len(a), len(b)) if none"""
    for index, (left, right) in enumerate(zip(a, b)):
        if left != right:
            return index
    return min(len(a), len(b))


def _primitive_root(word: Word) -> Word:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


def _rotate(word: Word, offset: int) -> Word:
    if not word:
        return word
    offset %= len(word)
    return word[offset:] + word[:offset]


class Point(ABC):
    """An infinite symbol sequence with a finite description"""

    @abstractmethod
    def window(self, start: int, length: int) -> Word:
        """Symbols at positions start, ..., start+length-1"""

    @abstractmethod
    def shift(self, k: int) -> "Point":
        """The point with its first k symbols dropped"""

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        """JSON-ready description"""

    def prefix(self, n: int) -> Word:
        if n < 0:
            raise PreconditionError(f"negative prefix length {n}")
        return self.window(0, n)

    def symbol(self, i: int) -> int:
        return self.window(i, 1)[0]

    def __repr__(self) -> str:
        shown = word_to_string(self.prefix(12))
        return f"{type(self).__name__}({shown}...)"


class EventuallyPeriodicPoint(Point):
    """pre followed by per repeated forever, kept in canonical form"""

    __slots__ = ("pre", "per")

    def __init__(self, pre: Sequence[int], per: Sequence[int]):
        pre = as_word(pre)
        per = as_word(per)
        if not per:
            raise PreconditionError("period of an eventually periodic point must be nonempty")
        per = _primitive_root(per)
        p = len(per)
        cut = len(pre)
        absorbed = 0
        while cut > 0 and pre[cut - 1] == per[(p - 1 - absorbed) % p]:
            cut -= 1
            absorbed += 1
        self.pre: Word = pre[:cut]
        self.per: Word = _rotate(per, -absorbed)

    @property
    def is_periodic(self) -> bool:
        return not self.pre

    @property
    def period(self) -> int:
        return len(self.per)

    def window(self, start: int, length: int) -> Word:
        if start < 0 or length < 0:
            raise PreconditionError(f"invalid window ({start}, {length})")
        pre, per = self.pre, self.per
        if start + length <= len(pre):
            return pre[start:start + length]
        head = pre[start:] if start < len(pre) else ()
        remaining = length - len(head)
        rotated = _rotate(per, max(0, start - len(pre)))
        tail = (rotated * (remaining // len(per) + 1))[:remaining]
        return head + tail

    def shift(self, k: int) -> Point:
        if k < 0:
            raise PreconditionError(f"negative shift {k}")
        if k == 0:
            return self
        if k >= len(self.pre):
            return EventuallyPeriodicPoint((), _rotate(self.per, k - len(self.pre)))
        if len(self.pre) - k <= SHIFT_COPY_LIMIT:
            return EventuallyPeriodicPoint(self.pre[k:], self.per)
        return ShiftedPoint(self, k)

    def to_json(self) -> Dict[str, Any]:
        return {"kind": "ep", "pre": list(self.pre), "per": list(self.per)}

    def __eq__(self, other) -> bool:
        return (isinstance(other, EventuallyPeriodicPoint)
                and self.pre == other.pre and self.per == other.per)

    def __hash__(self) -> int:
        return hash((self.pre, self.per))


def periodic(per: Sequence[int]) -> EventuallyPeriodicPoint:
    return EventuallyPeriodicPoint((), per)


def constant(symbol: int) -> EventuallyPeriodicPoint:
    return EventuallyPeriodicPoint((), (symbol,))


class RecipePoint(Point):
    """Point produced by a named deterministic generator with a memoised prefix

    The generator maps n to a word of length at least n; successive calls must
    agree on common prefixes.
    """

    def __init__(self, name: str, params: Dict[str, Any], generator: Callable[[int], Sequence[int]]):
        self.name = name
        self.params = params
        self._generator = generator
        self._cache: Word = ()
        self._lock = threading.Lock()

    def _ensure(self, n: int) -> Word:
        with self._lock:
            if len(self._cache) < n:
                target = max(n, 2 * len(self._cache), 64)
                produced = tuple(self._generator(target))
                if len(produced) < n:
                    raise HorizonExceeded(
                        f"recipe {self.name!r} yields only {len(produced)} symbols, {n} requested",
                        {"recipe": self.name, "requested": n},
                    )
                self._cache = produced
            return self._cache

    def window(self, start: int, length: int) -> Word:
        if start < 0 or length < 0:
            raise PreconditionError(f"invalid window ({start}, {length})")
        return self._ensure(start + length)[start:start + length]

    def shift(self, k: int) -> Point:
        if k < 0:
            raise PreconditionError(f"negative shift {k}")
        return self if k == 0 else ShiftedPoint(self, k)

    def to_json(self) -> Dict[str, Any]:
        return {"kind": "recipe", "name": self.name, "params": self.params}


class ShiftedPoint(Point):
    """Lazy view of base shifted by offset"""

    def __init__(self, base: Point, offset: int):
        self.base = base
        self.offset = offset

    def window(self, start: int, length: int) -> Word:
        return self.base.window(self.offset + start, length)

    def shift(self, k: int) -> Point:
        if k < 0:
            raise PreconditionError(f"negative shift {k}")
        if k == 0:
            return self
        return self.base.shift(self.offset + k)

    def to_json(self) -> Dict[str, Any]:
        return {"kind": "recipe", "name": "shift",
                "params": {"base": self.base.to_json(), "k": self.offset}}


def shift(x: Point, k: int) -> Point:
    return x.shift(k)


def prepend(word: Sequence[int], x: Point) -> Point:
    """The point word followed by x"""
    word = as_word(word)
    if not word:
        return x
    if isinstance(x, EventuallyPeriodicPoint):
        return EventuallyPeriodicPoint(word + x.pre, x.per)

    def generate(n: int) -> Word:
        return word + x.prefix(max(0, n - len(word)))

    return RecipePoint("concat", {"head": list(word), "tail": x.to_json()}, generate)


def rho(x: Point, y: Point, horizon: int) -> Fraction:
    """2^-k for the first disagreement index k, or 0 if x and y agree up to horizon"""
    if horizon < 1:
        raise PreconditionError(f"horizon must be positive, got {horizon}")
    return word_distance(x.prefix(horizon), y.prefix(horizon))


def word_distance(a: Sequence[int], b: Sequence[int]) -> Fraction:
    """Distance of two points known through equally long prefixes"""
    k = first_disagreement(a, b)
    if k >= min(len(a), len(b)):
        return Fraction(0)
    return Fraction(1, 2 ** k)


def max_bad_depth(eps: Fraction) -> int:
    """Largest d with 2^-d >= eps, or -1 when eps > 1

    A disagreement at index d keeps two points eps-close iff d > max_bad_depth(eps).
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if eps > 1:
        return -1
    d = 0
    while Fraction(1, 2 ** (d + 1)) >= eps:
        d += 1
    return d


@dataclass(frozen=True)
class ShiftSpace:
    """A full shift over an alphabet, optionally cut down by a language predicate"""

    alphabet: Optional[FrozenSet[int]] = None
    language: Optional[Callable[[Word], bool]] = None
    name: str = "full"

    @classmethod
    def full(cls, alphabet: Optional[Iterable[int]] = None) -> "ShiftSpace":
        return cls(alphabet=frozenset(alphabet) if alphabet is not None else None)

    @property
    def is_full(self) -> bool:
        return self.language is None

    def contains_word(self, word: Sequence[int]) -> bool:
        if self.alphabet is not None and any(symbol not in self.alphabet for symbol in word):
            return False
        if any(symbol < 0 for symbol in word):
            return False
        return self.language is None or self.language(tuple(word))

    def contains_point(self, x: Point, horizon: int) -> bool:
        return self.contains_word(x.prefix(horizon))

    def check_word(self, word: Sequence[int]) -> None:
        if not self.contains_word(word):
            raise AlphabetError(
                f"word outside the shift space {self.name!r}",
                {"alphabet": sorted(self.alphabet) if self.alphabet is not None else "all"},
            )


# Recipe registry: name -> factory(params) -> Point
_RECIPES: Dict[str, Callable[[Dict[str, Any]], Point]] = {}


def register_recipe(name: str):
    def decorator(factory: Callable[[Dict[str, Any]], Point]):
        _RECIPES[name] = factory
        return factory
    return decorator


def recipe_names() -> Tuple[str, ...]:
    return tuple(sorted(_RECIPES))


def point_from_json(document: Dict[str, Any]) -> Point:
    if not isinstance(document, dict):
        raise InputError(f"point must be a JSON object, got {type(document).__name__}")
    kind = document.get("kind")
    if kind == "ep":
        try:
            return EventuallyPeriodicPoint(document.get("pre", []), document["per"])
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, PreconditionError):
                raise
            raise InputError(f"malformed eventually periodic point: {document}") from e
    if kind == "recipe":
        name = document.get("name")
        factory = _RECIPES.get(name)
        if factory is None:
            raise InputError(f"unknown recipe {name!r}; known: {', '.join(recipe_names())}")
        return factory(document.get("params") or {})
    raise InputError(f"unknown point kind {kind!r}")


def point_to_json(x: Point) -> Dict[str, Any]:
    return x.to_json()


@register_recipe("shift")
def _shift_recipe(params: Dict[str, Any]) -> Point:
    return point_from_json(params["base"]).shift(int(params.get("k", 0)))


@register_recipe("concat")
def _concat_recipe(params: Dict[str, Any]) -> Point:
    return prepend(params.get("head", []), point_from_json(params["tail"]))


def block_alternator(base: int = 4) -> RecipePoint:
    """0^(base^0) 1^(base^0) 0^(base^1) 1^(base^1) ..."""
    if base < 2:
        raise PreconditionError(f"block base must be at least 2, got {base}")

    def generate(n: int) -> Word:
        symbols = []
        size = 1
        while len(symbols) < n:
            symbols.extend([0] * size)
            symbols.extend([1] * size)
            size *= base
        return tuple(symbols)

    return RecipePoint("blocks", {"base": base}, generate)


@register_recipe("blocks")
def _blocks_recipe(params: Dict[str, Any]) -> Point:
    return block_alternator(int(params.get("base", 4)))
