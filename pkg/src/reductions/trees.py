"""
Coding finite trees on the naturals into points of the full shift over the naturals.

Node t^(i) of a fixed length-monotone enumeration owns the even stage 2i:
when t^(i) is in the tree the stage writes copies of the periodic word y^t,
whose orbit measure approximates mu_t; otherwise it writes a constant block
of the i-th integer with at least two distinct prime factors. Odd stages are
blocks of zeros.
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from sympy import factorint, prime

from src.dynamics.measure import DiscreteMeasure, emp_measures_at, prohorov
from src.dynamics.symbolic import EventuallyPeriodicPoint, Point, Word, constant, periodic, register_recipe
from src.utils.config import config
from src.utils.errors import BudgetExceeded, InputError, PreconditionError
from src.utils.formatting import frame_to_csv, rational_columns
from src.utils.logger import LogTimer, log_stage

DEFAULT_BRANCHING = 2
TREE_SERIES_COLUMNS = [
    "stage", "l_n", "node", "in_tree", "target",
    "distance_num", "distance_den", "distance_decimal",
]

Node = Tuple[int, ...]


def enumerate_nodes(count: int, branching: int = DEFAULT_BRANCHING) -> List[Node]:
    """t^(1), ..., t^(count): sequences with entries below branching, by length then lexicographically"""
    if branching < 1:
        raise PreconditionError(f"branching must be positive, got {branching}")
    nodes: List[Node] = []
    length = 0
    while len(nodes) < count:
        for node in itertools.product(range(branching), repeat=length):
            nodes.append(node)
            if len(nodes) == count:
                break
        length += 1
    return nodes


def node_at(index: int, branching: int = DEFAULT_BRANCHING) -> Node:
    """t^(index), 1-based"""
    if index < 1:
        raise PreconditionError(f"enumeration starts at 1, got {index}")
    return enumerate_nodes(index, branching)[-1]


@dataclass(frozen=True)
class TreeOnOmega:
    """Finite prefix-closed set of sequences

    extendable marks nodes whose subtree was cut off at the explored depth;
    a tree is wellfounded at desk scale when no node is so marked.
    """

    nodes: FrozenSet[Node]
    extendable: FrozenSet[Node] = frozenset()
    branching: int = DEFAULT_BRANCHING

    def __post_init__(self):
        for node in self.nodes:
            if any(entry < 0 for entry in node):
                raise PreconditionError(f"node {list(node)} has a negative entry")
            if any(entry >= self.branching for entry in node):
                raise PreconditionError(
                    f"node {list(node)} has an entry outside the enumerated range 0..{self.branching - 1}")
            if node and node[:-1] not in self.nodes:
                raise PreconditionError(f"tree is not prefix-closed at {list(node)}")
        if not self.extendable <= self.nodes:
            raise PreconditionError("extendable nodes must belong to the tree")

    @classmethod
    def of(cls, nodes: Iterable[Sequence[int]], extendable: Iterable[Sequence[int]] = (),
           branching: int = DEFAULT_BRANCHING) -> "TreeOnOmega":
        return cls(frozenset(tuple(node) for node in nodes),
                   frozenset(tuple(node) for node in extendable), branching)

    @classmethod
    def empty(cls, branching: int = DEFAULT_BRANCHING) -> "TreeOnOmega":
        return cls(frozenset(), frozenset(), branching)

    @classmethod
    def from_json(cls, document: Any) -> "TreeOnOmega":
        """Either a list of integer lists or {"nodes": ..., "extendable": ..., "branching": ...}"""
        try:
            if isinstance(document, list):
                return cls.of(document)
            return cls.of(document.get("nodes", []), document.get("extendable", []),
                          int(document.get("branching", DEFAULT_BRANCHING)))
        except (AttributeError, TypeError, ValueError) as e:
            if isinstance(e, PreconditionError):
                raise
            raise InputError(f"malformed tree: {document!r}") from e

    def to_json(self) -> Dict[str, Any]:
        return {
            "nodes": [list(node) for node in sorted(self.nodes, key=lambda t: (len(t), t))],
            "extendable": [list(node) for node in sorted(self.extendable, key=lambda t: (len(t), t))],
            "branching": self.branching,
        }

    def __contains__(self, node) -> bool:
        return tuple(node) in self.nodes

    @property
    def depth(self) -> int:
        return max((len(node) for node in self.nodes), default=-1)

    @property
    def is_wellfounded(self) -> bool:
        return not self.extendable

    def agrees_with(self, other: "TreeOnOmega", count: int) -> bool:
        """Same membership for t^(1), ..., t^(count)"""
        return all((node in self) == (node in other) for node in enumerate_nodes(count, self.branching))


def branch_tree(branch: Sequence[int], depth: int, branching: int = DEFAULT_BRANCHING) -> TreeOnOmega:
    """All prefixes of branch up to depth, the deepest one marked extendable"""
    if depth > len(branch):
        raise PreconditionError(f"branch of length {len(branch)} is shorter than depth {depth}")
    nodes = [tuple(branch[:k]) for k in range(depth + 1)]
    return TreeOnOmega.of(nodes, [nodes[-1]], branching)


def pairing(a: int, i: int) -> int:
    """Cantor pairing (a + i)(a + i + 1)/2 + i"""
    return (a + i) * (a + i + 1) // 2 + i


def nth_prime(n: int) -> int:
    """p(n), with p(0) = 2"""
    return int(prime(n + 1))


@lru_cache(maxsize=None)
def _composite_sequence(count: int) -> Tuple[int, ...]:
    values: List[int] = []
    candidate = 2
    while len(values) < count:
        if len(factorint(candidate)) >= 2:
            values.append(candidate)
        candidate += 1
    return tuple(values)


def multi_prime(m: int) -> int:
    """q(m): the m-th integer divisible by two different primes, q(0) = 6"""
    if m < 0:
        raise PreconditionError(f"index must be nonnegative, got {m}")
    return _composite_sequence(m + 1)[m]


def node_word(s: Sequence[int]) -> Word:
    """Period of y^s: p(pair(s(i), i)) repeated 2^(2l-i) times for i < l, then 1 repeated 2^(l+1) times"""
    l = len(s)
    word: List[int] = []
    for i, entry in enumerate(s):
        word.extend([nth_prime(pairing(entry, i))] * 2 ** (2 * l - i))
    word.extend([1] * 2 ** (l + 1))
    return tuple(word)


def node_point(s: Sequence[int]) -> EventuallyPeriodicPoint:
    return periodic(node_word(s))


def node_measure(s: Sequence[int], horizon: Optional[int] = None) -> DiscreteMeasure:
    """mu_s = 2^-l delta of 1-bar plus the sum of 2^-(i+1) delta of p(pair(s(i), i))-bar"""
    horizon = horizon or config.horizon
    components = [(Fraction(1, 2 ** (i + 1)), nth_prime(pairing(entry, i))) for i, entry in enumerate(s)]
    components.append((Fraction(1, 2 ** len(s)), 1))
    return DiscreteMeasure.from_points([constant(symbol) for _, symbol in components],
                                       [weight for weight, _ in components], horizon)


@dataclass(frozen=True)
class TreeSchedule:
    a: Tuple[int, ...]
    b: Tuple[int, ...]
    lengths: Tuple[int, ...]  # l_0 = 0, l_1, ..., l_stages

    def block(self, n: int) -> int:
        return self.a[n - 1] * self.b[n - 1]


def _a(n: int, branching: int) -> int:
    if n == 1:
        return 2
    if n % 2 == 0:
        return len(node_word(node_at(n // 2, branching)))
    return 1


def tree_schedule(stages: int, branching: int = DEFAULT_BRANCHING,
                  length_cap: Optional[int] = None) -> TreeSchedule:
    """Minimal b_n > b_(n-1) with a_n b_n > max(2^n a_(n+1), 2^n l_(n-1))"""
    length_cap = length_cap or config.length_cap
    if stages < 1:
        raise PreconditionError(f"stages must be positive, got {stages}")
    a_values, b_values, lengths = [], [], [0]
    b_prev = 0
    for n in range(1, stages + 1):
        a_n, a_next = _a(n, branching), _a(n + 1, branching)
        floor = max(2 ** n * a_next, 2 ** n * lengths[-1])
        b_n = max(b_prev + 1, floor // a_n + 1)
        length = lengths[-1] + a_n * b_n
        if length > length_cap:
            raise BudgetExceeded(f"stage {n} needs a prefix of length {length} > cap {length_cap}",
                                 {"stage": n, "l_n": length})
        a_values.append(a_n)
        b_values.append(b_n)
        lengths.append(length)
        b_prev = b_n
    return TreeSchedule(tuple(a_values), tuple(b_values), tuple(lengths))


@dataclass(frozen=True)
class TreeSeriesRow:
    stage: int
    length: int
    node: Optional[Node]
    in_tree: bool
    target: str
    distance: Fraction


@dataclass(frozen=True)
class TreePoint:
    tree: TreeOnOmega
    schedule: TreeSchedule
    point: EventuallyPeriodicPoint
    series: Tuple[TreeSeriesRow, ...] = field(default=())

    @property
    def prefix(self) -> Word:
        return self.point.prefix(self.schedule.lengths[-1])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for row in self.series:
            rows.append({
                "stage": row.stage,
                "l_n": row.length,
                "node": "" if row.node is None else ".".join(map(str, row.node)) or "()",
                "in_tree": row.in_tree,
                "target": row.target,
                **rational_columns("distance", row.distance),
            })
        return pd.DataFrame(rows, columns=TREE_SERIES_COLUMNS)

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def tree_point(tree: TreeOnOmega, stages: int, horizon: Optional[int] = None,
               length_cap: Optional[int] = None, with_series: bool = True) -> TreePoint:
    """Prefix x_[0, l_stages) coding tree membership of t^(1), t^(2), ..."""
    horizon = horizon or config.horizon
    schedule = tree_schedule(stages, tree.branching, length_cap)
    symbols: List[int] = []
    rows_meta = []
    with LogTimer("tree_point", stages=stages):
        for n in range(1, stages + 1):
            size = schedule.block(n)
            if n % 2 == 1:
                symbols.extend([0] * size)
                rows_meta.append((n, None, False))
                log_stage(n, "tree", "zeros", block=size)
                continue
            node = node_at(n // 2, tree.branching)
            if node in tree:
                word = node_word(node)
                symbols.extend(word * schedule.b[n - 1])
            else:
                symbols.extend([multi_prime(n // 2)] * size)
            rows_meta.append((n, node, node in tree))
            log_stage(n, "tree", "coded", node=list(node), in_tree=node in tree, block=size)

        point = EventuallyPeriodicPoint(symbols, (0,))
        series: Tuple[TreeSeriesRow, ...] = ()
        if with_series:
            series = _tree_series(point, schedule, rows_meta, horizon)
    return TreePoint(tree=tree, schedule=schedule, point=point, series=series)


def _tree_series(point: Point, schedule: TreeSchedule, rows_meta, horizon: int) -> Tuple[TreeSeriesRow, ...]:
    """Distances to the zero measure at odd stages and to mu_s at matched even stages"""
    emps = emp_measures_at(point, schedule.lengths[1:], horizon)
    zero = DiscreteMeasure.from_points([constant(0)], [1], horizon)
    rows = []
    for (n, node, in_tree), emp in zip(rows_meta, emps):
        if node is None:
            target, measure = "zero", zero
        elif in_tree:
            target, measure = "mu_s", node_measure(node, horizon)
        else:
            target, measure = "q", DiscreteMeasure.from_points([constant(multi_prime(n // 2))], [1], horizon)
        rows.append(TreeSeriesRow(n, schedule.lengths[n], node, in_tree, target, prohorov(emp, measure, horizon)))
    return tuple(rows)


@register_recipe("tree-point")
def _tree_point_recipe(params: Dict[str, Any]) -> Point:
    tree = TreeOnOmega.from_json(params.get("tree", []))
    return tree_point(tree, int(params.get("stages", 4)), with_series=False).point
