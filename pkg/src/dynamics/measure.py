"""
Finitely supported probability measures on the shift space, empirical
measures, and the exact Prohorov distance.

A measure lives at a working horizon: atoms are keyed by the horizon-length
prefix of their support point, and points agreeing up to the horizon are
merged with summed weight. All weights and distances are exact rationals.

The Prohorov distance is computed interval by interval over the sorted
pairwise distances. On each interval the admissible pairs are fixed and the
deficiency 1 - maxflow decides feasibility. Because the metric is an
ultrametric, the admissible pairs at distance <= 2^-k are exactly the pairs
sharing their first k symbols, so the bipartite network is routed through one
node per cylinder of depth k without changing its maximum flow.
"""

from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from src.dynamics.symbolic import (
    EventuallyPeriodicPoint,
    Point,
    Word,
    word_distance,
)
from src.utils.errors import PreconditionError

ORACLE_MAX_SUPPORT = 12

SegmentList = Iterable[Tuple[Point, int]]
OrbitComponents = Tuple[Tuple[Fraction, EventuallyPeriodicPoint], ...]


def _fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure with exact weights

    keys are the distinct horizon-prefixes of the support, sorted; points holds
    one representative Point per key.
    """

    horizon: int
    keys: Tuple[Word, ...]
    weights: Tuple[Fraction, ...]
    points: Tuple[Point, ...] = field(compare=False, repr=False)
    # Set when the measure was built as a mixture of periodic orbit measures
    components: Optional[OrbitComponents] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise PreconditionError(f"horizon must be positive, got {self.horizon}")
        if not (len(self.keys) == len(self.weights) == len(self.points)):
            raise PreconditionError("keys, weights and points must have equal length")
        if any(weight <= 0 for weight in self.weights):
            raise PreconditionError("atom weights must be positive")
        if sum(self.weights, Fraction(0)) != 1:
            raise PreconditionError(f"weights sum to {sum(self.weights)}, not 1")

    @classmethod
    def from_points(cls, points: Sequence[Point], weights: Sequence, horizon: int) -> "DiscreteMeasure":
        if len(points) != len(weights):
            raise PreconditionError(
                f"{len(points)} support points but {len(weights)} weights")
        weights = [_fraction(weight) for weight in weights]
        if any(weight < 0 for weight in weights):
            raise PreconditionError("weights must be nonnegative")
        if sum(weights, Fraction(0)) != 1:
            raise PreconditionError(f"weights sum to {sum(weights)}, not 1")
        atoms: Dict[Word, Fraction] = defaultdict(Fraction)
        representatives: Dict[Word, Point] = {}
        for point, weight in zip(points, weights):
            if weight == 0:
                continue
            key = point.prefix(horizon)
            atoms[key] += weight
            representatives.setdefault(key, point)
        return cls._build(atoms, representatives, horizon)

    @classmethod
    def _build(cls, atoms: Dict[Word, Fraction], representatives: Dict[Word, Point],
               horizon: int) -> "DiscreteMeasure":
        keys = tuple(sorted(key for key, weight in atoms.items() if weight > 0))
        return cls(
            horizon=horizon,
            keys=keys,
            weights=tuple(atoms[key] for key in keys),
            points=tuple(representatives[key] for key in keys),
        )

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def support(self) -> Tuple[Point, ...]:
        return self.points

    def atoms(self) -> Dict[Word, Fraction]:
        return dict(zip(self.keys, self.weights))

    def weight_of(self, key: Sequence[int]) -> Fraction:
        return self.atoms().get(tuple(key), Fraction(0))

    def at_horizon(self, horizon: int) -> "DiscreteMeasure":
        """The same measure viewed at a coarser horizon"""
        if horizon == self.horizon:
            return self
        if horizon > self.horizon:
            raise PreconditionError(
                f"measure built at horizon {self.horizon} cannot be refined to {horizon}")
        atoms: Dict[Word, Fraction] = defaultdict(Fraction)
        representatives: Dict[Word, Point] = {}
        for key, weight, point in zip(self.keys, self.weights, self.points):
            atoms[key[:horizon]] += weight
            representatives.setdefault(key[:horizon], point)
        return replace(DiscreteMeasure._build(atoms, representatives, horizon),
                       components=self.components)

    def cylinder_mass(self, word: Sequence[int]) -> Fraction:
        """Mass of the cylinder of points starting with word"""
        word = tuple(word)
        if len(word) > self.horizon:
            raise PreconditionError(f"cylinder of length {len(word)} exceeds horizon {self.horizon}")
        return sum((w for key, w in zip(self.keys, self.weights) if key[:len(word)] == word),
                   Fraction(0))


def dirac(x: Point, horizon: int) -> DiscreteMeasure:
    return DiscreteMeasure.from_points([x], [Fraction(1)], horizon)


def orbit_measure(z: Point, horizon: int) -> DiscreteMeasure:
    """Uniform measure on the orbit of a periodic point"""
    if not isinstance(z, EventuallyPeriodicPoint) or not z.is_periodic:
        raise PreconditionError("orbit measures need a purely periodic point")
    return replace(emp_measure(z, z.period, horizon), components=((Fraction(1), z),))


def periodic_mixture(components: Sequence[Tuple[Fraction, Point]], horizon: int) -> DiscreteMeasure:
    """Sum of q_i times the orbit measure of the periodic point z_i"""
    if not components:
        raise PreconditionError("a periodic mixture needs at least one component")
    coeffs = [_fraction(q) for q, _ in components]
    return convex_combine(coeffs, [orbit_measure(z, horizon) for _, z in components])


def _counted_measure(counts: Counter, total: int, representatives: Dict[Word, Point],
                     horizon: int) -> DiscreteMeasure:
    atoms = {key: Fraction(count, total) for key, count in counts.items()}
    return DiscreteMeasure._build(atoms, representatives, horizon)


def emp_measure(x: Point, n: int, horizon: int) -> DiscreteMeasure:
    """(1/n) * sum of the Dirac masses at the shifts 0..n-1 of x"""
    return emp_measures_at(x, [n], horizon)[0]


def emp_measures_at(x: Point, checkpoints: Sequence[int], horizon: int) -> List[DiscreteMeasure]:
    """Empirical measures of x at increasing checkpoints, in one pass"""
    if horizon < 1:
        raise PreconditionError(f"horizon must be positive, got {horizon}")
    checkpoints = list(checkpoints)
    if not checkpoints:
        return []
    if checkpoints[0] < 1 or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise PreconditionError("checkpoints must be positive and strictly increasing")

    word = x.prefix(checkpoints[-1] + horizon - 1)
    counts: Counter = Counter()
    first_seen: Dict[Word, int] = {}
    measures = []
    t = 0
    for checkpoint in checkpoints:
        while t < checkpoint:
            key = word[t:t + horizon]
            counts[key] += 1
            if key not in first_seen:
                first_seen[key] = t
            t += 1
        representatives = {key: x.shift(start) for key, start in first_seen.items()}
        measures.append(_counted_measure(counts, checkpoint, representatives, horizon))
    return measures


def emp_of_points(points: Sequence[Point], horizon: int) -> DiscreteMeasure:
    """Uniform measure on a finite list of points (with multiplicity)"""
    if not points:
        raise PreconditionError("empirical measure of an empty list")
    weight = Fraction(1, len(points))
    return DiscreteMeasure.from_points(list(points), [weight] * len(points), horizon)


def emp_of_specification(xi: Union[SegmentList, object], horizon: int) -> DiscreteMeasure:
    """Empirical measure of the concatenated orbit segments of a specification"""
    segments = list(getattr(xi, "segments", xi))
    if not segments:
        raise PreconditionError("specification must be nonempty")
    if any(n < 1 for _, n in segments):
        raise PreconditionError("segment lengths must be positive")
    total = sum(n for _, n in segments)
    return convex_combine(
        [Fraction(n, total) for _, n in segments],
        [emp_measure(x, n, horizon) for x, n in segments],
    )


def convex_combine(coeffs: Sequence, measures: Sequence[DiscreteMeasure]) -> DiscreteMeasure:
    if len(coeffs) != len(measures):
        raise PreconditionError(
            f"{len(coeffs)} coefficients for {len(measures)} measures")
    if not measures:
        raise PreconditionError("convex combination of no measures")
    coeffs = [_fraction(c) for c in coeffs]
    if any(c < 0 for c in coeffs) or sum(coeffs, Fraction(0)) != 1:
        raise PreconditionError("coefficients must be nonnegative and sum to 1")
    horizon = min(measure.horizon for measure in measures)
    atoms: Dict[Word, Fraction] = defaultdict(Fraction)
    representatives: Dict[Word, Point] = {}
    for c, measure in zip(coeffs, measures):
        if c == 0:
            continue
        measure = measure.at_horizon(horizon)
        for key, weight, point in zip(measure.keys, measure.weights, measure.points):
            atoms[key] += c * weight
            representatives.setdefault(key, point)
    combined = DiscreteMeasure._build(atoms, representatives, horizon)
    parts = [(c, measure) for c, measure in zip(coeffs, measures) if c > 0]
    if all(measure.components is not None for _, measure in parts):
        combined = replace(combined, components=tuple(
            (c * q, z) for c, measure in parts for q, z in measure.components))
    return combined


@dataclass(frozen=True)
class Coupling:
    """Sub-coupling witnessing a flow between two supports

    flow[i][j] is the mass moved from mu's atom i to nu's atom j; every positive
    entry joins atoms at distance < eps for eps in the reported interval.
    """

    rows: Tuple[Word, ...]
    cols: Tuple[Word, ...]
    flow: Tuple[Tuple[Fraction, ...], ...]
    admissible_distance: Fraction

    @property
    def total(self) -> Fraction:
        return sum((sum(row, Fraction(0)) for row in self.flow), Fraction(0))


@dataclass(frozen=True)
class ProhorovReport:
    distance: Fraction
    attained: bool
    coupling: Coupling
    flows_computed: int


def distance_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure) -> List[List[Fraction]]:
    return [[word_distance(a, b) for b in nu.keys] for a in mu.keys]


def _depth_for(threshold: Fraction, horizon: int) -> int:
    """Agreement depth k such that distance <= threshold iff the first k symbols agree"""
    if threshold == 0:
        return horizon
    depth = 0
    while Fraction(1, 2 ** depth) > threshold:
        depth += 1
    return depth


def _max_flow(mu: DiscreteMeasure, nu: DiscreteMeasure, depth: int) -> Tuple[Fraction, Coupling]:
    """Maximum flow between mu and nu using only pairs sharing their first depth symbols"""
    graph = nx.DiGraph()
    graph.add_node("source")
    graph.add_node("sink")
    for i, (key, weight) in enumerate(zip(mu.keys, mu.weights)):
        graph.add_edge("source", ("mu", i), capacity=weight)
        graph.add_edge(("mu", i), ("cyl", key[:depth]), capacity=weight)
    for j, (key, weight) in enumerate(zip(nu.keys, nu.weights)):
        graph.add_edge(("cyl", key[:depth]), ("nu", j), capacity=weight)
        graph.add_edge(("nu", j), "sink", capacity=weight)

    residual = edmonds_karp(graph, "source", "sink")
    value = _fraction(residual.graph["flow_value"])

    # Split each cylinder's throughput into pairwise flows.
    inflow: Dict[Word, List[Tuple[int, Fraction]]] = defaultdict(list)
    outflow: Dict[Word, List[Tuple[int, Fraction]]] = defaultdict(list)
    for i, key in enumerate(mu.keys):
        amount = residual[("mu", i)][("cyl", key[:depth])]["flow"]
        if amount > 0:
            inflow[key[:depth]].append((i, _fraction(amount)))
    for j, key in enumerate(nu.keys):
        amount = residual[("cyl", key[:depth])][("nu", j)]["flow"]
        if amount > 0:
            outflow[key[:depth]].append((j, _fraction(amount)))

    flow = [[Fraction(0)] * len(nu) for _ in range(len(mu))]
    for cylinder, sources in inflow.items():
        targets = list(outflow.get(cylinder, []))
        ti = 0
        for i, amount in sources:
            while amount > 0 and ti < len(targets):
                j, capacity = targets[ti]
                moved = min(amount, capacity)
                flow[i][j] += moved
                amount -= moved
                capacity -= moved
                if capacity == 0:
                    ti += 1
                else:
                    targets[ti] = (j, capacity)

    coupling = Coupling(
        rows=mu.keys,
        cols=nu.keys,
        flow=tuple(tuple(row) for row in flow),
        admissible_distance=Fraction(1, 2 ** depth) if depth < mu.horizon else Fraction(0),
    )
    return value, coupling


def _align(mu: DiscreteMeasure, nu: DiscreteMeasure, horizon: Optional[int]) -> Tuple[DiscreteMeasure, DiscreteMeasure, int]:
    if horizon is None:
        horizon = min(mu.horizon, nu.horizon)
    if horizon < 1:
        raise PreconditionError(f"horizon must be positive, got {horizon}")
    return mu.at_horizon(horizon), nu.at_horizon(horizon), horizon


def prohorov_report(mu: DiscreteMeasure, nu: DiscreteMeasure,
                    horizon: Optional[int] = None) -> ProhorovReport:
    """Exact Prohorov distance with attainment flag and witnessing coupling"""
    mu, nu, horizon = _align(mu, nu, horizon)
    thresholds = sorted({Fraction(0)} | {d for row in distance_matrix(mu, nu) for d in row})

    cache: Dict[int, Tuple[Fraction, Coupling]] = {}

    def deficiency(t: int) -> Tuple[Fraction, Coupling]:
        if t not in cache:
            value, coupling = _max_flow(mu, nu, _depth_for(thresholds[t], horizon))
            cache[t] = (1 - value, coupling)
        return cache[t]

    def feasible(t: int) -> bool:
        # interval (thresholds[t], thresholds[t+1]] holds an admissible eps
        if t + 1 == len(thresholds):
            return True
        return deficiency(t)[0] <= thresholds[t + 1]

    # Feasibility is monotone in t: deficiencies fall while thresholds rise.
    lo, hi = 0, len(thresholds) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1

    gap, coupling = deficiency(lo)
    if gap <= thresholds[lo]:
        distance, attained = thresholds[lo], False
    else:
        distance, attained = gap, True
    return ProhorovReport(distance=distance, attained=attained, coupling=coupling,
                          flows_computed=len(cache))


def prohorov(mu: DiscreteMeasure, nu: DiscreteMeasure, horizon: Optional[int] = None) -> Fraction:
    """Exact Prohorov distance D(mu, nu) at the working horizon"""
    return prohorov_report(mu, nu, horizon).distance


def prohorov_bruteforce_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure,
                               horizon: Optional[int] = None) -> Fraction:
    """Prohorov distance straight from the subset definition

    feas(eps) holds iff mu(A) <= nu(A^eps) + eps for every A in supp(mu). Its
    infimum is the least candidate c (a pairwise distance, 0, or a value
    mu(A) - nu(A^{<=d})) at which the right limit of feas holds, i.e.
    mu(A) <= nu({y : rho(A, y) <= c}) + c for all A.
    """
    mu, nu, horizon = _align(mu, nu, horizon)
    m = len(mu)
    if m > ORACLE_MAX_SUPPORT:
        raise PreconditionError(
            f"oracle enumerates subsets of at most {ORACLE_MAX_SUPPORT} atoms, got {m}")
    dist = distance_matrix(mu, nu)
    thresholds = sorted({Fraction(0)} | {d for row in dist for d in row})

    mu_mass = [Fraction(0)] * (1 << m)
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        mu_mass[mask] = mu_mass[mask & (mask - 1)] + mu.weights[low]

    nu_mass_cache: Dict[int, Fraction] = {}

    def nu_mass(mask: int) -> Fraction:
        if mask not in nu_mass_cache:
            nu_mass_cache[mask] = sum(
                (w for j, w in enumerate(nu.weights) if mask >> j & 1), Fraction(0))
        return nu_mass_cache[mask]

    def worst_excess(threshold: Fraction) -> Fraction:
        near = [sum(1 << j for j in range(len(nu)) if dist[i][j] <= threshold) for i in range(m)]
        neighbourhood = [0] * (1 << m)
        excess = Fraction(0)
        for mask in range(1, 1 << m):
            low = (mask & -mask).bit_length() - 1
            neighbourhood[mask] = neighbourhood[mask & (mask - 1)] | near[low]
            excess = max(excess, mu_mass[mask] - nu_mass(neighbourhood[mask]))
        return excess

    excesses = [worst_excess(threshold) for threshold in thresholds]
    candidates = sorted(set(thresholds) | {e for e in excesses if e > 0} | {Fraction(1)})
    for c in candidates:
        # closed neighbourhoods at c are those of the largest threshold <= c
        t = max(index for index, threshold in enumerate(thresholds) if threshold <= c)
        if excesses[t] <= c:
            return c
    return Fraction(1)
