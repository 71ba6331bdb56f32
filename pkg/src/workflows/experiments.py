"""
Experiment workflows behind the CLI subcommands.

Each workflow takes a validated ExperimentConfig plus its command-specific
arguments and returns an ExperimentResult: the primary artifact as text
(CSV or JSON) and a small summary for the console. Workflows never print.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.dynamics.birkhoff import LocalObservable, vset_diagnostics
from src.dynamics.measure import DiscreteMeasure, prohorov, prohorov_bruteforce_oracle
from src.dynamics.symbolic import EventuallyPeriodicPoint, point_from_json, word_to_string
from src.dynamics.tracing import build_generic_point, trace_full_shift, verify_trace
from src.reductions.oxtoby import oxtoby_build, oxtoby_reduce
from src.reductions.psi import phi_reduction, psi_reduction
from src.reductions.trees import TreeOnOmega, tree_point
from src.utils.config import ExperimentConfig
from src.utils.errors import InputError
from src.utils.formatting import decimal_string, frame_to_csv, with_decimal
from src.utils.logger import LogTimer, logger
from src.utils.performance import parallel_map
from src.utils.serialization import (
    dumps,
    load_json,
    measure_from_json,
    measures_from_json,
    specification_from_json,
)


@dataclass
class ExperimentResult:
    command: str
    text: str
    summary: Dict[str, Any] = field(default_factory=dict)
    success: bool = True
    prefix: Optional[str] = None


def parse_int_list(text: str) -> List[int]:
    """"1,2,3" -> [1, 2, 3]"""
    try:
        values = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as e:
        raise InputError(f"not a comma-separated integer list: {text!r}") from e
    if not values:
        raise InputError("integer list is empty")
    return values


def _input(cfg: ExperimentConfig, index: int):
    if index >= len(cfg.inputs):
        raise InputError(f"command {cfg.command!r} needs {index + 1} input file(s)")
    return cfg.inputs[index]


def _prefix_text(word: Sequence[int]) -> str:
    return word_to_string(word) + "\n"


def run_prohorov(cfg: ExperimentConfig) -> ExperimentResult:
    mu = measure_from_json(load_json(_input(cfg, 0)), cfg.horizon)
    nu = measure_from_json(load_json(_input(cfg, 1)), cfg.horizon)
    distance = prohorov(mu, nu, cfg.horizon)
    return ExperimentResult("prohorov", with_decimal(distance) + "\n",
                            {"distance": str(distance), "decimal": decimal_string(distance)})


def run_emp_series(cfg: ExperimentConfig, checkpoints: Sequence[int]) -> ExperimentResult:
    x = point_from_json(load_json(_input(cfg, 0)))
    targets = measures_from_json(load_json(_input(cfg, 1)), cfg.horizon)
    table = vset_diagnostics(x, targets, checkpoints, cfg.horizon, cfg.workers)
    nearest = table.min_trajectory()[-1]
    return ExperimentResult("emp-series", table.to_csv(),
                            {"checkpoints": len(table.checkpoints), "last_nearest_target": nearest[1],
                             "last_distance": str(nearest[2])})


def run_trace(cfg: ExperimentConfig, point_path=None, metric_horizon: Optional[int] = None,
              pad: int = 0) -> ExperimentResult:
    """Verify a point against a specification; by default the point is the concatenation"""
    xi = specification_from_json(load_json(_input(cfg, 0)))
    y = point_from_json(load_json(point_path)) if point_path else trace_full_shift(xi, pad=pad)
    report = verify_trace(y, xi, cfg.rational("eps"), cfg.rational("delta1"),
                          cfg.rational("delta2"), metric_horizon)
    return ExperimentResult("trace", dumps(report.to_dict()),
                            {"verdict": report.verdict, "total_length": report.total_length})


def run_generic_build(cfg: ExperimentConfig) -> ExperimentResult:
    mus = measures_from_json(load_json(_input(cfg, 0)), cfg.horizon)
    build = build_generic_point(mus, cfg.rational("eps"), cfg.stages, cfg.horizon, cfg.length_cap)
    return ExperimentResult("generic-build", build.to_csv(),
                            {"length": build.length, "all_pass": build.all_pass},
                            success=build.all_pass, prefix=_prefix_text(build.prefix))


def run_psi_reduce(cfg: ExperimentConfig, beta: Sequence[int], breakpoints: Sequence[int]) -> ExperimentResult:
    nu = measure_from_json(load_json(_input(cfg, 0)), cfg.horizon)
    mus = measures_from_json(load_json(_input(cfg, 1)), cfg.horizon)
    result = psi_reduction(beta, nu, mus, breakpoints, cfg.stages, cfg.rational("eps"),
                           cfg.horizon, cfg.length_cap)
    terminal = result.terminal
    return ExperimentResult("psi-reduce", result.to_csv(),
                            {"length": terminal.length, "to_limit": str(terminal.to_limit),
                             "all_pass": result.build.all_pass},
                            prefix=_prefix_text(result.prefix))


def run_phi_reduce(cfg: ExperimentConfig, beta: Sequence[int], breakpoints: Sequence[int],
                   symbol: int = 1) -> ExperimentResult:
    nu = measure_from_json(load_json(_input(cfg, 0)), cfg.horizon)
    mubar = measure_from_json(load_json(_input(cfg, 1)), cfg.horizon)
    alphabet = sorted({sym for measure in (nu, mubar) for key in measure.keys for sym in key} | {symbol})
    phi = LocalObservable.indicator(symbol, alphabet)
    result = phi_reduction(beta, nu, mubar, phi, breakpoints, cfg.stages, cfg.rational("eps"),
                           cfg.horizon, cfg.length_cap, cfg.rational("tolerance"))
    amplitudes = result.amplitudes()
    return ExperimentResult("phi-reduce", result.to_csv(),
                            {"verdict": result.verdict.to_dict(),
                             "max_amplitude": str(max(amplitudes)) if amplitudes else "0"},
                            prefix=_prefix_text(result.prefix))


def run_tree_point(cfg: ExperimentConfig) -> ExperimentResult:
    tree = TreeOnOmega.from_json(load_json(_input(cfg, 0)))
    result = tree_point(tree, cfg.stages, cfg.horizon, cfg.length_cap)
    return ExperimentResult("tree-point", result.to_csv(),
                            {"lengths": list(result.schedule.lengths), "a": list(result.schedule.a),
                             "b": list(result.schedule.b), "wellfounded": tree.is_wellfounded},
                            prefix=_prefix_text(result.prefix))


def run_oxtoby(cfg: ExperimentConfig, verb: str, s: Sequence[int], depth: int,
               length: Optional[int] = None, level: Optional[int] = None,
               beta: Optional[Sequence[int]] = None) -> ExperimentResult:
    machine = oxtoby_build(s, depth)
    if verb == "words":
        lines = [f"W_{n} = {machine.W[n]}" for n in range(depth + 1)]
        return ExperimentResult("oxtoby words", "\n".join(lines) + "\n", {"depth": depth})
    if verb == "stats":
        return ExperimentResult("oxtoby stats", frame_to_csv(machine.stats_frame()),
                                {"a_interval": [str(v) for v in machine.a_interval]})
    if verb == "language":
        level = depth if level is None else level
        length = machine.lengths[level] if length is None else length
        report = machine.language(length, level)
        document = {"length": length, "level": level, "count": report.count,
                    "bound": report.bound, "within_bound": report.within_bound,
                    "words": sorted(report.words)}
        return ExperimentResult("oxtoby language", dumps(document),
                                {"count": report.count, "bound": report.bound})
    if verb == "reduce":
        if not beta:
            raise InputError("oxtoby reduce needs --beta")
        result = oxtoby_reduce(machine, beta, length)
        holds = all(w.holds for w in result.windows) and all(sw.holds for sw in result.sweeps)
        return ExperimentResult("oxtoby reduce", result.to_csv(),
                                {"length": result.length, "js": list(result.js), "all_hold": holds})
    if verb == "dump":
        return ExperimentResult("oxtoby dump", dumps(machine.to_json(max_word_length=4096)),
                                {"depth": depth})
    raise InputError(f"unknown oxtoby verb {verb!r}")


def random_measure(rng: random.Random, max_support: int, horizon: int,
                   alphabet: Sequence[int] = (0, 1)) -> DiscreteMeasure:
    """Random measure on eventually-constant points with small rational weights"""
    size = rng.randint(1, max_support)
    points = []
    for _ in range(size):
        head = [rng.choice(alphabet) for _ in range(rng.randint(0, horizon))]
        points.append(EventuallyPeriodicPoint(head, (rng.choice(alphabet),)))
    raw = [rng.randint(1, 6) for _ in points]
    total = sum(raw)
    return DiscreteMeasure.from_points(points, [Fraction(r, total) for r in raw], horizon)


def oracle_pairs(seed: int, count: int, max_support: int = 8,
                 horizon: int = 6) -> List[Tuple[DiscreteMeasure, DiscreteMeasure]]:
    rng = random.Random(seed)
    return [(random_measure(rng, max_support, horizon), random_measure(rng, max_support, horizon))
            for _ in range(count)]


def run_check(cfg: ExperimentConfig, count: int = 500) -> ExperimentResult:
    """Compare prohorov with the brute-force oracle on seeded random pairs"""
    horizon = min(cfg.horizon, 6)
    pairs = oracle_pairs(cfg.seed, count, horizon=horizon)

    def compare(pair):
        mu, nu = pair
        return prohorov(mu, nu, horizon), prohorov_bruteforce_oracle(mu, nu, horizon)

    with LogTimer("oracle_check", count=count):
        results = parallel_map(compare, pairs, cfg.workers)
    mismatches = [{"index": i, "flow": str(a), "oracle": str(b)}
                  for i, (a, b) in enumerate(results) if a != b]
    if mismatches:
        logger.error(f"{len(mismatches)} oracle mismatches")
    document = {"seed": cfg.seed, "count": count, "horizon": horizon,
                "mismatches": mismatches, "agree": not mismatches}
    return ExperimentResult("check", dumps(document), {"agree": not mismatches},
                            success=not mismatches)

