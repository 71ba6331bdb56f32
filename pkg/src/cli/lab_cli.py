"""
Batch command-line front end for genericlab

Artifacts (CSV, JSON, distances) go to standard output or to --output;
diagnostics go to standard error through a rich console. Exit codes:
0 success, 1 precondition failure or failed check, 2 input or I/O error.
A failed run with --output leaves a JSON error document there.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape

from src.utils.config import DEFAULT_HORIZON, DEFAULT_LENGTH_CAP, ExperimentConfig, config
from src.utils.errors import InputError, LabError, exit_code_for
from src.utils.logger import logger
from src.utils.serialization import dumps, error_to_json, write_text
from src.workflows import experiments
from src.workflows.experiments import ExperimentResult, parse_int_list

console = Console(stderr=True)

# Positional input files per command, in the order the workflows read them
INPUT_ARGUMENTS = {
    'prohorov': ('measures',),
    'emp-series': ('point', 'targets'),
    'trace': ('spec',),
    'generic-build': ('measures',),
    'psi-reduce': ('nu', 'targets'),
    'phi-reduce': ('nu', 'mubar'),
    'tree-point': ('tree',),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--output', '-o', type=Path, help='Write the artifact here instead of stdout')
    parser.add_argument('--horizon', type=int, default=config.horizon or DEFAULT_HORIZON,
                        help='Working horizon for measures and distances')
    parser.add_argument('--workers', type=int, default=config.workers,
                        help='Worker threads for distance tables and sweeps')
    parser.add_argument('--cap', type=int, default=config.length_cap or DEFAULT_LENGTH_CAP,
                        help='Largest prefix length a builder may produce')
    parser.add_argument('--seed', type=int, default=0, help='Seed for randomised checks')
    parser.add_argument('--quiet', '-q', action='store_true', help='Suppress the console summary')


def _add_build_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--stages', type=int, default=5, help='Number of construction stages')
    parser.add_argument('--eps', default='1/8', help='Tolerance eps as p/q')
    parser.add_argument('--prefix-out', type=Path, help='Write the built prefix to this file')


def create_cli_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='genericlab',
        description='Generic points, empirical measures and reduction constructions on shift spaces',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s prohorov a.json b.json
  %(prog)s trace spec.json --eps 1/4 --d1 0 --d2 0
  %(prog)s oxtoby words --s 3,4 --depth 2
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('prohorov', help='Exact Prohorov distance of two measures')
    p.add_argument('measures', nargs=2, type=Path)
    _add_common(p)

    p = sub.add_parser('emp-series', help='Distances from empirical measures to targets')
    p.add_argument('point', type=Path)
    p.add_argument('targets', type=Path)
    p.add_argument('--checkpoints', required=True, help='Comma-separated lengths n')
    _add_common(p)

    p = sub.add_parser('trace', help='Verify that a point traces a specification')
    p.add_argument('spec', type=Path)
    p.add_argument('--point', type=Path, help='Point to verify (default: the concatenation)')
    p.add_argument('--eps', default='1/4')
    p.add_argument('--d1', default='0', help='Error fraction delta1')
    p.add_argument('--d2', default='0', help='Gap fraction delta2')
    p.add_argument('--metric-horizon', type=int,
                   help='Compare with the global metric at this horizon instead of segment-locally')
    p.add_argument('--pad', type=int, default=0, help='Continuation symbols after each segment')
    _add_common(p)

    p = sub.add_parser('generic-build', help='Stage-by-stage generic point with certificate')
    p.add_argument('measures', type=Path, help='JSON list of target measures')
    _add_build_options(p)
    _add_common(p)

    p = sub.add_parser('psi-reduce', help='Generic point for psi-mixtures driven by beta')
    p.add_argument('nu', type=Path)
    p.add_argument('targets', type=Path, help='Measure list; the last one is the limit')
    p.add_argument('--beta', required=True)
    p.add_argument('--breakpoints', required=True)
    _add_build_options(p)
    _add_common(p)

    p = sub.add_parser('phi-reduce', help='Average series of the alternating psi construction')
    p.add_argument('nu', type=Path)
    p.add_argument('mubar', type=Path)
    p.add_argument('--beta', required=True)
    p.add_argument('--breakpoints', required=True)
    p.add_argument('--symbol', type=int, default=1, help='phi is the indicator of x_0 = symbol')
    p.add_argument('--tolerance', default='1/20')
    _add_build_options(p)
    _add_common(p)

    p = sub.add_parser('tree-point', help='Code a finite tree into a point')
    p.add_argument('tree', type=Path)
    _add_build_options(p)
    _add_common(p)

    p = sub.add_parser('oxtoby', help='Oxtoby words, statistics, language and reduction')
    p.add_argument('verb', choices=['words', 'stats', 'language', 'reduce', 'dump'])
    p.add_argument('--s', default='4,8,16,32,64', help='Comma-separated parameters s_j')
    p.add_argument('--depth', type=int, default=3)
    p.add_argument('--length', type=int, help='Word length (language) or prefix length (reduce)')
    p.add_argument('--level', type=int, help='Level n for language enumeration')
    p.add_argument('--beta', help='Comma-separated beta for reduce')
    _add_common(p)

    p = sub.add_parser('check', help='Seeded comparison of prohorov with the brute-force oracle')
    p.add_argument('--count', type=int, default=500)
    _add_common(p)

    return parser


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    inputs: List[Path] = []
    for name in INPUT_ARGUMENTS.get(args.command, ()):
        value = getattr(args, name)
        inputs.extend(value if isinstance(value, list) else [value])
    try:
        return ExperimentConfig(
            command=args.command,
            inputs=inputs,
            output=args.output,
            horizon=args.horizon,
            length_cap=args.cap,
            stages=getattr(args, 'stages', 5),
            eps=getattr(args, 'eps', '1/8'),
            delta1=getattr(args, 'd1', '0'),
            delta2=getattr(args, 'd2', '0'),
            tolerance=getattr(args, 'tolerance', '1/20'),
            seed=args.seed,
            workers=args.workers,
        )
    except ValidationError as e:
        first = e.errors()[0]
        raise InputError(f"invalid option {'.'.join(map(str, first['loc']))}: {first['msg']}") from e


def dispatch(args: argparse.Namespace, cfg: ExperimentConfig) -> ExperimentResult:
    command = args.command
    if command == 'prohorov':
        return experiments.run_prohorov(cfg)
    if command == 'emp-series':
        return experiments.run_emp_series(cfg, parse_int_list(args.checkpoints))
    if command == 'trace':
        if args.point is not None and not args.point.is_file():
            raise InputError(f"input file(s) not found: {args.point}")
        return experiments.run_trace(cfg, args.point, args.metric_horizon, args.pad)
    if command == 'generic-build':
        return experiments.run_generic_build(cfg)
    if command == 'psi-reduce':
        return experiments.run_psi_reduce(cfg, parse_int_list(args.beta), parse_int_list(args.breakpoints))
    if command == 'phi-reduce':
        return experiments.run_phi_reduce(cfg, parse_int_list(args.beta),
                                          parse_int_list(args.breakpoints), args.symbol)
    if command == 'tree-point':
        return experiments.run_tree_point(cfg)
    if command == 'oxtoby':
        beta = parse_int_list(args.beta) if args.beta else None
        return experiments.run_oxtoby(cfg, args.verb, parse_int_list(args.s), args.depth,
                                      args.length, args.level, beta)
    if command == 'check':
        return experiments.run_check(cfg, args.count)
    raise InputError(f"unknown command {command!r}")


def _show_summary(result: ExperimentResult) -> None:
    status = "[green]ok[/green]" if result.success else "[yellow]check failed[/yellow]"
    console.print(f"{result.command}: {status}")
    for key, value in sorted(result.summary.items()):
        console.print(f"  {key}: {value}")


def _show_error(message: str) -> None:
    console.print(f"[red]error:[/red] {escape(message)}", highlight=False, soft_wrap=True)


def _write_error_artifact(args: argparse.Namespace, error: LabError) -> None:
    output = getattr(args, 'output', None)
    if output is None:
        return
    try:
        write_text(dumps(error_to_json(error, args.command)), output)
    except LabError as e:
        logger.debug(f"error artifact not written: {e}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one experiment and return the exit code"""
    parser = create_cli_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    try:
        cfg = _experiment_config(args)
        result = dispatch(args, cfg)
        write_text(result.text, cfg.output)
        prefix_out = getattr(args, 'prefix_out', None)
        if prefix_out is not None and result.prefix is not None:
            write_text(result.prefix, prefix_out)
        if not args.quiet:
            _show_summary(result)
        return 0 if result.success else 1
    except LabError as e:
        logger.debug(f"{type(e).__name__}: {e.to_dict()}")
        _show_error(e.message)
        _write_error_artifact(args, e)
        return exit_code_for(e)
    except OSError as e:
        _show_error(str(e))
        return 2
    except KeyboardInterrupt:
        console.print("interrupted")
        logger.info("Run interrupted by user (Ctrl+C)")
        return 130


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
