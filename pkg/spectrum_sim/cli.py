"""
Command-line interface: run, verify and sweep.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence

from config import Config, SimConfig, load_config
from spectrum_sim.errors import ConfigError, SimulationError, UsageError
from spectrum_sim.features.data_export import EXPORT_FORMATS, ResultExporter, emit_results
from spectrum_sim.harness import run_experiment, run_sweep
from spectrum_sim.verification import STRUCTURAL_CHECKS, run_checks, run_directional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', metavar='PATH', help='key=value config file')
    parser.add_argument('--samples', type=int, help='number of Monte Carlo samples')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--solver', choices=Config.SOLVERS)
    parser.add_argument('--power', choices=Config.POWER_MODES, help='power allocation mode')
    parser.add_argument('--workers', type=int, help=f'worker processes (overridden by {Config.WORKERS_ENV})')
    parser.add_argument('-v', '--verbose', action='count', default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='simulate', description='Spectrum sharing matching / power learning simulator')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    run = sub.add_parser('run', help='run one experiment and write result tables')
    _add_common(run)
    run.add_argument('--out', default=Config.DEFAULT_OUTPUT_DIR, help='output directory')
    run.add_argument('--format', default='csv', choices=EXPORT_FORMATS)

    verify = sub.add_parser('verify', help='run the stability and invariant checks')
    _add_common(verify)
    verify.add_argument('--only', action='append', choices=sorted(STRUCTURAL_CHECKS),
                        help='run only this check (repeatable)')
    verify.add_argument('--directional', action='store_true',
                        help='also run the directional experiment checks')

    sweep = sub.add_parser('sweep', help='per-operator welfare over a parameter grid')
    _add_common(sweep)
    sweep.add_argument('--over', required=True, choices=('K', 'L', 'c'))
    sweep.add_argument('--values', required=True,
                       help="comma list for K or L; ';'-separated quota vectors for c, e.g. '2,2,1;2,4,4'")
    sweep.add_argument('--average-quotas', action='store_true',
                       help='quota vectors of the per-operator average study when sweeping K')
    sweep.add_argument('--out', default=Config.DEFAULT_OUTPUT_DIR, help='output directory')
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.DEBUG if verbosity else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def resolve_config(args: argparse.Namespace) -> SimConfig:
    """Config file (or defaults) with command-line overrides applied."""
    cfg = load_config(args.config) if args.config else SimConfig()
    return cfg.with_overrides(samples=args.samples, seed=args.seed, solver=args.solver,
                              power_mode=args.power, workers=args.workers)


def parse_sweep_values(over: str, raw: str) -> List:
    try:
        if over == 'c':
            return [tuple(int(part) for part in vector.split(',') if part.strip())
                    for vector in raw.split(';') if vector.strip()]
        return [int(part) for part in raw.split(',') if part.strip()]
    except ValueError as e:
        raise UsageError(f"bad sweep values {raw!r}: {e}") from e


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    result = run_experiment(cfg)
    paths = emit_results(result, args.format, args.out)
    print(f"{len(result.samples)} samples, mean S = {result.welfare.mean() if result.samples else 0.0:.4f} bits/s/Hz")
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_checks(args.only)
    if args.directional:
        results += run_directional(resolve_config(args))
    for result in results:
        print(result.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    values = parse_sweep_values(args.over, args.values)
    table, _ = run_sweep(cfg, args.over, values, average_quotas=args.average_quotas)
    exporter = ResultExporter(args.out)
    exporter.ensure_dir()
    path = exporter.write_table(table, f"sweep_{args.over}.csv")
    print(table.to_string(index=False))
    print(path)
    return EXIT_OK


COMMANDS = {'run': _cmd_run, 'verify': _cmd_verify, 'sweep': _cmd_sweep}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG
    _configure_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        logger.debug("runtime failure", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == '__main__':
    main()
