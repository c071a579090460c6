"""Experiment runner: python -m app.cli <experiment> [options] | run --config <file>"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .config import settings
from .errors import ConfigError, NumericalError, ReportIOError
from .models.experiment import ExperimentConfig, ExperimentKind, OutputFormat
from .services.experiment_service import ExperimentService
from .services.report_service import ReportService

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_PURIFY_OPTIONS = ("p", "collection", "pairs_per_setting", "baseline_polarization", "baseline_spatial", "counting_mode")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="overrides the configured seed")
    parser.add_argument("--out", default=settings.REPORT_OUTPUT_DIR, help="report directory")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
    parser.add_argument("--quiet", action="store_true", help="log warnings and errors only")


def _add_purify_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=float, required=True, help="flip probability per degree of freedom")
    parser.add_argument("--collection", choices=["first_pair", "second_pair", "both_parallel"])
    parser.add_argument("--pairs-per-setting", dest="pairs_per_setting", type=float)
    parser.add_argument("--baseline-polarization", dest="baseline_polarization", type=float)
    parser.add_argument("--baseline-spatial", dest="baseline_spatial", type=float)
    parser.add_argument("--counting-mode", dest="counting_mode", choices=["sequential", "parallel"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.cli", description="Run hyperentanglement purification experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a JSON config file")
    run.add_argument("--config", required=True)
    _add_common(run)

    for kind in ExperimentKind:
        p = sub.add_parser(kind.value, help=f"run the {kind.value} experiment")
        _add_common(p)
        if kind in (ExperimentKind.BF_PURIFY, ExperimentKind.PF_PURIFY, ExperimentKind.CHSH_SCAN):
            _add_purify_options(p)
        elif kind == ExperimentKind.DISTRIBUTE_BASELINE:
            p.add_argument("--baseline-polarization", dest="baseline_polarization", type=float)
            p.add_argument("--baseline-spatial", dest="baseline_spatial", type=float)
            p.add_argument("--pairs-per-setting", dest="pairs_per_setting", type=float)
        elif kind == ExperimentKind.WERNER_CURVE:
            p.add_argument("--f-start", dest="f_start", type=float, default=0.25)
            p.add_argument("--f-stop", dest="f_stop", type=float, default=1.0)
            p.add_argument("--f-num", dest="f_num", type=int, default=301)
        elif kind == ExperimentKind.SYNDROME_TABLE:
            p.add_argument("--F", dest="F", type=float, required=True)
        elif kind == ExperimentKind.SOURCE_METRICS:
            p.add_argument("--car", type=float, default=56.3)
            p.add_argument("--g2-raw", dest="g2_raw", type=float, default=1.77)
        elif kind == ExperimentKind.PLL_LOCK:
            p.add_argument("--duration", type=float, default=600.0, help="seconds")
            p.add_argument("--seeds", type=int, default=1)
        elif kind == ExperimentKind.PURIFY_SWEEP:
            p.add_argument("--p-values", dest="p_values", type=float, nargs="+", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Assemble an ExperimentConfig from a subcommand's flags, or load it from --config"""
    if args.command == "run":
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise ConfigError(f'Cannot read config {args.config}: {e}') from e
        except json.JSONDecodeError as e:
            raise ConfigError(f'Config {args.config} is not valid JSON: {e}') from e
        return ExperimentConfig.model_validate(raw)

    kind = ExperimentKind(args.command)
    options = vars(args)
    parameters: Dict[str, Any] = {}
    for name in _PURIFY_OPTIONS + ("F", "car", "g2_raw", "duration", "seeds", "p_values"):
        if options.get(name) is not None:
            parameters[name] = options[name]
    if kind == ExperimentKind.WERNER_CURVE:
        parameters["f_grid"] = {"start": args.f_start, "stop": args.f_stop, "num": args.f_num}
    return ExperimentConfig(experiment=kind, parameters=parameters)


def configure_logging(quiet: bool) -> None:
    level = logging.WARNING if quiet else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    try:
        config = config_from_args(args)
        report = ExperimentService().run(config, seed=args.seed)
        files = ReportService().write(report, Path(args.out), OutputFormat(args.format))
    except (ValidationError, ConfigError) as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error("Numerical failure: %s", e)
        return EXIT_NUMERICAL
    except ReportIOError as e:
        logger.error("%s", e)
        return EXIT_IO
    except ValueError as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    for path in files:
        logger.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
