import argparse, logging, os, sys
from dataclasses import replace
from src.bench import run_experiment
from src.config import config
from src.datagen import GaussFamily, GaussSpec, generate, write_csv
from src.errors import ConfigError, InputError
from src.experiment_config import load_experiment
from src.logging_config import init_logging
from src.report import emit_csv

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpsynth-bench",
                                     description="Differentially private synthetic data benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep and write a CSV report")
    run.add_argument("--config", required=True, help="experiment YAML file")
    run.add_argument("--output", help="report CSV (default: experiment 'output' or <output_directory>/<name>.csv)")
    run.add_argument("--jobs", type=int, default=1, help="points run in parallel")
    run.add_argument("--time-limit", type=float, dest="time_limit",
                     help="override the per-fit time limit in minutes")
    run.add_argument("--no-timing", action="store_true", help="leave timing columns empty")

    gen = sub.add_parser("gen", help="emit a synthetic Gauss dataset as CSV")
    gen.add_argument("--family", required=True, choices=[f.value for f in GaussFamily])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output CSV (default: <output_directory>/<family>_n<n>_d<d>.csv)")
    return parser


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def cmd_run(args) -> int:
    experiment = load_experiment(args.config)
    if args.time_limit is not None:
        if args.time_limit < 0:
            raise ConfigError("--time-limit", f"must be non-negative, got {args.time_limit}")
        experiment = replace(experiment, time_limit_minutes=args.time_limit)
    if args.jobs < 1:
        raise ConfigError("--jobs", f"must be >= 1, got {args.jobs}")
    output = args.output or experiment.output or os.path.join(config.output_directory, f"{experiment.name}.csv")

    rows = run_experiment(experiment, jobs=args.jobs)
    emit_csv(rows, output, timing=not args.no_timing)
    logger.info("Report written to %s", output)
    return EXIT_OK


def cmd_gen(args) -> int:
    table = generate(GaussSpec(args.family, args.n, args.d, args.seed))
    output = args.out or os.path.join(config.output_directory, f"{args.family}_n{args.n}_d{args.d}.csv")
    _ensure_parent(output)
    write_csv(table, output)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "gen": cmd_gen}
    try:
        init_logging(run_name=f"dpsynth_{args.command}")
        return handlers[args.command](args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except InputError as e:
        logger.error("Invalid input: %s", e)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        logger.info("User requested termination (Ctrl+C)")
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("CRITICAL ERROR: %s", e)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
