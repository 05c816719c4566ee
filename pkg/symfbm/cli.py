"""
Command-line front end.

    symfbm constants [--measure trapezoid ...]
    symfbm verify-clt --config clt.json [--seed 42] [--threads 8] [--output report.json]
    symfbm validate --config clt.json

Exit codes: 0 success, 1 config or validation error, 2 failed control experiment.
"""
import argparse
import io
import json
import logging
import sys

import amp

from . import __version__
from .constants import constants_table
from .errors import ConfigError, ControlFailure
from .harness.config import load_config, validate_dict
from .harness.experiments import (
    limit_law_experiment,
    power_sum_clt_experiment,
    residual_decay_experiment,
    riemann_summary,
    simulate,
)
from .harness.lemmas import run_lemma_scans
from .harness.report import atomic_write, to_plain
from .measure import BUILTIN_NAMES, parse_measure
from .task import THREADS_ENV, default_workers

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONTROL = 2

EXPERIMENT_COMMANDS = {
    "simulate": "simulate",
    "riemann": "riemann",
    "verify-clt": "clt",
    "verify-limit": "limit",
    "verify-lemmas": "lemmas",
    "verify-residual": "residual",
}
RUNNERS = {
    "riemann": riemann_summary,
    "clt": power_sum_clt_experiment,
    "limit": limit_law_experiment,
    "lemmas": run_lemma_scans,
    "residual": residual_decay_experiment,
}
CONSTANT_COLUMNS = ("measure", "ell", "hurst", "k", "sigma_sq", "sigma_sq_tail", "bm_limit_variance",
                    "bm_limit_tail", "ratio", "c_nu")


def validate_config(path, experiment=None):
    """
    Diagnostics for a config file, one line each; [] means valid.

    Raises:
        OSError: the file cannot be read.
    """
    with open(path) as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return [f"invalid JSON: {e}"]
    return validate_dict(data, experiment)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symfbm",
        description="Symmetric Riemann sums for fractional Brownian motion at the critical Hurst parameter.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    common.add_argument("-o", "--output", help="write to this file (atomically) instead of stdout")

    constants = sub.add_parser("constants", parents=[common], help="table of limit constants")
    constants.add_argument("--measure", action="append",
                           help=f"built-in ({', '.join(BUILTIN_NAMES)}) or a JSON measure spec; repeatable")
    constants.add_argument("--format", choices=("text", "json", "csv"), default="text")

    experiment = argparse.ArgumentParser(add_help=False, parents=[common])
    experiment.add_argument("-c", "--config", required=True, help="JSON experiment config")
    experiment.add_argument("--seed", type=int, help="replaces the config seed")
    experiment.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    experiment.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    experiment.add_argument("--format", choices=("json", "csv"), default=None)

    for name, kind in EXPERIMENT_COMMANDS.items():
        sub.add_parser(name, parents=[experiment], help=f"run the {kind} experiment")

    validate = sub.add_parser("validate", parents=[common], help="check a config and print diagnostics")
    validate.add_argument("-c", "--config", required=True)
    validate.add_argument("--experiment", help="validate as this experiment")
    return parser


def _emit(text, output):
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _constants_text(rows):
    def cell(v):
        if v is None:
            return "-"
        return f"{v:.10g}" if isinstance(v, float) else str(v)

    table = [CONSTANT_COLUMNS] + [tuple(cell(row[c]) for c in CONSTANT_COLUMNS) for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(CONSTANT_COLUMNS))]
    return "".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() + "\n" for r in table)


def _constants_csv(rows):
    stream = io.StringIO()
    keys = sorted(rows[0]) if rows else []
    stream.write(",".join(keys) + "\n")
    for row in rows:
        stream.write(",".join("" if row[k] is None else repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in keys) + "\n")
    return stream.getvalue()


def _measure_arg(text):
    text = text.strip()
    if text[:1] in "[{":
        return parse_measure(json.loads(text))
    return parse_measure(text)


def run_constants(args):
    measures = [_measure_arg(m) for m in (args.measure or BUILTIN_NAMES)]
    rows = constants_table(measures)
    if args.format == "json":
        text = json.dumps(to_plain(rows), indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        text = _constants_csv(rows)
    else:
        text = _constants_text(rows)
    _emit(text, args.output)
    return EXIT_OK


def run_validate(args):
    diagnostics = validate_config(args.config, args.experiment)
    for line in diagnostics:
        print(line, file=sys.stderr)
    if diagnostics:
        return EXIT_CONFIG
    print(f"{args.config}: ok", file=sys.stderr)
    return EXIT_OK


def _simulate_text(batch, fmt):
    if fmt == "json":
        payload = {"grid": batch.grid.to_dict(), "seed": batch.seed, "method": batch.method,
                   "values": batch.values}
        return json.dumps(to_plain(payload), sort_keys=True) + "\n"
    stream = io.StringIO()
    batch.to_csv(stream)
    return stream.getvalue()


def run_experiment(args):
    kind = EXPERIMENT_COMMANDS[args.command]
    config = load_config(args.config, experiment=kind, seed=args.seed)
    workers = args.threads or default_workers()
    if workers < 1:
        raise ConfigError(f"--threads must be >= 1, got {workers}")
    try:
        if kind == "simulate":
            text = _simulate_text(simulate(config), args.format or "csv")
        else:
            report = RUNNERS[kind](config, workers=workers)
            text = report.render(args.format or "json", include_timing=args.timing)
    finally:
        amp.shutdown_global()
    _emit(text, args.output)
    return EXIT_OK


def run(argv=None):
    """Parses ``argv`` and dispatches. Returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)

    try:
        if args.command == "constants":
            return run_constants(args)
        if args.command == "validate":
            return run_validate(args)
        return run_experiment(args)
    except ConfigError as e:
        for line in e.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ControlFailure as e:
        print(f"control failure: {e}", file=sys.stderr)
        return EXIT_CONTROL
    except (ValueError, OSError, RuntimeError) as e:
        # no OpenCL device, a dead worker or a pool timeout land here too
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
