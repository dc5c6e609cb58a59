#!/usr/bin/env python
import sys
import logging
import argparse
import textwrap
from enum import Enum
from typing import List, Tuple, Optional
from pathlib import Path
from dataclasses import dataclass

import halo
import numpy as np
import rich.traceback

import ultragap.oracle
import ultragap.solver
import ultragap.verify
import ultragap.logging_
import ultragap.simplex
import ultragap.asymptote
import ultragap.render.csv
import ultragap.render.json
import ultragap.dendrogram
import ultragap.render.default
from ultragap.qp import ActiveSetError
from ultragap.const import DEFAULT_GRID, DEFAULT_SEED, DEFAULT_ORACLE_TRIALS, DEFAULT_VERIFY_SAMPLES
from ultragap.utils import DomainError
from ultragap.metric import (
    MetricKind,
    FiniteMetric,
    ArithmeticMode,
    InvalidInputFile,
    ValidationReport,
    MetricStructureError,
    NoNonzeroDistanceError,
    read_csv,
    write_csv,
)
from ultragap.render import Verbosity, OutputFormat
from ultragap.solver import CapacityError, NegativeTypeError
from ultragap.simplex import SimplexError
from ultragap.version import __version__
from ultragap.logging_ import TRACE, DebugLevel
from ultragap.dendrogram import DendrogramError

logger = ultragap.logging_.getLogger("ultragap")

# oracle undercutting the exact gap by more than this flags a solver bug
ORACLE_SLACK = 1e-9


class ExitCode(int, Enum):
    OK = 0
    GENERAL_METRIC = 1
    INVALID_INPUT = 2
    NOT_A_METRIC = 3
    SOLVER_FAILURE = 4


class Command(str, Enum):
    VALIDATE = "validate"
    DENDROGRAM = "dendrogram"
    GAP = "gap"
    CURVE = "curve"
    ASYMPTOTE = "asymptote"
    CLASSIFY = "classify"
    VERIFY = "verify"
    COEFFICIENTS = "coefficients"
    ORACLE = "oracle"


class InputFormat(str, Enum):
    AUTO = "auto"
    CSV_MATRIX = "csv-matrix"
    JSON_DENDROGRAM = "json-dendrogram"


# commands that only make sense on an ultrametric
ULTRAMETRIC_COMMANDS = (Command.DENDROGRAM, Command.CURVE, Command.ASYMPTOTE, Command.CLASSIFY, Command.COEFFICIENTS)
# commands with a CSV rendering
CSV_COMMANDS = (Command.DENDROGRAM, Command.CURVE, Command.COEFFICIENTS)


class ArgumentValueError(ValueError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """
    argparse will call sys.exit upon parsing invalid arguments.
    we don't want that, because we might be parsing args within test cases, run as a module, etc.
    so, we override the behavior to raise a ArgumentValueError instead.

    this strategy is originally described here: https://stackoverflow.com/a/16942165/87207
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        args = {"prog": self.prog, "message": message}
        raise ArgumentValueError("%(prog)s: error: %(message)s" % args)


def parse_grid(text: str) -> Tuple[float, ...]:
    """
    parse `start:stop:steps` into `steps` evenly spaced exponents, both ends included.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:steps, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:steps with an integer step count, got {text!r}")
    if steps < 1:
        raise argparse.ArgumentTypeError(f"the step count must be positive, got {steps}")
    if steps == 1:
        return (start,)
    return tuple(float(p) for p in np.linspace(start, stop, steps))


@dataclass(frozen=True)
class RunConfig:
    """
    everything a command needs, resolved from the command line.

    Attributes:
      command: the subcommand
      input: path of the metric (CSV matrix) or dendrogram (JSON)
      input_format: never AUTO once resolved
      mode: arithmetic for parsing the input
      out: output format
      p: the exponent, for gap, verify and oracle
      grid: exponents of a curve, strictly increasing
      trials: random simplices for the oracle, 0 disables it
      seed: seed for the oracle and the sampler of verify
      G: the constant tested by verify
      samples: random vectors drawn by verify
      simplex: path of a simplex JSON document, for coefficients
    """

    command: Command
    input: Path
    input_format: InputFormat
    mode: ArithmeticMode
    out: OutputFormat
    p: Optional[float] = None
    grid: Tuple[float, ...] = ()
    trials: int = 0
    seed: Optional[int] = None
    G: Optional[float] = None
    samples: int = DEFAULT_VERIFY_SAMPLES
    simplex: Optional[Path] = None
    verbose: Verbosity = Verbosity.DEFAULT
    color: str = "auto"
    disable_progress: bool = False

    def __post_init__(self):
        if self.input_format == InputFormat.AUTO:
            raise ArgumentValueError("the input format must be resolved")
        for a, b in zip(self.grid, self.grid[1:]):
            if not b > a:
                raise ArgumentValueError(f"the exponent grid must be strictly increasing, got {a:g} then {b:g}")
        if self.trials < 0:
            raise ArgumentValueError(f"--trials must be nonnegative, got {self.trials}")
        if self.trials > 0 and self.seed is None:
            raise ArgumentValueError("--seed is required with --trials")
        if self.samples < 0:
            raise ArgumentValueError(f"--samples must be nonnegative, got {self.samples}")
        if self.out == OutputFormat.CSV and self.command not in CSV_COMMANDS:
            raise ArgumentValueError(
                f"CSV output is available for {', '.join(c.value for c in CSV_COMMANDS)}, not {self.command.value}"
            )


def resolve_input_format(path: Path, requested: str) -> InputFormat:
    fmt = InputFormat(requested)
    if fmt != InputFormat.AUTO:
        return fmt
    if path.suffix.lower() == ".json":
        return InputFormat.JSON_DENDROGRAM
    return InputFormat.CSV_MATRIX


def make_config(args) -> RunConfig:
    path = Path(args.input)
    input_format = resolve_input_format(path, args.format)
    if args.mode is not None:
        mode = ArithmeticMode(args.mode)
    elif input_format == InputFormat.JSON_DENDROGRAM:
        mode = ArithmeticMode.RATIONAL
    else:
        mode = ArithmeticMode.FLOAT

    return RunConfig(
        command=Command(args.command),
        input=path,
        input_format=input_format,
        mode=mode,
        out=OutputFormat(args.out),
        p=getattr(args, "p", None),
        grid=tuple(getattr(args, "grid", ())),
        trials=getattr(args, "trials", 0),
        seed=getattr(args, "seed", None),
        G=getattr(args, "G", None),
        samples=getattr(args, "samples", DEFAULT_VERIFY_SAMPLES),
        simplex=Path(args.simplex) if getattr(args, "simplex", None) else None,
        verbose=Verbosity.VERBOSE if args.verbose else Verbosity.DEFAULT,
        color=args.color,
        disable_progress=args.quiet or args.disable_progress,
    )


def make_common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    input_group = common.add_argument_group("input arguments")
    input_group.add_argument("-i", "--input", required=True, help="distance matrix (CSV) or dendrogram (JSON)")
    formats = [
        ("auto", "(default) by file extension, .json is a dendrogram"),
        ("csv-matrix", "labelled distance matrix"),
        ("json-dendrogram", "proximity dendrogram"),
    ]
    format_help = ", ".join(["%s: %s" % (f[0], f[1]) for f in formats])
    input_group.add_argument(
        "-f",
        "--format",
        choices=[f[0] for f in formats],
        default=InputFormat.AUTO.value,
        help="select input format, %s" % format_help,
    )
    input_group.add_argument(
        "--mode",
        choices=[m.value for m in ArithmeticMode],
        default=None,
        help="arithmetic for parsing the input, default: float for CSV, rational for JSON",
    )

    output_group = common.add_argument_group("rendering arguments")
    output_group.add_argument(
        "--out",
        choices=[o.value for o in OutputFormat],
        default=OutputFormat.JSON.value,
        help="emit JSON (default), CSV where available, or a text report",
    )
    output_group.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=Verbosity.DEFAULT,
        help="enable verbose text reports, e.g. all violations and solver diagnostics (does not affect JSON output)",
    )

    logging_group = common.add_argument_group("logging arguments")
    logging_group.add_argument(
        "-d",
        "--debug",
        action="count",
        default=DebugLevel.NONE,
        help="enable debugging output on STDERR, specify multiple times to increase verbosity",
    )
    logging_group.add_argument(
        "-q", "--quiet", action="store_true", help="disable all status output on STDERR except warnings and errors"
    )
    logging_group.add_argument(
        "--color",
        type=str,
        choices=("auto", "always", "never"),
        default="auto",
        help="enable ANSI color codes in text reports, default: only during interactive session",
    )
    logging_group.add_argument("--disable-progress", action="store_true", help="disable all progress bars")
    return common


def make_parser(argv):
    desc = (
        "Enhanced negative type gaps of finite ultrametric spaces.\n"
        f"  %(prog)s {__version__}\n\n"
        "computes the p-negative type gap of a finite metric space exactly,\n"
        "its limit as p grows, and whether it is constant in p."
    )
    epilog = textwrap.dedent(
        """
        examples:
          check whether a distance matrix is an ultrametric
            ultragap validate -i space.csv

          the gap at p = 2, cross-checked against 100000 random simplices
            ultragap gap -i space.csv --p 2 --trials 100000 --seed 0

          the gap on 31 exponents from 0 to 30, as CSV for plotting
            ultragap curve -i space.csv --grid 0:30:31 --out csv
        """
    )

    parser = ArgumentParser(
        description=desc,
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version="%(prog)s {:s}".format(__version__),
        help="show program's version number and exit",
    )

    common = make_common_parser()
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    commands.required = True

    commands.add_parser(
        Command.VALIDATE.value, parents=[common], help="check the metric and ultrametric axioms (exit 0, 1 or 3)"
    )
    commands.add_parser(
        Command.DENDROGRAM.value,
        parents=[common],
        help="convert an ultrametric matrix to its dendrogram (JSON), or a dendrogram to its matrix (CSV)",
    )

    gap = commands.add_parser(Command.GAP.value, parents=[common], help="the exact p-negative type gap")
    gap.add_argument("--p", type=float, required=True, help="the exponent, within [0, 30]")
    gap.add_argument("--trials", type=int, default=0, help="cross-check against this many random simplices")
    gap.add_argument("--seed", type=int, default=None, help="seed of the random cross-check")

    curve = commands.add_parser(Command.CURVE.value, parents=[common], help="the gap over a grid of exponents")
    curve.add_argument(
        "--grid",
        type=parse_grid,
        default=parse_grid(":".join(str(x) for x in DEFAULT_GRID)),
        help="exponents as start:stop:steps, default %s" % ":".join(f"{x:g}" for x in DEFAULT_GRID),
    )

    commands.add_parser(Command.ASYMPTOTE.value, parents=[common], help="the exact limit of the normalized gap")
    commands.add_parser(Command.CLASSIFY.value, parents=[common], help="whether the gap is constant in p")

    verify = commands.add_parser(
        Command.VERIFY.value, parents=[common], help="check the enhanced p-negative type inequality for a constant G"
    )
    verify.add_argument("-G", dest="G", type=float, required=True, help="the constant to test")
    verify.add_argument("--p", type=float, required=True, help="the exponent, within [0, 30]")
    verify.add_argument(
        "--samples", type=int, default=DEFAULT_VERIFY_SAMPLES, help="random vectors evaluated as evidence"
    )
    verify.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the random vectors")

    coefficients = commands.add_parser(
        Command.COEFFICIENTS.value, parents=[common], help="level coefficients and flatness of a simplex"
    )
    coefficients.add_argument("--simplex", required=True, help='simplex JSON document {"omega": [...]}')

    oracle = commands.add_parser(
        Command.ORACLE.value, parents=[common], help="a randomized upper bound on the gap, for any number of points"
    )
    oracle.add_argument("--p", type=float, required=True, help="the exponent, within [0, 30]")
    oracle.add_argument("--trials", type=int, default=DEFAULT_ORACLE_TRIALS, help="random simplices to sample")
    oracle.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the sampler")

    return parser


def set_log_config(debug, quiet, color="auto"):
    if quiet:
        log_level = logging.WARNING
    elif debug >= DebugLevel.TRACE:
        log_level = TRACE
    elif debug >= DebugLevel.DEFAULT:
        log_level = logging.DEBUG
    else:
        log_level = logging.INFO

    logging.basicConfig(level=log_level)
    logging.getLogger().setLevel(log_level)

    if debug < DebugLevel.SUPERTRACE:
        # one line per sub-problem is too verbose even for the TRACE level, enable via `-ddd`
        logging.getLogger("ultragap.qp").setLevel(logging.DEBUG)

    # install the log message colorizer to the default handler.
    # because basicConfig is just above this,
    # handlers[0] is a StreamHandler to STDERR.
    #
    # calling this code from outside script main may do something unexpected.
    logging.getLogger().handlers[0].setFormatter(ultragap.logging_.make_formatter(color))


def load_report(config: RunConfig) -> ValidationReport:
    """
    raises:
      InvalidInputFile: the file cannot be parsed.
      MetricStructureError: a matrix that cannot describe a metric.
      DendrogramError: a dendrogram document violating the dendrogram axioms.
    """
    if config.input_format == InputFormat.JSON_DENDROGRAM:
        d = ultragap.dendrogram.read_json(config.input, config.mode)
        metric = ultragap.dendrogram.dendrogram_to_metric(d)
        return ValidationReport(metric=metric, labels=metric.labels)
    return read_csv(config.input, config.mode)


def emit(document, config: RunConfig, labels=()) -> None:
    if config.out == OutputFormat.TEXT:
        print(ultragap.render.default.render(document, labels, config.verbose, config.color), end="")
    elif config.out == OutputFormat.CSV:
        if config.command == Command.CURVE:
            print(ultragap.render.csv.render_curve(document), end="")
        else:
            print(ultragap.render.csv.render_coefficients(document), end="")
    else:
        print(ultragap.render.json.render(document))


def spinner(config: RunConfig, text: str) -> halo.Halo:
    return halo.Halo(
        text=text,
        spinner="simpleDots",
        stream=sys.stderr,
        enabled=not config.disable_progress,
    )


def cmd_validate(config: RunConfig, report: ValidationReport) -> int:
    emit(ultragap.render.json.validation_document(report, report.labels), config, report.labels)
    if report.kind == MetricKind.ULTRAMETRIC:
        return ExitCode.OK
    if report.kind == MetricKind.GENERAL:
        return ExitCode.GENERAL_METRIC
    return ExitCode.NOT_A_METRIC


def cmd_dendrogram(config: RunConfig, m: FiniteMetric) -> int:
    if config.input_format == InputFormat.JSON_DENDROGRAM:
        print(write_csv(m), end="")
    else:
        print(ultragap.dendrogram.to_json(ultragap.dendrogram.build_dendrogram(m)))
    return ExitCode.OK


def cmd_gap(config: RunConfig, m: FiniteMetric) -> int:
    assert config.p is not None
    with spinner(config, "solving sign partitions"):
        result = ultragap.solver.gap(m, config.p, disable_progress=config.disable_progress)

    if config.trials > 0:
        bound = ultragap.oracle.gap_oracle(
            m, config.p, trials=config.trials, seed=config.seed, disable_progress=config.disable_progress
        )
        logger.info("randomized upper bound from %d trials: %.12g", bound.trials, bound.value)
        if bound.value < result.value - ORACLE_SLACK * max(1.0, abs(result.value)):
            logger.warning(
                "the randomized bound %.12g undercuts the exact gap %.12g, the exact solver may have missed a minimum",
                bound.value,
                result.value,
            )

    emit(ultragap.render.json.gap_document(result), config, m.labels)
    return ExitCode.OK


def cmd_curve(config: RunConfig, m: FiniteMetric) -> int:
    curve = ultragap.solver.gap_curve(m, config.grid, disable_progress=config.disable_progress)
    emit(ultragap.render.json.curve_document(curve), config, m.labels)
    return ExitCode.OK


def cmd_asymptote(config: RunConfig, m: FiniteMetric) -> int:
    t = ultragap.dendrogram.tree(ultragap.dendrogram.build_dendrogram(m))
    emit(ultragap.render.json.asymptote_document(t), config, m.labels)
    return ExitCode.OK


def cmd_classify(config: RunConfig, m: FiniteMetric) -> int:
    c = ultragap.asymptote.classify(m)
    emit(ultragap.render.json.classification_document(c, m.labels), config, m.labels)
    return ExitCode.OK


def cmd_verify(config: RunConfig, m: FiniteMetric) -> int:
    assert config.p is not None and config.G is not None
    with spinner(config, "deciding the enhanced inequality"):
        verdict = ultragap.verify.verify_enhanced(m, config.G, config.p, samples=config.samples, seed=config.seed)
    emit(ultragap.render.json.verify_document(verdict), config, m.labels)
    return ExitCode.OK


def cmd_coefficients(config: RunConfig, m: FiniteMetric) -> int:
    assert config.simplex is not None
    w = ultragap.simplex.read_simplex_json(config.simplex, config.mode)
    t = ultragap.dendrogram.tree(ultragap.dendrogram.build_dendrogram(m))
    coeffs = ultragap.simplex.level_coefficients(t, w)
    certificate = ultragap.simplex.is_flat(t, w)
    trend, _ = ultragap.simplex.trend(coeffs)
    emit(ultragap.render.json.coefficients_document(coeffs, certificate, trend), config, m.labels)
    return ExitCode.OK


def cmd_oracle(config: RunConfig, m: FiniteMetric) -> int:
    assert config.p is not None
    with spinner(config, "sampling simplices"):
        result = ultragap.oracle.gap_oracle(
            m, config.p, trials=config.trials, seed=config.seed, disable_progress=config.disable_progress
        )
    emit(ultragap.render.json.oracle_document(result), config, m.labels)
    return ExitCode.OK


COMMANDS = {
    Command.DENDROGRAM: cmd_dendrogram,
    Command.GAP: cmd_gap,
    Command.CURVE: cmd_curve,
    Command.ASYMPTOTE: cmd_asymptote,
    Command.CLASSIFY: cmd_classify,
    Command.VERIFY: cmd_verify,
    Command.COEFFICIENTS: cmd_coefficients,
    Command.ORACLE: cmd_oracle,
}


def run(config: RunConfig) -> int:
    try:
        report = load_report(config)
    except (InvalidInputFile, DendrogramError) as e:
        logger.error("cannot read %s: %s", config.input, e)
        return ExitCode.INVALID_INPUT
    except MetricStructureError as e:
        logger.error("not a metric: %s", e)
        if config.command == Command.VALIDATE:
            emit(ultragap.render.json.structural_error_document(e), config)
        return ExitCode.NOT_A_METRIC

    if config.command == Command.VALIDATE:
        return cmd_validate(config, report)

    m = report.metric
    if m is None:
        v = report.triangle_violations[0]
        logger.error(
            "not a metric: d(%s, %s) exceeds d(%s, %s) + d(%s, %s)",
            *(report.labels[x] for x in (v.i, v.j, v.i, v.k, v.k, v.j)),
        )
        return ExitCode.NOT_A_METRIC
    if config.command in ULTRAMETRIC_COMMANDS and m.kind != MetricKind.ULTRAMETRIC:
        logger.error("%s needs an ultrametric, the input is a general metric", config.command.value)
        return ExitCode.GENERAL_METRIC
    logger.debug("loaded %s from %s", m, config.input)

    try:
        return COMMANDS[config.command](config, m)
    except (InvalidInputFile, SimplexError, DendrogramError, DomainError, NoNonzeroDistanceError) as e:
        logger.error("%s", e)
        return ExitCode.INVALID_INPUT
    except (CapacityError, NegativeTypeError, ActiveSetError) as e:
        logger.error("%s", e)
        print(ultragap.render.json.render(ultragap.render.json.failure_document(e)))
        return ExitCode.SOLVER_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    """
    arguments:
      argv: the command line arguments
    """
    # use rich as default Traceback handler
    rich.traceback.install(show_locals=True)

    if argv is None:
        argv = sys.argv[1:]

    parser = make_parser(argv)
    try:
        args = parser.parse_args(args=argv)
        config = make_config(args)
    except ArgumentValueError as e:
        print(e)
        return ExitCode.INVALID_INPUT

    set_log_config(args.debug, args.quiet, args.color)
    return int(run(config))


if __name__ == "__main__":
    sys.exit(main())
