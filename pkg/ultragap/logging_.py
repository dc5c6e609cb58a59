import sys
import logging
from enum import Enum
from typing import TextIO, Optional

TRACE = logging.DEBUG - 1
setattr(logging, "TRACE", TRACE)
logging.addLevelName(TRACE, "TRACE")


class DebugLevel(int, Enum):
    NONE = 0
    DEFAULT = 1
    # per-iteration details of the sign partition solver
    TRACE = 2
    # every sub-problem, including the active set steps
    SUPERTRACE = 3


RESET = "\x1b[0m"

PLAIN_FORMAT = "%(levelname)s: %(name)s: %(message)s"


def make_format(color: str) -> str:
    return f"{color}%(levelname)s{RESET}: %(name)s: %(message)s"


COLORS = {
    TRACE: "\x1b[34;21m",
    logging.DEBUG: "\x1b[38;21m",
    logging.INFO: "\x1b[36;21m",
    logging.WARNING: "\x1b[33;21m",
    logging.ERROR: "\x1b[31;21m",
    logging.CRITICAL: "\x1b[31;1m",
}

FORMATTERS = {level: logging.Formatter(make_format(color)) for level, color in COLORS.items()}


class ColorFormatter(logging.Formatter):
    """
    color the level name of each record, falling back to plain output for unknown levels.

    via: https://stackoverflow.com/a/56944256/87207
    """

    def format(self, record):
        formatter = FORMATTERS.get(record.levelno)
        if formatter is None:
            return logging.Formatter(PLAIN_FORMAT).format(record)
        return formatter.format(record)


def make_formatter(color: str, stream: Optional[TextIO] = None) -> logging.Formatter:
    """
    pick a formatter for the `--color` choice: auto, always or never.
    "auto" colors only when `stream`, STDERR by default, is a terminal.
    """
    if color == "auto":
        stream = stream if stream is not None else sys.stderr
        color = "always" if stream.isatty() else "never"
    if color == "never":
        return logging.Formatter(PLAIN_FORMAT)
    return ColorFormatter()


class LoggerWithTrace(logging.getLoggerClass()):  # type: ignore
    def trace(self, msg, *args, **kwargs):
        if self.isEnabledFor(TRACE):
            self.log(TRACE, msg, *args, **kwargs)


logging.setLoggerClass(LoggerWithTrace)


def getLogger(name) -> LoggerWithTrace:
    """
    a logging constructor that guarantees that the TRACE level is available.
    use this just like `logging.getLogger`.

    importing this module patches stdlib logging, and callers may import modules in any order,
    so use `ultragap.logging_.getLogger()` rather than `logging.getLogger()` to rely on `.trace()`.
    """
    return logging.getLogger(name)  # type: ignore
