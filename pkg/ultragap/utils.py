import os
import time
import contextlib
from typing import Any, List, Union, Iterable, Optional, Sequence
from fractions import Fraction

import tqdm
import tabulate

import ultragap.logging_
from ultragap.const import THREADS_ENV, SIGNIFICANT_DIGITS

logger = ultragap.logging_.getLogger(__name__)

Number = Union[int, float, Fraction]


def is_exact(x: Any) -> bool:
    # bool is an int, but never a distance
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values: Iterable[Any]) -> bool:
    return all(is_exact(v) for v in values)


def round_sig(x: Number, digits: int = SIGNIFICANT_DIGITS) -> float:
    """round to `digits` significant digits, as used by all decimal output"""
    return float(f"{float(x):.{digits}g}")


def format_exact(x: Number) -> str:
    """
    render a number without losing precision:
    integers as `7`, fractions as `3/7`, floats via repr.
    """
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def format_decimal(x: Number, digits: int = SIGNIFICANT_DIGITS) -> str:
    return f"{float(x):.{digits}g}"


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    number of worker processes for the sign partition solver.

    the environment variable caps whatever was requested, and both default to the CPU count.
    """
    count = requested if requested is not None else (os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            logger.warning("ignoring %s=%r, expected an integer", THREADS_ENV, raw)
        else:
            count = min(count, cap)
    return max(1, count)


def get_progress_bar(items, disable_progress, desc="", unit="", total=None):
    pbar = tqdm.tqdm
    if disable_progress:
        # do not use tqdm to avoid unnecessary side effects when caller intends
        # to disable progress completely
        pbar = lambda s, *args, **kwargs: s
    return pbar(items, desc=desc, unit=unit, total=total)


@contextlib.contextmanager
def timing(msg):
    t0 = time.time()
    yield
    t1 = time.time()
    logger.trace("perf: %s: %0.2fs", msg, t1 - t0)


def format_table(headers: Sequence[str], rows: List[Sequence[Any]]) -> str:
    """plain text table for TRACE output"""
    return tabulate.tabulate(rows, headers=list(headers), floatfmt=f".{SIGNIFICANT_DIGITS}g")


def to_scalar(x: Number) -> Union[int, float, str]:
    """JSON-friendly value: integral numbers as int, other fractions as "a/b", floats unchanged"""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else format_exact(x)
    if isinstance(x, int):
        return x
    return float(x)


class DomainError(ValueError):
    """an argument lies outside the range an operation is defined or supported on"""

    pass
