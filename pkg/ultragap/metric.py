import csv
import math
import itertools
from enum import Enum
from typing import List, Tuple, Iterable, Optional, Sequence
from pathlib import Path
from fractions import Fraction
from dataclasses import field, dataclass

import numpy as np

import ultragap.logging_
from ultragap.const import METRIC_RTOL, MAX_FLOAT_ENTRY, MAX_REPORTED_INDICES
from ultragap.utils import Number, is_exact, all_exact, format_exact

logger = ultragap.logging_.getLogger(__name__)


class ArithmeticMode(str, Enum):
    FLOAT = "float"
    RATIONAL = "rational"


class MetricKind(str, Enum):
    GENERAL = "general-metric"
    ULTRAMETRIC = "ultrametric"


class MetricStructureError(ValueError):
    """
    the matrix cannot describe a metric at all: it is not square, not symmetric,
    has a nonzero diagonal, a negative entry, or two distinct points at distance zero.

    the message names the offending indices, the first MAX_REPORTED_INDICES of them.
    """

    def __init__(self, reason: str, indices: Sequence[Tuple[int, ...]] = ()):
        self.reason = reason
        self.indices = tuple(indices)
        message = reason
        if self.indices:
            shown = ", ".join("(" + ", ".join(map(str, ix)) + ")" for ix in self.indices[:MAX_REPORTED_INDICES])
            more = len(self.indices) - MAX_REPORTED_INDICES
            message += f" at {shown}" + (f" and {more} more" if more > 0 else "")
        super().__init__(message)


class MetricViolation(ValueError):
    def __init__(self, message: str, violations: Sequence["Violation"] = ()):
        super().__init__(message)
        self.violations = tuple(violations)


class NoNonzeroDistanceError(ValueError):
    pass


class InvalidInputFile(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + location)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Violation:
    """
    a triple (i, j, k) where the pair (i, j) is farther apart than allowed via the witness k.

    Attributes:
      i, j: the offending pair, i < j
      k: the third point
      lhs: d(i, j)
      rhs: max(d(i, k), d(j, k)) for the strong triangle inequality, d(i, k) + d(k, j) otherwise
    """

    i: int
    j: int
    k: int
    lhs: Number
    rhs: Number


@dataclass(frozen=True)
class FiniteMetric:
    labels: Tuple[str, ...]
    dist: Tuple[Tuple[Number, ...], ...]
    kind: MetricKind
    mode: ArithmeticMode = ArithmeticMode.FLOAT

    @property
    def n(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> Number:
        return self.dist[i][j]

    def entries(self) -> Iterable[Tuple[int, int, Number]]:
        """off-diagonal entries of the upper triangle"""
        for i, j in itertools.combinations(range(self.n), 2):
            yield i, j, self.dist[i][j]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.dist], dtype=np.float64)

    def __str__(self):
        return f"{self.kind.value} on {self.n} points ({self.mode.value})"

    @classmethod
    def from_matrix(
        cls,
        matrix: Sequence[Sequence[Number]],
        labels: Optional[Sequence[str]] = None,
        mode: Optional[ArithmeticMode] = None,
    ) -> "FiniteMetric":
        """
        strict constructor: like `validate`, but raises when the triangle inequality fails.

        raises:
          MetricStructureError: see `validate`.
          MetricViolation: some triple violates the triangle inequality.
        """
        report = validate(matrix, labels, mode)
        if report.metric is None:
            v = report.triangle_violations[0]
            raise MetricViolation(
                f"not a metric: d({v.i}, {v.j}) = {v.lhs} exceeds {v.rhs} via {v.k}", report.triangle_violations
            )
        return report.metric


@dataclass(frozen=True)
class ValidationReport:
    """
    outcome of `validate`.

    `metric` is set whenever the ordinary triangle inequality holds.
    it is an ultrametric exactly when `ultrametric_violations` is empty.
    """

    metric: Optional[FiniteMetric]
    triangle_violations: Tuple[Violation, ...] = field(default_factory=tuple)
    ultrametric_violations: Tuple[Violation, ...] = field(default_factory=tuple)
    labels: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def kind(self) -> Optional[MetricKind]:
        return self.metric.kind if self.metric is not None else None

    @property
    def is_metric(self) -> bool:
        return self.metric is not None

    @property
    def is_ultrametric(self) -> bool:
        return self.kind == MetricKind.ULTRAMETRIC


def parse_number(text: str, mode: ArithmeticMode) -> Number:
    """
    parse a decimal (`1.5`, `2e-3`) or rational (`3/2`) entry.

    in rational mode decimals are read exactly, so `0.1` becomes 1/10.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty entry")
    if mode == ArithmeticMode.RATIONAL:
        value = Fraction(s)
    elif "/" in s:
        value = float(Fraction(s))
    else:
        value = float(s)
    if not math.isfinite(float(value)):
        raise ValueError(f"entry is not finite: {text!r}")
    return value


def detect_mode(values: Iterable[Number]) -> ArithmeticMode:
    return ArithmeticMode.RATIONAL if all_exact(values) else ArithmeticMode.FLOAT


def coerce(x: Number, mode: ArithmeticMode) -> Number:
    if mode == ArithmeticMode.RATIONAL:
        return Fraction(x)
    return float(x)


def default_labels(n: int) -> Tuple[str, ...]:
    return tuple(f"z{i + 1}" for i in range(n))


def _check_structure(matrix: Sequence[Sequence[Number]], labels: Sequence[str]) -> None:
    n = len(matrix)
    if n == 0:
        raise MetricStructureError("empty matrix")
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise MetricStructureError(f"row {i} has {len(row)} entries, expected {n}", [(i,)])
    if len(labels) != n:
        raise MetricStructureError(f"{len(labels)} labels for {n} points")
    if len(set(labels)) != n:
        duplicates = sorted({label for label in labels if list(labels).count(label) > 1})
        raise MetricStructureError(f"duplicate labels: {', '.join(duplicates)}")

    for i in range(n):
        for j in range(n):
            if not math.isfinite(float(matrix[i][j])):
                raise MetricStructureError(f"entry ({i}, {j}) is not finite", [(i, j)])

    nonzero_diagonal = [(i, i) for i in range(n) if matrix[i][i] != 0]
    if nonzero_diagonal:
        raise MetricStructureError("nonzero diagonal", nonzero_diagonal)

    negative = [(i, j) for i in range(n) for j in range(n) if matrix[i][j] < 0]
    if negative:
        raise MetricStructureError("negative entries", negative)

    asymmetric = [(i, j) for i, j in itertools.combinations(range(n), 2) if matrix[i][j] != matrix[j][i]]
    if asymmetric:
        raise MetricStructureError("asymmetric matrix", asymmetric)

    duplicate_points = [(i, j) for i, j in itertools.combinations(range(n), 2) if matrix[i][j] == 0]
    if duplicate_points:
        raise MetricStructureError("distinct points at distance zero", duplicate_points)


def _exceeds(lhs: Number, rhs: Number, exact: bool) -> bool:
    if exact:
        return lhs > rhs
    return lhs > rhs * (1 + METRIC_RTOL)


def validate(
    matrix: Sequence[Sequence[Number]],
    labels: Optional[Sequence[str]] = None,
    mode: Optional[ArithmeticMode] = None,
) -> ValidationReport:
    """
    check the metric axioms and the strong triangle inequality for every triple.

    rational mode compares exactly, float mode allows a relative slack of `METRIC_RTOL`.
    when `mode` is not given it is inferred: all entries int or Fraction means rational.

    raises:
      MetricStructureError: the matrix is not square, symmetric, zero on the diagonal and positive elsewhere.
    """
    if labels is None:
        labels = default_labels(len(matrix))
    _check_structure(matrix, labels)

    if mode is None:
        mode = detect_mode(x for row in matrix for x in row)
    n = len(matrix)
    dist = tuple(tuple(coerce(x, mode) for x in row) for row in matrix)
    exact = mode == ArithmeticMode.RATIONAL

    triangle: List[Violation] = []
    strong: List[Violation] = []
    for i, j in itertools.combinations(range(n), 2):
        dij = dist[i][j]
        for k in range(n):
            if k == i or k == j:
                continue
            dik, djk = dist[i][k], dist[j][k]
            if _exceeds(dij, dik + djk, exact):
                triangle.append(Violation(i, j, k, dij, dik + djk))
            if _exceeds(dij, max(dik, djk), exact):
                strong.append(Violation(i, j, k, dij, max(dik, djk)))

    if triangle:
        logger.debug("not a metric: %d triangle inequality violations", len(triangle))
        return ValidationReport(
            metric=None,
            triangle_violations=tuple(triangle),
            ultrametric_violations=tuple(strong),
            labels=tuple(labels),
        )

    kind = MetricKind.GENERAL if strong else MetricKind.ULTRAMETRIC
    logger.debug("validated %s on %d points", kind.value, n)
    metric = FiniteMetric(labels=tuple(labels), dist=dist, kind=kind, mode=mode)
    return ValidationReport(metric=metric, ultrametric_violations=tuple(strong), labels=tuple(labels))


def min_nonzero_distance(m: FiniteMetric) -> Number:
    if m.n < 2:
        raise NoNonzeroDistanceError("a one-point space has no nonzero distance")
    return min(x for _, _, x in m.entries())


def max_distance(m: FiniteMetric) -> Number:
    if m.n < 2:
        return 0
    return max(x for _, _, x in m.entries())


def power_entry(x: Number, p: Number) -> Number:
    """x^p with the convention 0^0 = 0, exact for rational x and integral p"""
    if x == 0:
        return 0 if is_exact(x) else 0.0
    if p == 0:
        return 1 if is_exact(x) else 1.0
    if is_exact(x) and is_exact(p) and Fraction(p).denominator == 1:
        return Fraction(x) ** int(p)
    return float(x) ** float(p)


def power(m: FiniteMetric, p: Number) -> FiniteMetric:
    """
    entrywise p-th power with 0^0 = 0.

    ultrametrics stay ultrametrics since the maximum is monotone under powering.
    other kinds are carried over unchanged, the result may then violate the triangle inequality for p > 1.
    """
    if p < 0:
        raise ValueError(f"exponent must be nonnegative, got {p}")
    dist = tuple(tuple(power_entry(x, p) for x in row) for row in m.dist)
    mode = ArithmeticMode.RATIONAL if all_exact(x for row in dist for x in row) else ArithmeticMode.FLOAT
    if mode == ArithmeticMode.RATIONAL:
        dist = tuple(tuple(Fraction(x) for x in row) for row in dist)
    return FiniteMetric(labels=m.labels, dist=dist, kind=m.kind, mode=mode)


def scale(m: FiniteMetric, c: Number) -> FiniteMetric:
    if c <= 0:
        raise ValueError(f"scale must be positive, got {c}")
    c = coerce(c, m.mode) if is_exact(c) else float(c)
    mode = m.mode if is_exact(c) else ArithmeticMode.FLOAT
    dist = tuple(tuple(coerce(x * c, mode) for x in row) for row in m.dist)
    return FiniteMetric(labels=m.labels, dist=dist, kind=m.kind, mode=mode)


def normalize(m: FiniteMetric) -> Tuple[FiniteMetric, Number]:
    """
    divide by the minimum nonzero distance.

    returns the normalized metric and the scale, so that gaps of `m` are gaps of the
    normalized metric times scale^p.
    """
    alpha = min_nonzero_distance(m)
    if alpha == 1:
        return m, alpha
    dist = tuple(tuple(x / alpha for x in row) for row in m.dist)
    return FiniteMetric(labels=m.labels, dist=dist, kind=m.kind, mode=m.mode), alpha


def is_scaled_discrete(m: FiniteMetric) -> bool:
    """all nonzero distances are equal"""
    if m.n < 2:
        return True
    return len({x for _, _, x in m.entries()}) == 1


def check_float_range(m: FiniteMetric) -> None:
    """
    reject normalized float metrics whose entries would overflow when powered.

    raises:
      ValueError: some normalized distance exceeds MAX_FLOAT_ENTRY.
    """
    if m.mode == ArithmeticMode.RATIONAL:
        return
    largest = max_distance(m)
    if largest > MAX_FLOAT_ENTRY:
        raise ValueError(
            f"normalized distance {largest:g} exceeds {MAX_FLOAT_ENTRY:g}, rescale the input or use rational mode"
        )


def distance_matrix(m: FiniteMetric, p: float) -> np.ndarray:
    """the float matrix D_p = (d(i, j)^p) with 0^0 = 0 on the diagonal"""
    d = m.as_array()
    if p == 0:
        dp = np.ones_like(d)
    else:
        dp = np.power(d, float(p))
    np.fill_diagonal(dp, 0.0)
    return dp


def read_csv(path: Path, mode: ArithmeticMode = ArithmeticMode.FLOAT) -> ValidationReport:
    """
    read a labelled distance matrix: the first row holds the labels, each following row one matrix row.

    raises:
      InvalidInputFile: the file cannot be parsed, with the offending line and column.
      MetricStructureError: the parsed matrix cannot describe a metric.
    """
    try:
        with path.open("r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if any(cell.strip() for cell in row)]
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise InvalidInputFile(f"cannot read {path}: {e}")

    if not rows:
        raise InvalidInputFile(f"{path} is empty")

    labels = [cell.strip() for cell in rows[0]]
    n = len(labels)
    if len(rows) - 1 != n:
        raise InvalidInputFile(f"{n} labels but {len(rows) - 1} matrix rows", line=len(rows))

    matrix: List[List[Number]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise InvalidInputFile(f"expected {n} entries, found {len(row)}", line=lineno)
        parsed: List[Number] = []
        for column, cell in enumerate(row, start=1):
            try:
                parsed.append(parse_number(cell, mode))
            except (ValueError, ZeroDivisionError) as e:
                raise InvalidInputFile(f"cannot parse entry {cell!r}: {e}", line=lineno, column=column)
        matrix.append(parsed)

    logger.debug("read %d x %d matrix from %s (%s)", n, n, path, mode.value)
    return validate(matrix, labels, mode=mode)


def write_csv(m: FiniteMetric) -> str:
    lines = [",".join(m.labels)]
    for row in m.dist:
        lines.append(",".join(format_exact(x) for x in row))
    return "\n".join(lines) + "\n"
