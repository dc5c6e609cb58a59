import math
import itertools
import dataclasses
from typing import List, Tuple, Iterator, Optional, Sequence
from fractions import Fraction
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import tqdm.contrib.logging

import ultragap.utils
import ultragap.logging_
import ultragap.asymptote
from ultragap.qp import OrthantSolution, solve_orthant
from ultragap.const import (
    P_MAX,
    TIE_TOL,
    MULTIPLIER_TOL,
    NEGATIVE_TYPE_RTOL,
    PARALLEL_MIN_POINTS,
    MAX_ENUMERATION_POINTS,
)
from ultragap.utils import DomainError
from ultragap.metric import (
    MetricKind,
    FiniteMetric,
    NoNonzeroDistanceError,
    normalize,
    distance_matrix,
    check_float_range,
)
from ultragap.simplex import Simplex, reconstruct, level_coefficients
from ultragap.dendrogram import DendroTree, tree, build_dendrogram

logger = ultragap.logging_.getLogger(__name__)


class CapacityError(ValueError):
    def __init__(self, n: int, limit: int):
        super().__init__(
            f"{n} points exceed the exact solver limit of {limit}, use the randomized oracle for an upper bound"
        )
        self.n = n
        self.limit = limit


class NegativeTypeError(ValueError):
    """
    the space does not have p-negative type: some simplex has a negative p-simplex gap.

    Attributes:
      p: the exponent
      witness: a simplex with negative gap
      value: its gap, in the units of the input metric
    """

    def __init__(self, p: float, witness: Simplex, value: float):
        super().__init__(f"no {p:g}-negative type: a simplex has gap {value:.6g}")
        self.p = p
        self.witness = witness
        self.value = value


@dataclass(frozen=True)
class GapResult:
    """
    Attributes:
      p: the exponent
      value: the gap of the input metric at p
      witness: a simplex attaining it
      partitions_explored: number of sign orthants solved
      scale_applied: alpha_1^p, the factor between the gap of the normalized metric and `value`
    """

    p: float
    value: float
    witness: Simplex
    partitions_explored: int
    scale_applied: float

    @property
    def normalized_value(self) -> float:
        """the gap of the metric scaled to minimum distance 1"""
        return self.value / self.scale_applied


def rounding_floor(d: np.ndarray) -> float:
    """
    absolute noise in values and multipliers computed from the normalized D_p:
    about n^2 ulps of its largest entry, never below MULTIPLIER_TOL.
    """
    n = d.shape[0]
    return max(MULTIPLIER_TOL, n**2 * float(np.abs(d).max()) * float(np.finfo(np.float64).eps))


def check_exponent(p: float) -> None:
    if not (0 <= p <= P_MAX) or math.isnan(p):
        raise DomainError(f"p = {p} is outside the supported range [0, {P_MAX:g}]")


def mean_zero_basis(n: int) -> np.ndarray:
    """orthonormal basis of the vectors summing to zero, as columns"""
    _, _, vt = np.linalg.svd(np.ones((1, n)))
    return vt[1:].T


def gamma(d: np.ndarray, omega: np.ndarray) -> float:
    return float(-0.5 * omega @ d @ omega)


def _check_matrix(d: np.ndarray, p: float, scale: float) -> None:
    n = d.shape[0]
    z = mean_zero_basis(n)
    eigenvalues, eigenvectors = np.linalg.eigh(z.T @ (-d) @ z)
    floor = NEGATIVE_TYPE_RTOL * max(1.0, float(np.abs(d).max()))
    logger.debug("smallest eigenvalue on the mean-zero subspace at p=%g: %.6g", p, eigenvalues[0])
    if eigenvalues[0] >= -floor:
        return

    v = z @ eigenvectors[:, 0]
    witness = Simplex.normalized(2 * v / np.abs(v).sum())
    raise NegativeTypeError(p, witness, gamma(d, witness.as_array()) * scale)


def check_negative_type(m: FiniteMetric, p: float) -> None:
    """
    raises:
      NegativeTypeError: with a violating simplex taken from the most negative eigenvector of -D_p
        restricted to the mean-zero subspace.
    """
    normalized, alpha = normalize(m)
    _check_matrix(distance_matrix(normalized, p), p, float(alpha) ** p if p else 1.0)


def enumerate_subsets(n: int) -> Iterator[Tuple[int, ...]]:
    """
    the positive sides S of all sign patterns up to swapping the teams:
    every S contains 0 and misses at least one point, 2^(n-1) - 1 in total.
    """
    rest = range(1, n)
    for size in range(0, n - 1):
        for combo in itertools.combinations(rest, size):
            yield (0, *combo)


def _solve_chunk(d: np.ndarray, subsets: Sequence[Tuple[int, ...]], tol: float) -> List[OrthantSolution]:
    return [solve_orthant(d, s, multiplier_tol=tol) for s in subsets]


def _chunks(items: Sequence, size: int) -> Iterator[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def solve_orthants(
    d: np.ndarray,
    subsets: Sequence[Tuple[int, ...]],
    workers: int = 1,
    disable_progress: bool = True,
    tol: float = MULTIPLIER_TOL,
) -> List[OrthantSolution]:
    """solve every orthant, returning results in the order of `subsets` whatever the worker count"""
    n = d.shape[0]
    if workers <= 1 or n < PARALLEL_MIN_POINTS:
        pb = ultragap.utils.get_progress_bar(
            subsets, disable_progress, desc="solving sign partitions", unit=" partitions", total=len(subsets)
        )
        with tqdm.contrib.logging.logging_redirect_tqdm():
            return [solve_orthant(d, s, multiplier_tol=tol) for s in pb]

    size = max(1, math.ceil(len(subsets) / (workers * 4)))
    chunks = list(_chunks(subsets, size))
    logger.debug("solving %d partitions in %d chunks on %d workers", len(subsets), len(chunks), workers)
    results: List[OrthantSolution] = []
    with ProcessPoolExecutor(max_workers=workers) as executor:
        pb = ultragap.utils.get_progress_bar(
            executor.map(_solve_chunk, itertools.repeat(d), chunks, itertools.repeat(tol)),
            disable_progress,
            desc="solving sign partitions",
            unit=" chunks",
            total=len(chunks),
        )
        with tqdm.contrib.logging.logging_redirect_tqdm():
            for chunk in pb:
                results.extend(chunk)
    return results


def to_witness(s: OrthantSolution, n: int) -> Simplex:
    positive = np.zeros(n, dtype=bool)
    positive[list(s.subset)] = True
    return Simplex.normalized(s.omega, positive=positive)


def rescore(t: DendroTree, s: OrthantSolution, p: float) -> OrthantSolution:
    """
    the orthant value summed over the dendrogram levels from block imbalances of order one.
    the quadratic form over D_p cancels entries up to alpha_max^p and loses that much precision at large p.
    """
    value = reconstruct(level_coefficients(t, to_witness(s, t.n)), p)
    return dataclasses.replace(s, value=float(value))


def reduce_solutions(solutions: Sequence[OrthantSolution]) -> OrthantSolution:
    """the minimum, ties within TIE_TOL going to the lexicographically smallest subset"""
    if not solutions:
        raise ValueError("no sub-problems to reduce")
    lowest = min(s.value for s in solutions)
    return min((s for s in solutions if s.value <= lowest + TIE_TOL), key=lambda s: s.subset)


def gap(
    m: FiniteMetric,
    p: float,
    max_points: int = MAX_ENUMERATION_POINTS,
    workers: Optional[int] = None,
    disable_progress: bool = True,
) -> GapResult:
    """
    the exact p-negative type gap with a witness simplex.

    every sign pattern of the weights is a convex sub-problem, solved by the active set method.
    the computation runs on the metric scaled to minimum distance 1, and is scaled back by alpha_1^p.

    raises:
      DomainError: p outside [0, P_MAX], or normalized distances too large for float powering.
      CapacityError: more than `max_points` points.
      NegativeTypeError: the space lacks p-negative type.
      ActiveSetError: a sub-problem did not converge.
    """
    p = float(p)
    check_exponent(p)
    if m.n < 2:
        raise NoNonzeroDistanceError("the gap needs at least two points")
    if m.n > max_points:
        raise CapacityError(m.n, max_points)

    normalized, alpha = normalize(m)
    try:
        check_float_range(normalized)
    except ValueError as e:
        raise DomainError(str(e))
    scale = float(alpha) ** p if p else 1.0

    d = distance_matrix(normalized, p)
    _check_matrix(d, p, scale)

    subsets = list(enumerate_subsets(m.n))
    with ultragap.utils.timing(f"gap at p={p:g} over {len(subsets)} partitions"):
        solutions = solve_orthants(
            d,
            subsets,
            workers=ultragap.utils.resolve_workers(workers),
            disable_progress=disable_progress,
            tol=rounding_floor(d),
        )
    best = reduce_solutions(solutions)
    if normalized.kind == MetricKind.ULTRAMETRIC:
        # near ties are re-scored over the dendrogram levels before picking the minimum
        t = tree(build_dendrogram(normalized))
        floor = best.value + rounding_floor(d)
        best = reduce_solutions([rescore(t, s, p) for s in solutions if s.value <= floor])
        witness = to_witness(best, m.n)
        value = best.value
    else:
        witness = to_witness(best, m.n)
        value = gamma(d, witness.as_array())
    logger.debug("gap at p=%g: %.12g (normalized) from subset %s", p, value, best.subset)
    return GapResult(
        p=p,
        value=value * scale,
        witness=witness,
        partitions_explored=len(subsets),
        scale_applied=scale,
    )


@dataclass(frozen=True)
class GapCurve:
    """
    gaps along an exponent grid.

    Attributes:
      points: one result per grid point
      gamma_infinity: the limit of the normalized gap, known exactly for ultrametrics
    """

    points: Tuple[GapResult, ...]
    gamma_infinity: Optional[Fraction] = None

    def residual(self, point: GapResult) -> Optional[float]:
        if self.gamma_infinity is None:
            return None
        return float(self.gamma_infinity) - point.normalized_value

    @property
    def final_residual(self) -> Optional[float]:
        return self.residual(self.points[-1]) if self.points else None


def check_grid(p_grid: Sequence[float]) -> None:
    if len(p_grid) == 0:
        raise DomainError("empty exponent grid")
    for p in p_grid:
        check_exponent(p)
    for a, b in zip(p_grid, p_grid[1:]):
        if not b > a:
            raise DomainError(f"exponent grid is not strictly increasing at {a:g}, {b:g}")


def gap_curve(
    m: FiniteMetric,
    p_grid: Sequence[float],
    max_points: int = MAX_ENUMERATION_POINTS,
    workers: Optional[int] = None,
    disable_progress: bool = True,
) -> GapCurve:
    """
    the gap at every grid point.
    the normalized gaps of an ultrametric are non-decreasing and bounded by the asymptote; drift is logged.
    """
    grid = [float(p) for p in p_grid]
    check_grid(grid)

    gamma_infinity: Optional[Fraction] = None
    if m.kind == MetricKind.ULTRAMETRIC and m.n >= 2:
        gamma_infinity = ultragap.asymptote.gamma_infinity(tree(build_dendrogram(m)))

    points: List[GapResult] = []
    pb = ultragap.utils.get_progress_bar(grid, disable_progress, desc="computing gap curve", unit=" exponents")
    with tqdm.contrib.logging.logging_redirect_tqdm():
        for p in pb:
            points.append(gap(m, p, max_points=max_points, workers=workers, disable_progress=True))

    curve = GapCurve(points=tuple(points), gamma_infinity=gamma_infinity)
    for prev, cur in zip(points, points[1:]):
        if cur.normalized_value < prev.normalized_value - rounding_floor(distance_matrix(normalize(m)[0], cur.p)):
            logger.warning(
                "gap decreased from %.12g at p=%g to %.12g at p=%g",
                prev.normalized_value,
                prev.p,
                cur.normalized_value,
                cur.p,
            )
    if gamma_infinity is not None:
        logger.debug("residual to the asymptote %s at p=%g: %.3g", gamma_infinity, grid[-1], curve.final_residual)
    return curve

