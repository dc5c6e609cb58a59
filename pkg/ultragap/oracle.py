"""
randomized upper bound on the gap, independent of the active set solver.

random sign patterns with random team weights are evaluated in batches,
then the best sample of each of the leading patterns is refined by accelerated projected gradient
inside its orthant. every evaluated point is a feasible simplex, so the result never undercuts the true gap.
"""

from typing import Dict, List, Tuple, Optional
from dataclasses import dataclass

import numpy as np
import tqdm.contrib.logging

import ultragap.utils
import ultragap.logging_
from ultragap.const import (
    DEFAULT_SEED,
    ORACLE_BATCH_SIZE,
    ORACLE_POLISH_ATOL,
    DEFAULT_ORACLE_TRIALS,
    ORACLE_POLISH_PATTERNS,
    ORACLE_POLISH_ITERATIONS,
)
from ultragap.utils import DomainError
from ultragap.metric import FiniteMetric, NoNonzeroDistanceError, normalize, distance_matrix, check_float_range
from ultragap.solver import gamma, check_exponent
from ultragap.simplex import Simplex

logger = ultragap.logging_.getLogger(__name__)


@dataclass(frozen=True)
class OracleResult:
    """
    Attributes:
      p: the exponent
      value: the smallest gap found, in the units of the input metric
      witness: the simplex attaining `value`
      trials: random simplices sampled
      seed: seed of the generator
      patterns_polished: sign patterns refined after sampling
    """

    p: float
    value: float
    witness: Simplex
    trials: int
    seed: int
    patterns_polished: int = 0


def sample_signs(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """
    random team assignments with point 0 always in the M-team, each row using both teams.
    rows landing entirely in the M-team move one random other point to the N-team.
    """
    signs = rng.integers(0, 2, size=(count, n)).astype(bool)
    signs[:, 0] = True
    full = np.flatnonzero(signs.all(axis=1))
    if len(full):
        signs[full, rng.integers(1, n, size=len(full))] = False
    return signs


def sample_weights(rng: np.random.Generator, signs: np.ndarray) -> np.ndarray:
    """uniform team weights on each weight simplex via normalized exponential variates"""
    e = rng.exponential(size=signs.shape)
    pos = np.where(signs, e, 0.0)
    neg = np.where(signs, 0.0, e)
    return pos / pos.sum(axis=1, keepdims=True) - neg / neg.sum(axis=1, keepdims=True)


def gammas(d: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    """-1/2 w^T D w for each row w"""
    return -0.5 * np.einsum("bi,ij,bj->b", omegas, d, omegas)


def project_rows(v: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    euclidean projection of each row, restricted to its masked entries, onto the probability simplex.
    entries outside the mask are zero.
    """
    n = v.shape[1]
    u = np.where(mask, v, -np.inf)
    s = -np.sort(-u, axis=1)
    valid = np.isfinite(s)
    css = np.cumsum(np.where(valid, s, 0.0), axis=1)
    k = np.arange(1, n + 1)
    cond = valid & (s - (css - 1.0) / k > 0)
    # cond is a prefix of the sorted entries, never empty for a nonempty mask
    rho = cond.sum(axis=1)
    theta = (css[np.arange(len(v)), rho - 1] - 1.0) / rho
    return np.where(mask, np.maximum(v - theta[:, None], 0.0), 0.0)


def project_orthants(v: np.ndarray, positive: np.ndarray) -> np.ndarray:
    return project_rows(v, positive) - project_rows(-v, ~positive)


def polish(
    d: np.ndarray,
    omegas: np.ndarray,
    positive: np.ndarray,
    max_iterations: int = ORACLE_POLISH_ITERATIONS,
    atol: float = ORACLE_POLISH_ATOL,
) -> np.ndarray:
    """
    minimize -1/2 w^T D w over the orthant of each row, starting from that row,
    by projected gradient with Nesterov momentum and gradient-based restarts.
    """
    step = 1.0 / float(np.linalg.norm(d, 2))
    x = omegas.copy()
    y = x.copy()
    t = np.ones(len(x))

    for iteration in range(1, max_iterations + 1):
        # the gradient of -1/2 w^T D w is -D w
        x_new = project_orthants(y + step * (y @ d), positive)

        restart = np.einsum("bi,bi->b", y - x_new, x_new - x) > 0
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t**2)) / 2.0
        beta = np.where(restart, 0.0, (t - 1.0) / t_new)
        t_new = np.where(restart, 1.0, t_new)

        delta = np.abs(x_new - x).max(axis=1)
        y = x_new + beta[:, None] * (x_new - x)
        x, t = x_new, t_new
        if (delta < atol).all():
            logger.trace("polishing converged after %d iterations", iteration)
            break
    else:
        logger.trace("polishing stopped at the iteration cap %d", max_iterations)
    return x


def _best_per_pattern(
    best: Dict[bytes, Tuple[float, np.ndarray]], signs: np.ndarray, omegas: np.ndarray, values: np.ndarray
) -> None:
    packed = np.packbits(signs, axis=1)
    order = np.argsort(values, kind="stable")
    _, first = np.unique(packed[order], axis=0, return_index=True)
    for idx in order[first]:
        key = packed[idx].tobytes()
        value = float(values[idx])
        if key not in best or value < best[key][0]:
            best[key] = (value, omegas[idx])


def gap_oracle(
    m: FiniteMetric,
    p: float,
    trials: int = DEFAULT_ORACLE_TRIALS,
    seed: Optional[int] = DEFAULT_SEED,
    polish_patterns: int = ORACLE_POLISH_PATTERNS,
    disable_progress: bool = True,
) -> OracleResult:
    """
    an upper bound on the gap from random feasible simplices.

    raises:
      DomainError: `trials` is not positive, p is out of range, or distances are too large for float powering.
      NoNonzeroDistanceError: fewer than two points.
    """
    p = float(p)
    check_exponent(p)
    if trials <= 0:
        raise DomainError(f"the oracle needs a positive number of trials, got {trials}")
    if m.n < 2:
        raise NoNonzeroDistanceError("the oracle needs at least two points")
    seed = DEFAULT_SEED if seed is None else seed

    normalized, alpha = normalize(m)
    try:
        check_float_range(normalized)
    except ValueError as e:
        raise DomainError(str(e))
    scale = float(alpha) ** p if p else 1.0
    d = distance_matrix(normalized, p)
    n = m.n

    rng = np.random.default_rng(seed)
    best: Dict[bytes, Tuple[float, np.ndarray]] = {}
    batches: List[int] = [ORACLE_BATCH_SIZE] * (trials // ORACLE_BATCH_SIZE)
    if trials % ORACLE_BATCH_SIZE:
        batches.append(trials % ORACLE_BATCH_SIZE)

    with ultragap.utils.timing(f"oracle sampling {trials} simplices"):
        pb = ultragap.utils.get_progress_bar(
            batches, disable_progress, desc="sampling simplices", unit=" batches", total=len(batches)
        )
        with tqdm.contrib.logging.logging_redirect_tqdm():
            for count in pb:
                signs = sample_signs(rng, count, n)
                omegas = sample_weights(rng, signs)
                _best_per_pattern(best, signs, omegas, gammas(d, omegas))

    # ties keep the pattern first in byte order, independent of insertion order
    ranked = sorted(best.items(), key=lambda item: (item[1][0], item[0]))
    leading = ranked[: max(0, polish_patterns)]
    sampled_value, sampled_omega = ranked[0][1]
    logger.debug("best of %d samples over %d sign patterns: %.12g", trials, len(best), sampled_value)

    best_value, best_omega = sampled_value, sampled_omega
    if polish_patterns > 0:
        starts = np.array([omega for _, (_, omega) in leading])
        positive = starts > 0
        with ultragap.utils.timing(f"oracle polishing {len(leading)} patterns"):
            polished = polish(d, starts, positive)
        values = gammas(d, polished)
        i = int(np.argmin(values))
        if values[i] < best_value:
            best_value, best_omega = float(values[i]), polished[i]
        logger.debug("polishing %d patterns: %.12g", len(leading), best_value)

    witness = Simplex.normalized(best_omega, positive=best_omega > 0)
    value = gamma(d, witness.as_array())
    return OracleResult(
        p=p,
        value=value * scale,
        witness=witness,
        trials=trials,
        seed=seed,
        patterns_polished=len(leading) if polish_patterns > 0 else 0,
    )
