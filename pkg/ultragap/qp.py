"""
minimize -1/2 w^T D w over one sign orthant of the normalized simplices.

an orthant is fixed by the set S of points allowed positive weight:

    sum_{i in S} w_i = 1,   w_i >= 0 for i in S
    sum_{i not in S} w_i = -1,   w_i <= 0 for i not in S

for spaces of strict p-negative type the objective is strictly convex on this polytope,
so a primal active set method finds the unique minimizer.
"""

from typing import List, Tuple, Sequence
from dataclasses import field, dataclass

import numpy as np

import ultragap.logging_
from ultragap.const import MULTIPLIER_TOL, FEASIBILITY_TOL, ACTIVE_SET_ITERATION_FACTOR

logger = ultragap.logging_.getLogger(__name__)


class ActiveSetError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OrthantSolution:
    """
    Attributes:
      subset: indices with nonnegative weight, always containing 0
      value: the minimum of -1/2 w^T D w on the orthant
      omega: the minimizer
      iterations: active set iterations used
    """

    subset: Tuple[int, ...]
    value: float
    omega: np.ndarray = field(compare=False, repr=False)
    iterations: int = 0


def _signs(n: int, subset: Sequence[int]) -> np.ndarray:
    s = -np.ones(n)
    s[list(subset)] = 1.0
    return s


def _solve_equality_qp(h: np.ndarray, positive: np.ndarray, free: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    minimize 1/2 x^T H x over the free coordinates, fixed coordinates held at zero,
    subject to the two team sums.

    returns the full-length minimizer and the two equality multipliers.
    """
    idx = np.flatnonzero(free)
    k = len(idx)
    a = np.vstack([positive[idx], ~positive[idx]]).astype(np.float64)
    kkt = np.block(
        [
            [h[np.ix_(idx, idx)], a.T],
            [a, np.zeros((2, 2))],
        ]
    )
    rhs = np.concatenate([np.zeros(k), [1.0, -1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as e:
        raise ActiveSetError(f"singular KKT system on {k} free coordinates: {e}")
    if not np.all(np.isfinite(sol)):
        raise ActiveSetError(f"non-finite KKT solution on {k} free coordinates")

    x = np.zeros(len(free))
    x[idx] = sol[:k]
    return x, sol[k:]


def solve_orthant(
    d: np.ndarray, subset: Sequence[int], max_iterations: int = 0, multiplier_tol: float = MULTIPLIER_TOL
) -> OrthantSolution:
    """
    `multiplier_tol` is how far below zero a bound multiplier may be and still count as optimal.

    raises:
      ActiveSetError: the KKT system is singular, or the iteration cap is hit.
    """
    n = d.shape[0]
    subset = tuple(sorted(subset))
    if not subset or len(subset) == n:
        raise ValueError("both teams need at least one point")
    if max_iterations <= 0:
        max_iterations = ACTIVE_SET_ITERATION_FACTOR * n

    h = -d
    s = _signs(n, subset)
    positive = s > 0
    # start in the interior: uniform weights on each team
    x = np.where(positive, 1.0 / positive.sum(), -1.0 / (~positive).sum())
    free = np.ones(n, dtype=bool)

    for iteration in range(1, max_iterations + 1):
        candidate, nu = _solve_equality_qp(h, positive, free)

        violated = free & (s * candidate < -FEASIBILITY_TOL)
        if not violated.any():
            x = np.where(s * candidate < 0, 0.0, candidate)
            # multipliers of the bounds held at zero: stationarity of the Lagrangian
            g = h @ x
            mu = s * (g + np.where(positive, nu[0], nu[1]))
            fixed = np.flatnonzero(~free)
            if len(fixed) == 0 or mu[fixed].min() >= -multiplier_tol:
                value = float(0.5 * x @ h @ x)
                logger.trace("orthant %s: %.12g after %d iterations", subset, value, iteration)
                return OrthantSolution(subset=subset, value=value, omega=x, iterations=iteration)

            release = fixed[np.argmin(mu[fixed])]
            free[release] = True
            continue

        # step toward the candidate until the first bound blocks
        direction = candidate - x
        blocking: List[Tuple[float, int]] = []
        for i in np.flatnonzero(violated):
            blocking.append((float(s[i] * x[i] / -(s[i] * direction[i])), int(i)))
        step, blocker = min(blocking)
        x = x + max(step, 0.0) * direction
        x[blocker] = 0.0
        free[blocker] = False

    raise ActiveSetError(f"orthant {subset} did not converge in {max_iterations} iterations")
