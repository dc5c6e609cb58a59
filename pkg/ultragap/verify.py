from typing import Optional
from dataclasses import dataclass

import numpy as np

import ultragap.logging_
from ultragap.const import DEFAULT_SEED, VERDICT_RTOL, DEFAULT_VERIFY_SAMPLES, MAX_ENUMERATION_POINTS
from ultragap.utils import DomainError
from ultragap.metric import FiniteMetric, normalize, distance_matrix
from ultragap.solver import GapResult, NegativeTypeError, gap
from ultragap.oracle import sample_signs, sample_weights
from ultragap.simplex import Simplex

logger = ultragap.logging_.getLogger(__name__)


@dataclass(frozen=True)
class EnhancedVerdict:
    """
    whether (G alpha^p / 2) (sum |zeta_k|)^2 + sum_ij d(z_i, z_j)^p zeta_i zeta_j <= 0 for every mean-zero zeta.

    Attributes:
      holds: the verdict, decided by comparing G alpha^p with the exact gap
      G: the constant tested
      p: the exponent
      alpha: the minimum nonzero distance
      threshold: G * alpha^p
      gap: the gap at p, or the negative value of a violating simplex when the space lacks p-negative type
      samples: random mean-zero vectors evaluated as confirming evidence
      seed: seed of the sampler
      max_sampled_lhs: the largest left-hand side over the samples, scaled so that sum |zeta| = 2
      witness: a simplex violating the inequality when it fails
    """

    holds: bool
    G: float
    p: float
    alpha: float
    threshold: float
    gap: float
    samples: int
    seed: int
    max_sampled_lhs: Optional[float] = None
    witness: Optional[Simplex] = None


def enhanced_lhs(d: np.ndarray, threshold: float, zetas: np.ndarray) -> np.ndarray:
    """left-hand side of the enhanced inequality for each row of `zetas`"""
    l1 = np.abs(zetas).sum(axis=1)
    return threshold / 2 * l1**2 + np.einsum("bi,ij,bj->b", zetas, d, zetas)


def verify_enhanced(
    m: FiniteMetric,
    G: float,
    p: float,
    samples: int = DEFAULT_VERIFY_SAMPLES,
    seed: Optional[int] = DEFAULT_SEED,
    max_points: int = MAX_ENUMERATION_POINTS,
    workers: Optional[int] = None,
) -> EnhancedVerdict:
    """
    decide the enhanced p-negative type inequality with constant G.

    it holds for all mean-zero zeta exactly when G alpha^p does not exceed the gap,
    compared with relative tolerance VERDICT_RTOL. sampled vectors only confirm the verdict.

    raises:
      DomainError: G is negative or `samples` is negative.
      CapacityError: see `gap`.
    """
    if G < 0:
        raise DomainError(f"the constant G must be nonnegative, got {G}")
    if samples < 0:
        raise DomainError(f"the sample count must be nonnegative, got {samples}")
    seed = DEFAULT_SEED if seed is None else seed
    p = float(p)

    _, alpha = normalize(m)
    alpha = float(alpha)
    threshold = G * alpha**p if p else float(G)

    witness: Optional[Simplex]
    try:
        result: GapResult = gap(m, p, max_points=max_points, workers=workers)
    except NegativeTypeError as e:
        logger.info("no %g-negative type, the inequality fails for every G", p)
        value = e.value
        holds = False
        witness = e.witness
    else:
        value = result.value
        holds = threshold <= value * (1 + VERDICT_RTOL)
        witness = None if holds else result.witness

    max_lhs: Optional[float] = None
    if samples > 0:
        rng = np.random.default_rng(seed)
        d = distance_matrix(m, p)
        lhs = enhanced_lhs(d, threshold, sample_weights(rng, sample_signs(rng, samples, m.n)))
        max_lhs = float(lhs.max())
        if holds and max_lhs > 2 * VERDICT_RTOL * max(threshold, 1.0):
            logger.warning("a sampled vector violates the inequality although the gap admits G: %.6g", max_lhs)
        logger.debug("largest sampled left-hand side over %d vectors: %.6g", samples, max_lhs)

    return EnhancedVerdict(
        holds=holds,
        G=float(G),
        p=p,
        alpha=alpha,
        threshold=threshold,
        gap=value,
        samples=samples,
        seed=seed,
        max_sampled_lhs=max_lhs,
        witness=witness,
    )
