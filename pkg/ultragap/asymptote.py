from enum import Enum
from typing import List, Tuple, Sequence
from fractions import Fraction
from dataclasses import dataclass

import ultragap.logging_
from ultragap.utils import DomainError
from ultragap.metric import MetricKind, FiniteMetric
from ultragap.simplex import Simplex
from ultragap.dendrogram import DendroTree, CoterieProfile, tree, coterie_profile, build_dendrogram

logger = ultragap.logging_.getLogger(__name__)


def theta(n: int) -> Fraction:
    """
    the gap of the discrete metric on n points: 1/2 (1/floor(n/2) + 1/ceil(n/2)).
    this is 2/n for even n and 2n/(n^2 - 1) for odd n.
    """
    if n < 2:
        raise DomainError(f"theta is defined for n >= 2, got {n}")
    return Fraction(1, 2) * (Fraction(1, n // 2) + Fraction(1, (n + 1) // 2))


def _harmonic(sizes: Sequence[int]) -> Fraction:
    if not sizes:
        raise DomainError("at least one coterie is needed")
    return 1 / sum(1 / theta(s) for s in sizes)


def gamma_infinity(t: DendroTree) -> Fraction:
    """
    the limit of the normalized gap as p grows: the reciprocal of the sum of 1/theta over the coterie sizes.

    the limit is a gap of the metric scaled to minimum distance 1.
    """
    if t.n < 2:
        raise DomainError("the asymptote needs at least two points")
    return _harmonic([len(c) for c in t.coteries])


def flat_witness(t: DendroTree) -> Simplex:
    """
    a flat simplex attaining the asymptote at p = 1.

    every coterie gives its first floor(|B|/2) points to the M-team and the rest to the N-team with uniform
    weights, and coterie k is scaled by (1/theta_k) / (sum of 1/theta_j).
    """
    sizes = [len(c) for c in t.coteries]
    inverse = [1 / theta(s) for s in sizes]
    total = sum(inverse)

    omega: List[Fraction] = [Fraction(0)] * t.n
    for coterie, inv in zip(t.coteries, inverse):
        weight = inv / total
        half = len(coterie) // 2
        rest = len(coterie) - half
        for position, i in enumerate(coterie):
            if position < half:
                omega[i] = weight / half
            else:
                omega[i] = -weight / rest
    return Simplex(tuple(omega))


class ConstancyKind(str, Enum):
    SCALED_DISCRETE = "scaled-discrete"
    CONSTANT_EVEN_COTERIES = "constant-even-coteries"
    NON_CONSTANT = "non-constant"


@dataclass(frozen=True)
class ConstancyClass:
    """
    Attributes:
      kind: why the normalized gap is, or is not, constant in p
      gamma_zero: theta(n), the gap at p = 0
      gamma_infinity: the limit of the normalized gap
      profile: coterie sizes and the points outside every coterie
    """

    kind: ConstancyKind
    gamma_zero: Fraction
    gamma_infinity: Fraction
    profile: CoterieProfile

    @property
    def constant(self) -> bool:
        return self.kind != ConstancyKind.NON_CONSTANT


def classify(m: FiniteMetric) -> ConstancyClass:
    """
    the normalized gap is constant on [0, infinity) exactly when the metric is a scaled discrete metric,
    or when the coteries cover the space and all have even size.

    raises:
      DomainError: the metric is not an ultrametric on at least two points.
    """
    if m.kind != MetricKind.ULTRAMETRIC:
        raise DomainError("classification needs an ultrametric")
    if m.n < 2:
        raise DomainError("classification needs at least two points")

    t = tree(build_dendrogram(m))
    profile = coterie_profile(t)
    if t.ell == 1:
        kind = ConstancyKind.SCALED_DISCRETE
    elif profile.covered == t.n and coterie_bound(profile.sizes).equal:
        kind = ConstancyKind.CONSTANT_EVEN_COTERIES
    else:
        kind = ConstancyKind.NON_CONSTANT

    logger.debug("coteries: %s", ", ".join(f"{labels} ({size})" for labels, size in coterie_summary(t)))
    result = ConstancyClass(kind=kind, gamma_zero=theta(m.n), gamma_infinity=gamma_infinity(t), profile=profile)
    logger.debug("classified as %s: gap from %s to %s", kind.value, result.gamma_zero, result.gamma_infinity)
    return result


@dataclass(frozen=True)
class CoterieBound:
    """
    theta of the covered size never exceeds the asymptote of the coteries,
    with equality exactly for one coterie or all sizes even.
    """

    lower: Fraction
    asymptote: Fraction

    @property
    def equal(self) -> bool:
        return self.lower == self.asymptote


def coterie_bound(sizes: Sequence[int]) -> CoterieBound:
    if any(s < 2 for s in sizes):
        raise DomainError(f"coteries have at least two points, got sizes {list(sizes)}")
    return CoterieBound(lower=theta(sum(sizes)), asymptote=_harmonic(sizes))


def coterie_summary(t: DendroTree) -> Tuple[Tuple[str, int], ...]:
    """coterie labels and sizes, for reports"""
    return tuple((t.block_labels(c), len(c)) for c in t.coteries)
